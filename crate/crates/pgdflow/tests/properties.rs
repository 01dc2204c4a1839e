use proptest::prelude::*;

use pgdflow::mapping::{SwimmerGeometry, VOLUME_CONSTANT};
use pgdflow::mesh::ParametricGrid;
use pgdflow::pgd::{normalize_mode, Provenance, SeparatedSolution};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn normalised_modes_rebuild_their_rank_one_term(
        state in prop::collection::vec(-10.0f64..10.0, 12),
        psi in prop::collection::vec(0.1f64..5.0, 4),
    ) {
        let blocks = [2, 1, 3, 2, 4];
        let mode = normalize_mode(&state, &blocks, vec![psi.clone()]).unwrap();
        let n: f64 = psi.iter().map(|x| x * x).sum::<f64>().sqrt();
        for (a, b) in mode.spatial_state().iter().zip(&state) {
            prop_assert!((a - b * n).abs() <= 1e-12 * (1.0 + b.abs() * n));
        }
        let unit: f64 = mode.psi[0].iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assert!((unit - 1.0).abs() < 1e-14);
        prop_assert!(mode.sigma.iter().all(|&s| s >= 0.0));
    }

    #[test]
    fn parametric_interpolation_reproduces_polynomials(
        coeffs in prop::collection::vec(-2.0f64..2.0, 4),
        mu in -1.0f64..1.0,
        elements in 1usize..5,
    ) {
        let g = ParametricGrid::new(-1.0, 1.0, elements, 3).unwrap();
        let p = |x: f64| coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c);
        let nodal: Vec<f64> = g.nodes().into_iter().map(p).collect();
        prop_assert!((g.interpolate(&nodal, mu).unwrap() - p(mu)).abs() < 1e-12);
    }

    #[test]
    fn radius_law_holds_for_every_parameter(mu in -1.0f64..1.0) {
        let g = SwimmerGeometry::default();
        let (rp, rm) = (g.r_plus(mu), g.r_minus(mu));
        prop_assert!(rp > 0.0 && rm > 0.0 && rp < g.r_out && rm < g.r_out);
        prop_assert!((rp.powi(3) + rm.powi(3) - VOLUME_CONSTANT).abs() < 1e-15);
    }

    #[test]
    fn separated_text_round_trip_is_exact(
        values in prop::collection::vec(-1e3f64..1e3, 6),
        psi in prop::collection::vec(-1.0f64..1.0, 3),
    ) {
        prop_assume!(psi.iter().any(|x| x.abs() > 1e-3));
        let grids = vec![ParametricGrid::new(0.0, 1.0, 1, 2).unwrap()];
        let blocks = [1, 1, 2, 1, 1];
        let mut sol = SeparatedSolution::new(grids, blocks, Provenance::Apriori);
        if let Ok(m) = normalize_mode(&values, &blocks, vec![psi]) {
            sol.push(m);
        }
        let back = SeparatedSolution::parse(&sol.to_text(), std::path::Path::new("mem")).unwrap();
        prop_assert_eq!(back.modes, sol.modes);
    }
}
