mod common;

use rand::Rng;

use pgdflow::mapping::{
    scaled_jacobian_quality, separate_det_adj, swimmer_mapping, SeparatedMapping, SwimmerGeometry, SwimmerStudy,
    VOLUME_CONSTANT,
};
use pgdflow::meshgen::{swimmer_mesh, SwimmerMeshSpec};

use common::rng;

fn mapping(study: SwimmerStudy) -> (SwimmerGeometry, SeparatedMapping) {
    let g = SwimmerGeometry::default();
    let m = swimmer_mapping(&g, study, (-1.0, 1.0), (-2.0, -1.0), 0.0).unwrap();
    (g, m)
}

#[test]
fn radius_law_keeps_total_volume_and_equal_radii_at_zero() {
    let g = SwimmerGeometry::default();
    assert!((g.r_plus(0.0) - g.r_minus(0.0)).abs() < 1e-15);
    for i in 0..=20 {
        let mu = -1.0 + 0.1 * i as f64;
        let (rp, rm) = (g.r_plus(mu), g.r_minus(mu));
        assert!(rp > 0.0 && rm > 0.0);
        assert!((rp.powi(3) + rm.powi(3) - VOLUME_CONSTANT).abs() < 1e-15);
    }
    assert!(g.r_plus(1.0) > g.r_plus(-1.0));
}

#[test]
fn distance_study_moves_the_spheres_apart_by_three_minus_mu() {
    let (g, m) = mapping(SwimmerStudy::Distance);
    for mu in [-2.0, -1.5, -1.0] {
        let a = m.evaluate([-g.x0, 0.0], &[mu]).unwrap();
        let b = m.evaluate([g.x0, 0.0], &[mu]).unwrap();
        assert!(((b[0] - a[0]) - (3.0 - mu)).abs() < 1e-12, "{a:?} {b:?} {mu}");
        assert!(a[1].abs() < 1e-15 && b[1].abs() < 1e-15);
    }
}

#[test]
fn inlet_and_outlet_are_fixed_and_walls_preserved_by_every_study() {
    for study in [SwimmerStudy::Radius, SwimmerStudy::Distance, SwimmerStudy::Both] {
        let (g, m) = mapping(study);
        let mu: Vec<f64> = m.intervals.iter().map(|&(a, b)| 0.3 * a + 0.7 * b).collect();
        for x in [[-g.l, 0.5 * g.h], [g.l, 0.1], [-g.l, g.h], [g.l, 0.0]] {
            let y = m.evaluate(x, &mu).unwrap();
            assert!((y[0] - x[0]).abs() < 1e-12 && (y[1] - x[1]).abs() < 1e-12, "{study:?} moved {x:?} to {y:?}");
        }
        for i in 0..=24 {
            let x0 = -g.l + g.l * i as f64 / 12.0;
            for yw in [0.0, g.h] {
                let y = m.evaluate([x0, yw], &mu).unwrap();
                assert!((y[1] - yw).abs() < 1e-12, "{study:?} moved wall point ({x0}, {yw}) off the wall");
                assert!(y[0].abs() <= g.l + 1e-12);
            }
        }
    }
}

#[test]
fn separated_determinant_and_adjugate_match_finite_differences() {
    let (g, m) = mapping(SwimmerStudy::Distance);
    let jac = separate_det_adj(&m);
    let mut rng = rng(11);
    let h = 1e-6;
    for _ in 0..200 {
        let x = [rng.gen_range(-g.l..g.l), rng.gen_range(0.0..g.h)];
        if (x[0] - g.x0).hypot(x[1]) < g.r_ref || (x[0] + g.x0).hypot(x[1]) < g.r_ref {
            continue;
        }
        let mu = [rng.gen_range(-2.0..-1.0)];
        let regions = m.regions(x);
        let d = |a: usize, b: usize| {
            let (mut xp, mut xm) = (x, x);
            xp[b] += h;
            xm[b] -= h;
            (m.evaluate_in(&regions, xp, &mu)[a] - m.evaluate_in(&regions, xm, &mu)[a]) / (2.0 * h)
        };
        let j = [[d(0, 0), d(0, 1)], [d(1, 0), d(1, 1)]];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        assert!((jac.det(x, &mu).unwrap() - det).abs() < 1e-7);
        let adj = jac.adj(x, &mu).unwrap();
        let expected = [[j[1][1], -j[0][1]], [-j[1][0], j[0][0]]];
        for a in 0..2 {
            for b in 0..2 {
                assert!((adj[a][b] - expected[a][b]).abs() < 1e-7);
            }
        }
    }
}

#[test]
fn mapped_swimmer_mesh_stays_valid_at_the_parametric_corners() {
    let (g, m) = mapping(SwimmerStudy::Both);
    let mesh = swimmer_mesh(&g, &SwimmerMeshSpec::default()).unwrap();
    for mu in [[-1.0, -2.0], [-1.0, -1.0], [1.0, -2.0], [1.0, -1.0]] {
        let q = scaled_jacobian_quality(&mesh, &m, &mu).unwrap();
        let min = q.iter().copied().fold(f64::INFINITY, f64::min);
        assert!(min > 0.1, "quality {min} at {mu:?}");
    }
}

#[test]
fn out_of_range_parameters_are_rejected() {
    let (_, m) = mapping(SwimmerStudy::Radius);
    assert!(m.evaluate([0.0, 0.5], &[1.5]).is_err());
    assert!(m.evaluate([0.0, 0.5], &[0.5, 0.5]).is_err());
}
