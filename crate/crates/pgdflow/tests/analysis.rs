mod common;

use rand::Rng;

use pgdflow::analysis::{
    comparison_report, drag_errors, drag_response_surface, write_comparison, write_errors_vs_modes, Evaluator,
    ParamQuadrature,
};
use pgdflow::hdg::Surface;
use pgdflow::mesh::ParametricGrid;
use pgdflow::mapping::SwimmerStudy;
use pgdflow::pgd::{run_apriori_logged, AprioriConfig};
use pgdflow::Parallelism;

use common::{rng, Swimmer};

#[test]
fn response_surface_matches_the_functional_of_evaluated_states() {
    let sw = Swimmer::new(SwimmerStudy::Radius, (-2.0, -1.0));
    let grids = vec![ParametricGrid::new(-1.0, 1.0, 4, 2).unwrap()];
    let cfg = AprioriConfig {
        max_modes: 4,
        ..Default::default()
    };
    let sol = run_apriori_logged(&sw.solver.op, grids, &cfg).unwrap().solution;
    let mut rng = rng(41);
    for surface in [Surface::Left, Surface::Right, Surface::Total] {
        let f = sw.functional(surface);
        let rs = drag_response_surface(&sol, &f, surface).unwrap();
        for _ in 0..5 {
            let mu = [rng.gen_range(-1.0..1.0)];
            let direct = f.eval(&mu, &sol.evaluate_at(&mu).unwrap());
            let fast = rs.eval(&mu).unwrap();
            for c in 0..2 {
                assert!((direct[c] - fast[c]).abs() <= 1e-10 * (1.0 + direct[c].abs()));
            }
        }
    }
    let l = sw.functional(Surface::Left).eval(&[0.3], &sol.evaluate_at(&[0.3]).unwrap());
    let r = sw.functional(Surface::Right).eval(&[0.3], &sol.evaluate_at(&[0.3]).unwrap());
    let t = sw.functional(Surface::Total).eval(&[0.3], &sol.evaluate_at(&[0.3]).unwrap());
    assert!((l[0] + r[0] - t[0]).abs() < 1e-10 * t[0].abs());
}

#[test]
fn smoothed_error_map_averages_the_pointwise_errors() {
    let grids = vec![ParametricGrid::new(0.0, 1.0, 3, 2).unwrap(), ParametricGrid::new(-1.0, 1.0, 2, 1).unwrap()];
    let quad = ParamQuadrature::new(&grids);
    let mut rng = rng(42);
    let reference: Vec<f64> = (0..quad.len()).map(|_| rng.gen_range(1.0..2.0)).collect();
    let values: Vec<f64> = reference.iter().map(|r| r * (1.0 + rng.gen_range(-0.01..0.01))).collect();
    let e = drag_errors(&quad, &grids, &values, &reference);
    assert_eq!(e.excluded, 0);
    assert_eq!(e.smoothed.len(), 6);
    let mut total = 0.0;
    for cell in &e.smoothed {
        let members: Vec<f64> = e
            .points
            .iter()
            .zip(&quad.elements)
            .filter(|(_, el)| **el == cell.element)
            .map(|(p, _)| p.eps.unwrap())
            .collect();
        let mean = members.iter().sum::<f64>() / members.len() as f64;
        assert!((cell.mean.unwrap() - mean).abs() < 1e-15);
        total += mean;
    }
    let all = e.points.iter().map(|p| p.eps.unwrap()).sum::<f64>() / e.points.len() as f64;
    assert!((total / 6.0 - all).abs() < 1e-15);
    assert_eq!(drag_errors(&quad, &grids, &reference, &reference).e_d, 0.0);
}

#[test]
fn comparison_reports_the_cheapest_run_per_target() {
    let sw = Swimmer::new(SwimmerStudy::Radius, (-2.0, -1.0));
    let grids = vec![ParametricGrid::new(-1.0, 1.0, 4, 2).unwrap()];
    let eval = Evaluator::new(&sw.solver, sw.functional(Surface::Total), Surface::Total, &grids, Parallelism::Parallel);
    let mut reports = Vec::new();
    for n_i in [1, 2] {
        let cfg = AprioriConfig {
            n_i,
            max_modes: 6,
            eta_star: 1e-12,
            ..Default::default()
        };
        let run = run_apriori_logged(&sw.solver.op, grids.clone(), &cfg).unwrap();
        reports.push(eval.report(&run.solution, &format!("n_i={n_i}"), Some(&run.cumulative_solves())).unwrap());
    }
    let cmp = comparison_report(&reports);
    assert_eq!(cmp.rows.len(), 2);
    for m in &cmp.matched {
        let expected = reports
            .iter()
            .filter_map(|r| r.solves_to_reach(m.target))
            .map(|(s, _)| s)
            .min();
        assert_eq!(m.best.as_ref().map(|b| b.0), expected);
    }
    let dir = tempfile::tempdir().unwrap();
    write_comparison(dir.path().join("c.csv"), &cmp).unwrap();
    write_errors_vs_modes(dir.path().join("e.csv"), &reports).unwrap();
    let text = std::fs::read_to_string(dir.path().join("e.csv")).unwrap();
    assert_eq!(text.lines().count(), 1 + reports.iter().map(|r| r.modes()).sum::<usize>());
}
