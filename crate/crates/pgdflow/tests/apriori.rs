mod common;

use rand::Rng;

use pgdflow::analysis::relative_field_error;
use pgdflow::pgd::{run_apriori, run_apriori_logged, AprioriConfig};

use common::{box_grids, box_solver, rel_diff, rng};

#[test]
fn box_flow_is_approximated_at_random_parameters() {
    let s = box_solver(1, 2, 2);
    let cfg = AprioriConfig {
        eta_star: 1e-8,
        max_modes: 20,
        ..Default::default()
    };
    let run = run_apriori_logged(&s.op, box_grids(1), &cfg).unwrap();
    let mut rng = rng(31);
    for _ in 0..5 {
        let mu = [rng.gen_range(-0.3..0.5)];
        let x = run.solution.evaluate_at(&mu).unwrap();
        let reference = s.solve(&mu).unwrap().state;
        let e = relative_field_error(s.disc(), &x, &reference).max();
        assert!(e < 1e-3, "error {e} at {mu:?}");
    }
}

#[test]
fn enrichment_reduces_the_two_parameter_error() {
    let s = box_solver(2, 2, 2);
    let cfg = AprioriConfig {
        eta_star: 1e-10,
        n_i: 4,
        max_modes: 20,
        ..Default::default()
    };
    let run = run_apriori_logged(&s.op, box_grids(2), &cfg).unwrap();
    let mu = [0.43, 0.21];
    let reference = s.solve(&mu).unwrap().state;
    let err = |m| relative_field_error(s.disc(), &run.solution.evaluate_truncated(&mu, m).unwrap(), &reference).max();
    assert!(err(run.solution.n_modes()) < 0.1 * err(1));
}

#[test]
fn every_iteration_costs_one_spatial_solve() {
    let s = box_solver(1, 2, 2);
    for n_i in [1, 2, 4] {
        let cfg = AprioriConfig {
            n_i,
            max_modes: 4,
            eta_star: 1e-14,
            ..Default::default()
        };
        let c0 = s.op.solve_count();
        let run = run_apriori_logged(&s.op, box_grids(1), &cfg).unwrap();
        let used = s.op.solve_count() - c0;
        assert_eq!(used, run.solution.solves);
        assert_eq!(used, run.log.len());
        assert_eq!(used, run.solution.n_modes() * (n_i + 1));
        assert_eq!(*run.cumulative_solves().last().unwrap(), used);
    }
}

#[test]
fn loose_tolerance_stops_after_the_first_mode() {
    let s = box_solver(1, 2, 2);
    let cfg = AprioriConfig {
        eta_star: 1.0,
        ..Default::default()
    };
    let sol = run_apriori(&s.op, box_grids(1), &cfg).unwrap();
    assert_eq!(sol.n_modes(), 1);
}

#[test]
fn runs_are_deterministic() {
    let s = box_solver(1, 2, 2);
    let cfg = AprioriConfig {
        max_modes: 5,
        ..Default::default()
    };
    let a = run_apriori(&s.op, box_grids(1), &cfg).unwrap();
    let b = run_apriori(&s.op, box_grids(1), &cfg).unwrap();
    assert_eq!(a.to_text(), b.to_text());
    let x = a.evaluate_at(&[0.2]).unwrap();
    assert_eq!(rel_diff(&x, &b.evaluate_at(&[0.2]).unwrap()), 0.0);
}

#[test]
fn mismatched_grids_are_rejected() {
    let s = box_solver(2, 2, 2);
    assert!(run_apriori(&s.op, box_grids(1), &AprioriConfig::default()).is_err());
}
