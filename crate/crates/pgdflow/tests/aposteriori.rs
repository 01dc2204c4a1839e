mod common;

use pgdflow::mesh::ParametricGrid;
use pgdflow::pgd::tensor::multi_index;
use pgdflow::pgd::{compress, compute_snapshots, separate, AposterioriConfig, PlanLevel, SnapshotPlan};
use pgdflow::Parallelism;

use common::{box_grids, box_solver, norm, rel_diff};

#[test]
fn snapshot_plans_nest() {
    let g = vec![ParametricGrid::new(-1.0, 1.0, 4, 4).unwrap()];
    let n: Vec<usize> = [PlanLevel::Vertices, PlanLevel::HalfNodes, PlanLevel::AllNodes]
        .iter()
        .map(|&l| SnapshotPlan::new(&g, l).unwrap().n_snapshots())
        .collect();
    assert_eq!(n, vec![5, 9, 17]);
}

#[test]
fn separation_reproduces_box_snapshots_without_solving() {
    let s = box_solver(1, 2, 2);
    let plan = SnapshotPlan::new(&box_grids(1), PlanLevel::AllNodes).unwrap();
    let c0 = s.solve_count();
    let t = compute_snapshots(&plan, &s, Parallelism::Parallel).unwrap();
    assert_eq!(s.solve_count() - c0, plan.n_snapshots());
    assert_eq!(t.solves, plan.n_snapshots());
    let c1 = s.solve_count();
    let cfg = AposterioriConfig {
        eta_star: 1e-12,
        max_modes: 60,
        ..Default::default()
    };
    let sep = separate(&t, &cfg).unwrap();
    assert_eq!(s.solve_count(), c1);
    let sol = &sep.solution;
    assert_eq!(sol.solves, plan.n_snapshots());
    assert!(sol.n_modes() <= plan.n_snapshots());
    let shape = t.shape();
    for p in 0..t.n_snapshots() {
        let x = sol.evaluate_at_nodes(&multi_index(p, &shape));
        assert!(rel_diff(&x, t.column(p)) < 1e-8, "snapshot {p}: {}", rel_diff(&x, t.column(p)));
    }
}

#[test]
fn residual_norms_measure_the_nodal_reconstruction_error() {
    let s = box_solver(2, 2, 2);
    let plan = SnapshotPlan::new(&box_grids(2), PlanLevel::AllNodes).unwrap();
    let t = compute_snapshots(&plan, &s, Parallelism::Parallel).unwrap();
    let cfg = AposterioriConfig {
        eta_star: 1e-6,
        max_modes: 20,
        ..Default::default()
    };
    let sep = separate(&t, &cfg).unwrap();
    assert!(sep.residual_norms.windows(2).all(|w| w[1] <= w[0]));
    let shape = t.shape();
    let mut sq = 0.0;
    for p in 0..t.n_snapshots() {
        let x = sep.solution.evaluate_at_nodes(&multi_index(p, &shape));
        sq += x.iter().zip(t.column(p)).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
    }
    let last = *sep.residual_norms.last().unwrap();
    assert!((sq.sqrt() - last).abs() <= 1e-8 * norm(&t.data), "{} vs {last}", sq.sqrt());
    assert!(last < 1e-2 * norm(&t.data));
}

#[test]
fn sequential_and_parallel_separations_agree() {
    let s = box_solver(1, 2, 2);
    let plan = SnapshotPlan::new(&box_grids(1), PlanLevel::AllNodes).unwrap();
    let t = compute_snapshots(&plan, &s, Parallelism::Sequential).unwrap();
    let cfg = AposterioriConfig {
        eta_star: 1e-8,
        ..Default::default()
    };
    let a = separate(&t, &AposterioriConfig { par: Parallelism::Sequential, ..cfg.clone() }).unwrap();
    let b = separate(&t, &AposterioriConfig { par: Parallelism::Parallel, ..cfg }).unwrap();
    assert_eq!(a.solution.n_modes(), b.solution.n_modes());
    for mu in [-0.3, 0.1, 0.5] {
        let (x, y) = (a.solution.evaluate_at(&[mu]).unwrap(), b.solution.evaluate_at(&[mu]).unwrap());
        assert!(rel_diff(&x, &y) < 1e-12);
    }
}

#[test]
fn compression_never_adds_modes_and_keeps_nodal_values() {
    let s = box_solver(2, 2, 2);
    let plan = SnapshotPlan::new(&box_grids(2), PlanLevel::AllNodes).unwrap();
    let t = compute_snapshots(&plan, &s, Parallelism::Parallel).unwrap();
    let sol = separate(
        &t,
        &AposterioriConfig {
            eta_star: 1e-10,
            ..Default::default()
        },
    )
    .unwrap()
    .solution;
    let both = sol.union(&sol).unwrap();
    let c = compress(&both, 1e-10).unwrap();
    assert!(c.n_modes() <= sol.n_modes());
    let shape = t.shape();
    for p in 0..t.n_snapshots() {
        let idx = multi_index(p, &shape);
        let (x, y) = (c.evaluate_at_nodes(&idx), both.evaluate_at_nodes(&idx));
        assert!(rel_diff(&x, &y) < 1e-8);
    }
}

#[test]
fn invalid_configurations_are_rejected() {
    let cfg = AposterioriConfig {
        eta_star: 0.0,
        ..Default::default()
    };
    assert!(cfg.validate().is_err());
    let cfg = AposterioriConfig {
        max_modes: 0,
        ..Default::default()
    };
    assert!(cfg.validate().is_err());
}
