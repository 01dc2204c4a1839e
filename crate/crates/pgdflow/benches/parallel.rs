//! Sequential vs rayon execution of the parallel kernels: operator assembly,
//! snapshot solves and the a posteriori residual products.

use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use pgdflow::hdg::{HdgSolver, StokesProblem};
use pgdflow::mapping::{swimmer_mapping, SwimmerGeometry, SwimmerStudy};
use pgdflow::mesh::{ParametricGrid, ReferenceMesh};
use pgdflow::meshgen::{swimmer_mesh, SwimmerMeshSpec};
use pgdflow::pgd::{compute_snapshots, PlanLevel, Residual, SnapshotPlan};
use pgdflow::Parallelism;

const MODES: [(&str, Parallelism); 2] = [("sequential", Parallelism::Sequential), ("parallel", Parallelism::Parallel)];

fn setup() -> (Arc<ReferenceMesh>, pgdflow::mapping::SeparatedMapping, StokesProblem) {
    let g = SwimmerGeometry::default();
    let mesh = Arc::new(swimmer_mesh(&g, &SwimmerMeshSpec::default()).unwrap());
    let m = swimmer_mapping(&g, SwimmerStudy::Radius, (-1.0, 1.0), (-2.0, -1.0), 0.0).unwrap();
    let pb = StokesProblem::swimmer(1.0, g.l, 1);
    (mesh, m, pb)
}

fn assembly(c: &mut Criterion) {
    let (mesh, m, pb) = setup();
    let mut group = c.benchmark_group("assembly");
    group.sample_size(10);
    for (name, par) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| HdgSolver::new(mesh.clone(), &m, &pb, par).unwrap())
        });
    }
    group.finish();
}

fn snapshots(c: &mut Criterion) {
    let (mesh, m, pb) = setup();
    let solver = HdgSolver::new(mesh, &m, &pb, Parallelism::Parallel).unwrap();
    let plan = SnapshotPlan::new(&[ParametricGrid::new(-1.0, 1.0, 4, 4).unwrap()], PlanLevel::Vertices).unwrap();
    let mut group = c.benchmark_group("snapshots");
    group.sample_size(10);
    for (name, par) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| compute_snapshots(&plan, &solver, par).unwrap())
        });
    }
    group.finish();
}

fn residual(c: &mut Criterion) {
    let (n_dof, shape) = (20_000, vec![41]);
    let data: Vec<f64> = (0..n_dof * 41).map(|i| ((i * 7919) % 1000) as f64 / 1000.0).collect();
    let w: Vec<f64> = (0..41).map(|i| 1.0 + i as f64).collect();
    let mut group = c.benchmark_group("residual_apply");
    for (name, par) in MODES {
        let r = Residual::new(n_dof, shape.clone(), data.clone(), par);
        group.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| r.apply(&w)));
    }
    group.finish();
}

criterion_group!(benches, assembly, snapshots, residual);
criterion_main!(benches);
