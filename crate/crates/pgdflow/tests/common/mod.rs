//! Fixtures shared by the integration tests.

#![allow(dead_code, clippy::needless_range_loop)]

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pgdflow::hdg::{DataTerm, HdgSolver, StokesProblem, Surface};
use pgdflow::mapping::{
    swimmer_mapping, Factor1D, MapTerm, Mat2, ParamFactor, SeparatedMapping, SpatialField, SwimmerGeometry, SwimmerStudy,
};
use pgdflow::mesh::{FaceTag, ParametricGrid};
use pgdflow::meshgen::{rectangle_mesh, swimmer_mesh, RectangleTags, SwimmerMeshSpec};
use pgdflow::Parallelism;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm(&d) / norm(b).max(f64::MIN_POSITIVE)
}

/// `u = (sin x sin y, cos x cos y)`, `p = cos x sin y − mean` on the unit
/// square: Stokes problem with its exact `(u, p, ∇u)`.
pub type Exact = Box<dyn Fn([f64; 2]) -> ([f64; 2], f64, Mat2) + Send + Sync>;

pub fn manufactured(nu: f64) -> (StokesProblem, Exact) {
    let mean = 1f64.sin() * (1.0 - 1f64.cos());
    let mut pb = StokesProblem::new(nu);
    let u = |x: [f64; 2]| [x[0].sin() * x[1].sin(), x[0].cos() * x[1].cos()];
    pb.dirichlet.push(DataTerm::fixed(0, u));
    pb.body_force.push(DataTerm::fixed(0, move |x| {
        let v = u(x);
        [2.0 * nu * v[0] - x[0].sin() * x[1].sin(), 2.0 * nu * v[1] + x[0].cos() * x[1].cos()]
    }));
    let exact = move |x: [f64; 2]| {
        let (s0, c0, s1, c1) = (x[0].sin(), x[0].cos(), x[1].sin(), x[1].cos());
        ([s0 * s1, c0 * c1], c0 * s1 - mean, [[c0 * s1, s0 * c1], [-s0 * c1, -c0 * s1]])
    };
    (pb, Box::new(exact))
}

/// `L2` errors of `u`, `p` and `L = −ν∇u` of a state on an unmapped mesh,
/// integrated with the element volume quadrature.
pub fn l2_errors(s: &HdgSolver, x: &[f64], nu: f64, exact: &Exact) -> [f64; 3] {
    let disc = s.disc();
    let dofs = &disc.dofs;
    let n = dofs.layout.n;
    let mut err = [0.0f64; 3];
    for (e, g) in disc.elements.iter().enumerate() {
        for (q, (&xq, &w)) in g.x.iter().zip(&g.w).enumerate() {
            let nv = &disc.tables.vol_values[q];
            let (u, p, gu) = exact(xq);
            let val = |idx: &dyn Fn(usize) -> usize| (0..n).map(|r| nv[r] * x[idx(r)]).sum::<f64>();
            for i in 0..2 {
                let uh = val(&|r| dofs.u_index(e, i, r));
                err[0] += w * (uh - u[i]).powi(2);
                for j in 0..2 {
                    let lh = val(&|r| dofs.l_index(e, i, j, r));
                    err[2] += w * (lh + nu * gu[i][j]).powi(2);
                }
            }
            let ph = val(&|r| dofs.p_index(e, r));
            err[1] += w * (ph - p).powi(2);
        }
    }
    err.map(f64::sqrt)
}

/// `M(x) = (x, 0)`.
pub struct StretchX;

impl SpatialField for StretchX {
    fn value_in(&self, _: u32, x: [f64; 2]) -> [f64; 2] {
        [x[0], 0.0]
    }
    fn jacobian_in(&self, _: u32, _: [f64; 2]) -> Mat2 {
        [[1.0, 0.0], [0.0, 0.0]]
    }
    fn describe(&self) -> String {
        "(x, 0)".into()
    }
}

/// `M(x) = (0, x y)`: a shear-like nonlinear deformation.
pub struct Shear;

impl SpatialField for Shear {
    fn value_in(&self, _: u32, x: [f64; 2]) -> [f64; 2] {
        [0.0, x[0] * x[1]]
    }
    fn jacobian_in(&self, _: u32, x: [f64; 2]) -> Mat2 {
        [[0.0, 0.0], [x[1], x[0]]]
    }
    fn describe(&self) -> String {
        "(0, xy)".into()
    }
}

/// `M(x) = (−y, x)`.
pub struct Perp;

impl SpatialField for Perp {
    fn value_in(&self, _: u32, x: [f64; 2]) -> [f64; 2] {
        [-x[1], x[0]]
    }
    fn jacobian_in(&self, _: u32, _: [f64; 2]) -> Mat2 {
        [[0.0, -1.0], [1.0, 0.0]]
    }
    fn describe(&self) -> String {
        "(-y, x)".into()
    }
}

/// Rotation by the angle `μ`: `x cos μ + (−y, x) sin μ`.
pub fn rotation_mapping(interval: (f64, f64)) -> SeparatedMapping {
    SeparatedMapping {
        terms: vec![
            MapTerm {
                field: Arc::new(pgdflow::mapping::IdentityField),
                factor: ParamFactor::single(1, 0, Factor1D::func("cos", f64::cos)),
            },
            MapTerm {
                field: Arc::new(Perp),
                factor: ParamFactor::single(1, 0, Factor1D::func("sin", f64::sin)),
            },
        ],
        intervals: vec![interval],
    }
}

/// Two-parameter deformation of the unit square:
/// `x + μ₁ (x, 0) + (μ₂ + μ₂²/2) (0, xy)`.
pub fn box_mapping_2() -> SeparatedMapping {
    SeparatedMapping {
        terms: vec![
            MapTerm {
                field: Arc::new(pgdflow::mapping::IdentityField),
                factor: ParamFactor::one(2),
            },
            MapTerm {
                field: Arc::new(StretchX),
                factor: ParamFactor::single(2, 0, Factor1D::func("mu", |m| m)),
            },
            MapTerm {
                field: Arc::new(Shear),
                factor: ParamFactor::single(2, 1, Factor1D::func("mu+mu^2/2", |m| m + 0.5 * m * m)),
            },
        ],
        intervals: vec![(-0.3, 0.5), (-0.4, 0.4)],
    }
}

/// One-parameter restriction of [`box_mapping_2`] (stretch only).
pub fn box_mapping_1() -> SeparatedMapping {
    SeparatedMapping {
        terms: vec![
            MapTerm {
                field: Arc::new(pgdflow::mapping::IdentityField),
                factor: ParamFactor::one(1),
            },
            MapTerm {
                field: Arc::new(StretchX),
                factor: ParamFactor::single(1, 0, Factor1D::func("mu", |m| m)),
            },
        ],
        intervals: vec![(-0.3, 0.5)],
    }
}

/// Channel problem on the deformed box: parabolic inflow on the left, no
/// slip on top and bottom, traction-free outflow, and a body force with a
/// parameter-dependent factor.
pub fn box_problem(n_pa: usize) -> StokesProblem {
    let mut pb = StokesProblem::new(1.0);
    pb.dirichlet.push(DataTerm::fixed(n_pa, |x| {
        if x[0].abs() < 1e-12 {
            [4.0 * x[1] * (1.0 - x[1]), 0.0]
        } else {
            [0.0, 0.0]
        }
    }));
    pb.body_force.push(DataTerm {
        field: Arc::new(|x: [f64; 2]| [0.0, x[0]]),
        factor: ParamFactor::single(n_pa, n_pa - 1, Factor1D::func("1+mu", |m| 1.0 + m)),
    });
    pb
}

pub fn box_solver(n_pa: usize, k: usize, m: usize) -> HdgSolver {
    let tags = RectangleTags {
        left: FaceTag::Dirichlet,
        right: FaceTag::Neumann,
        bottom: FaceTag::Dirichlet,
        top: FaceTag::Dirichlet,
    };
    let mesh = rectangle_mesh(k, (0.0, 1.0), (0.0, 1.0), m, m, tags).unwrap();
    let mapping = if n_pa == 1 { box_mapping_1() } else { box_mapping_2() };
    HdgSolver::new(Arc::new(mesh), &mapping, &box_problem(n_pa), Parallelism::Parallel).unwrap()
}

/// Parametric grids of the box fixtures.
pub fn box_grids(n_pa: usize) -> Vec<ParametricGrid> {
    let m = if n_pa == 1 { box_mapping_1() } else { box_mapping_2() };
    m.intervals
        .iter()
        .map(|&(a, b)| ParametricGrid::new(a, b, 3, 2).unwrap())
        .collect()
}

/// The swimmer solver of a study on the default reference mesh.
pub struct Swimmer {
    pub geom: SwimmerGeometry,
    pub solver: HdgSolver,
}

impl Swimmer {
    pub fn new(study: SwimmerStudy, i2: (f64, f64)) -> Self {
        let geom = SwimmerGeometry::default();
        let mesh = Arc::new(swimmer_mesh(&geom, &SwimmerMeshSpec::default()).unwrap());
        let m = swimmer_mapping(&geom, study, (-1.0, 1.0), i2, 0.0).unwrap();
        let pb = StokesProblem::swimmer(1.0, geom.l, m.n_pa());
        let solver = HdgSolver::new(mesh, &m, &pb, Parallelism::Parallel).unwrap();
        Swimmer { geom, solver }
    }

    pub fn functional(&self, surface: Surface) -> pgdflow::hdg::DragFunctional {
        let faces = self.solver.sphere_faces(&self.geom.centres(), self.geom.r_out);
        self.solver.drag_functional(&faces, surface)
    }
}
