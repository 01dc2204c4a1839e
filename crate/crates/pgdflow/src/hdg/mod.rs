//! Full-order HDG Stokes solver on the reference domain, written as an
//! affine (separated) operator `K(μ) = Σ_t c_t(μ) K_t` so that the same
//! assembled blocks serve full-order solves and the PGD spatial problems.

pub mod discretisation;
pub mod drag;
pub mod operator;
pub mod solver;
pub mod state;

use std::fmt;
use std::sync::Arc;

pub use discretisation::{Discretisation, DofMap, ElementGeometry, ElementLayout};
pub use drag::{compute_drag, compute_drag_mapped, sphere_surfaces, DragFunctional, SphereFace, Surface};
pub use operator::{AffineOperator, DataKind, OpTerm, RhsTerm, TermKind};
pub use solver::HdgSolver;
pub use state::{export_fields, FullOrderSolution};

use crate::mapping::ParamFactor;
use crate::{Error, Result};

/// A vector field of reference coordinates.
pub type VecField = Arc<dyn Fn([f64; 2]) -> [f64; 2] + Send + Sync>;

/// One separated data term `g(x) λ(μ)`.
#[derive(Clone)]
pub struct DataTerm {
    pub field: VecField,
    pub factor: ParamFactor,
}

impl DataTerm {
    /// Parameter-independent data over `n_pa` parameters.
    pub fn fixed(n_pa: usize, f: impl Fn([f64; 2]) -> [f64; 2] + Send + Sync + 'static) -> Self {
        DataTerm {
            field: Arc::new(f),
            factor: ParamFactor::one(n_pa),
        }
    }
}

impl fmt::Debug for DataTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DataTerm({:?})", self.factor)
    }
}

/// Stokes problem data. Data fields are functions of reference
/// coordinates, each multiplied by a separable parametric factor.
#[derive(Clone, Debug)]
pub struct StokesProblem {
    /// Kinematic viscosity.
    pub nu: f64,
    /// Stabilisation scaling: `τ = tau_scale · ν / ℓ`.
    pub tau_scale: f64,
    /// Characteristic length `ℓ`.
    pub ell: f64,
    pub body_force: Vec<DataTerm>,
    pub dirichlet: Vec<DataTerm>,
    pub neumann: Vec<DataTerm>,
    /// Volume quadrature degree (default `2k + 2`).
    pub quad_degree: Option<usize>,
}

impl StokesProblem {
    /// Problem with `ν = 1`, `τ = 10`, `ℓ = 1` and no data.
    pub fn new(nu: f64) -> Self {
        StokesProblem {
            nu,
            tau_scale: 10.0,
            ell: 1.0,
            body_force: vec![],
            dirichlet: vec![],
            neumann: vec![],
            quad_degree: None,
        }
    }

    /// Stabilisation parameter `τ`.
    pub fn tau(&self) -> f64 {
        self.tau_scale * self.nu / self.ell
    }

    pub fn validate(&self, n_pa: usize) -> Result<()> {
        if !(self.nu > 0.0 && self.tau_scale > 0.0 && self.ell > 0.0) {
            return Err(Error::Invalid("ν, τ scale and ℓ must be positive".into()));
        }
        for d in self.body_force.iter().chain(&self.dirichlet).chain(&self.neumann) {
            if d.factor.n_pa() != n_pa {
                return Err(Error::Invalid(format!(
                    "data term has {} parametric factors, the mapping has {n_pa} parameters",
                    d.factor.n_pa()
                )));
            }
        }
        Ok(())
    }

    /// Swimmer data: unit inflow at `x = -l`, no slip elsewhere on the
    /// Dirichlet boundary, traction-free outflow.
    pub fn swimmer(nu: f64, l: f64, n_pa: usize) -> Self {
        let mut p = StokesProblem::new(nu);
        p.dirichlet
            .push(DataTerm::fixed(n_pa, move |x| if (x[0] + l).abs() < 1e-9 { [1.0, 0.0] } else { [0.0, 0.0] }));
        p
    }
}
