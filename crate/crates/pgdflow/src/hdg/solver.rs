//! Convenience front end for full-order solves at given parameter values.

use std::sync::Arc;

use super::discretisation::Discretisation;
use super::drag::{sphere_surfaces, DragFunctional, SphereFace, Surface};
use super::operator::AffineOperator;
use super::state::FullOrderSolution;
use super::StokesProblem;
use crate::mapping::{scaled_jacobian_quality, SeparatedJacobian, SeparatedMapping};
use crate::mesh::ReferenceMesh;
use crate::par::{try_map_collect, Parallelism};
use crate::{Error, Result};

/// Full-order HDG solver for a separated mapping and problem data.
#[derive(Debug)]
pub struct HdgSolver {
    pub op: Arc<AffineOperator>,
    pub jac: Arc<SeparatedJacobian>,
}

impl HdgSolver {
    /// Precomputes the discretisation, separated Jacobian and operator terms.
    pub fn new(
        mesh: Arc<ReferenceMesh>,
        mapping: &SeparatedMapping,
        problem: &StokesProblem,
        par: Parallelism,
    ) -> Result<Self> {
        let disc = Arc::new(Discretisation::new(mesh, problem.quad_degree)?);
        let jac = Arc::new(SeparatedJacobian::new(mapping));
        let op = Arc::new(AffineOperator::assemble(disc, problem, &jac, par)?);
        Ok(HdgSolver { op, jac })
    }

    pub fn mapping(&self) -> &SeparatedMapping {
        &self.jac.mapping
    }

    pub fn disc(&self) -> &Discretisation {
        &self.op.disc
    }

    /// Number of full-order linear solves performed.
    pub fn solve_count(&self) -> usize {
        self.op.solve_count()
    }

    /// Fails with [`Error::InvertedElement`] if the mapped mesh at `mu` has
    /// an element with nonpositive Jacobian determinant.
    pub fn check_geometry(&self, mu: &[f64]) -> Result<()> {
        let q = scaled_jacobian_quality(&self.op.disc.mesh, &self.jac.mapping, mu)?;
        if let Some((e, &v)) = q.iter().enumerate().find(|(_, &v)| v <= 0.0) {
            return Err(Error::InvertedElement { element: e, det: v });
        }
        Ok(())
    }

    /// Full-order solve at `mu`.
    pub fn solve(&self, mu: &[f64]) -> Result<FullOrderSolution> {
        self.jac.mapping.check_mu(mu)?;
        self.check_geometry(mu)?;
        let state = self.op.solve_at(mu)?;
        Ok(FullOrderSolution { mu: mu.to_vec(), state })
    }

    /// Full-order solves at many parameter values (in parallel over the
    /// values when the element loops are sequential).
    pub fn solve_many(&self, mus: &[Vec<f64>], par: Parallelism) -> Result<Vec<FullOrderSolution>> {
        try_map_collect(par, mus.len(), |i| self.solve(&mus[i]))
    }

    /// Sphere faces of the reference mesh for the given centres and radius.
    pub fn sphere_faces(&self, centres: &[[f64; 2]; 2], radius: f64) -> Vec<SphereFace> {
        sphere_surfaces(&self.op.disc, centres, radius)
    }

    /// Separated force functional on `surface` of the mapped domain.
    pub fn drag_functional(&self, faces: &[SphereFace], surface: Surface) -> DragFunctional {
        DragFunctional::new(&self.op, Some(&self.jac), faces, surface)
    }
}
