//! Full-order solutions and nodal field export.

use std::path::Path;

use super::discretisation::DofMap;
use crate::mapping::SeparatedMapping;
use crate::mesh::ReferenceMesh;
use crate::{Error, Result};

/// A full-order HDG solution at one parameter value, stored as the stacked
/// state `[û, ρ, u, p, L]` of [`DofMap`].
#[derive(Clone, Debug, PartialEq)]
pub struct FullOrderSolution {
    pub mu: Vec<f64>,
    pub state: Vec<f64>,
}

impl FullOrderSolution {
    /// Velocity component `i` at node `r` of element `e`.
    pub fn u(&self, dofs: &DofMap, e: usize, i: usize, r: usize) -> f64 {
        self.state[dofs.u_index(e, i, r)]
    }

    pub fn p(&self, dofs: &DofMap, e: usize, r: usize) -> f64 {
        self.state[dofs.p_index(e, r)]
    }

    pub fn l(&self, dofs: &DofMap, e: usize, i: usize, j: usize, r: usize) -> f64 {
        self.state[dofs.l_index(e, i, j, r)]
    }

    /// Mean pressure of element `e`.
    pub fn rho(&self, dofs: &DofMap, e: usize) -> f64 {
        self.state[dofs.rho_offset() + e]
    }
}

/// Column header of the nodal field table.
pub const FIELD_HEADER: [&str; 10] = ["element", "x", "y", "u1", "u2", "p", "L11", "L12", "L21", "L22"];

/// Writes the element-wise nodal fields of `state` as CSV (one row per
/// element node, discontinuous fields are repeated per element). With a
/// mapping and parameter value the coordinates are those of the physical
/// domain, otherwise of the reference domain.
pub fn export_fields(
    path: impl AsRef<Path>,
    mesh: &ReferenceMesh,
    dofs: &DofMap,
    state: &[f64],
    mapped: Option<(&SeparatedMapping, &[f64])>,
) -> Result<()> {
    let path = path.as_ref();
    if state.len() != dofs.n_state() {
        return Err(Error::Invalid(format!(
            "state has length {}, the discretisation expects {}",
            state.len(),
            dofs.n_state()
        )));
    }
    if let Some((m, mu)) = mapped {
        m.check_mu(mu)?;
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Invalid(format!("{other:?}")),
    })?;
    w.write_record(FIELD_HEADER)?;
    let basis = crate::mesh::TriangleBasis::new(mesh.degree())?;
    for e in 0..mesh.n_elements() {
        let regions = mapped.map(|(m, _)| m.regions(crate::mesh::element_centroid(mesh, &basis, e)));
        for (r, x) in mesh.element_coords(e).into_iter().enumerate() {
            let x = match (mapped, &regions) {
                (Some((m, mu)), Some(reg)) => m.evaluate_in(reg, x, mu),
                _ => x,
            };
            let mut rec = vec![e.to_string(), fmt(x[0]), fmt(x[1])];
            for i in 0..2 {
                rec.push(fmt(state[dofs.u_index(e, i, r)]));
            }
            rec.push(fmt(state[dofs.p_index(e, r)]));
            for i in 0..2 {
                for j in 0..2 {
                    rec.push(fmt(state[dofs.l_index(e, i, j, r)]));
                }
            }
            w.write_record(&rec)?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

fn fmt(v: f64) -> String {
    format!("{v:.12e}")
}
