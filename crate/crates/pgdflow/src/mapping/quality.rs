//! Element quality of the mapped mesh and conformity of the mesh with the
//! mapping interfaces.

use super::{det2, mul2, SeparatedMapping};
use crate::mesh::{element_centroid, isoparametric, triangle_quadrature, ReferenceMesh, TriangleBasis};
use crate::{Error, Result};

/// Scaled-Jacobian quality of every element of the mapped mesh at `mu`:
/// the minimum of `det(J_μ J_iso)` over the element's quadrature points
/// divided by its area-weighted mean. Straight-sided elements under an
/// affine map have quality 1; values `<= 0` flag inverted elements.
pub fn scaled_jacobian_quality(mesh: &ReferenceMesh, mapping: &SeparatedMapping, mu: &[f64]) -> Result<Vec<f64>> {
    mapping.check_mu(mu)?;
    let k = mesh.degree();
    let basis = TriangleBasis::new(k)?;
    let rule = triangle_quadrature(2 * k)?;
    let tab: Vec<(Vec<f64>, Vec<[f64; 2]>)> = rule.points.iter().map(|&p| (basis.eval(p), basis.grad(p))).collect();
    let mut out = Vec::with_capacity(mesh.n_elements());
    for e in 0..mesh.n_elements() {
        let coords = mesh.element_coords(e);
        let regions = mapping.regions(element_centroid(mesh, &basis, e));
        let mut min = f64::INFINITY;
        let (mut sum, mut wsum) = (0.0, 0.0);
        for ((v, g), &w) in tab.iter().zip(&rule.weights) {
            let (x, jiso) = isoparametric(&coords, v, g);
            let jm = mapping.jacobian_in(&regions, x, mu);
            let d = det2(&mul2(&jm, &jiso));
            min = min.min(d);
            sum += w * d;
            wsum += w;
        }
        let mean = sum / wsum;
        out.push(if mean > 0.0 { min / mean } else { min.min(0.0) });
    }
    Ok(out)
}

/// Checks that every mapping term uses a single formula on each element,
/// i.e. that the mapping interfaces are aligned with element faces. Points
/// on the element boundary are excluded (both formulas agree there).
pub fn check_conforming(mesh: &ReferenceMesh, mapping: &SeparatedMapping) -> Result<()> {
    let k = mesh.degree();
    let basis = TriangleBasis::new(k)?;
    let rule = triangle_quadrature(2 * k + 2)?;
    for e in 0..mesh.n_elements() {
        let coords = mesh.element_coords(e);
        let reference = mapping.regions(element_centroid(mesh, &basis, e));
        for &p in &rule.points {
            let (x, _) = isoparametric(&coords, &basis.eval(p), &basis.grad(p));
            if mapping.regions(x) != reference {
                return Err(Error::Invalid(format!(
                    "element {e} straddles a mapping interface near ({:.4}, {:.4})",
                    x[0], x[1]
                )));
            }
        }
    }
    Ok(())
}
