//! Hydrodynamic forces on the swimmer spheres.
//!
//! The force exerted by the fluid on a body is `F = ∫ σ n_b dΓ` with the
//! Cauchy stress `σ = -p I + ν(∇u + ∇uᵀ) = -p I - (L + Lᵀ)` and `n_b` the
//! normal pointing out of the body, i.e. into the fluid. On the mapped
//! domain `n dΓ = Âᵀ n̂ dΓ̂` with the adjugate `Â` of the mapping Jacobian,
//! so the force is a sum of separated linear functionals of the state.

use super::discretisation::Discretisation;
use super::operator::AffineOperator;
use crate::mapping::{adj2, Mat2, ParamFactor, SeparatedJacobian, IDENTITY2};
use crate::mesh::FaceTag;

/// Which sphere surface to integrate over.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Surface {
    /// Sphere centred at `-x0`.
    Left,
    /// Sphere centred at `+x0`.
    Right,
    /// Both spheres.
    Total,
}

impl Surface {
    pub fn includes(self, sphere: usize) -> bool {
        match self {
            Surface::Left => sphere == 0,
            Surface::Right => sphere == 1,
            Surface::Total => true,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Surface::Left => "left",
            Surface::Right => "right",
            Surface::Total => "total",
        }
    }
}

/// A Dirichlet face on a sphere surface: `(element, local face, sphere)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SphereFace {
    pub element: usize,
    pub face: usize,
    /// 0 for the sphere at `centres[0]`, 1 for `centres[1]`.
    pub sphere: usize,
}

/// Dirichlet faces whose quadrature points all lie within `radius` of one of
/// the two `centres`.
pub fn sphere_surfaces(disc: &Discretisation, centres: &[[f64; 2]; 2], radius: f64) -> Vec<SphereFace> {
    let mut out = Vec::new();
    for (e, g) in disc.elements.iter().enumerate() {
        for (f, fg) in g.faces.iter().enumerate() {
            if fg.tag != FaceTag::Dirichlet {
                continue;
            }
            for (s, c) in centres.iter().enumerate() {
                if fg.x.iter().all(|x| (x[0] - c[0]).hypot(x[1] - c[1]) < radius) {
                    out.push(SphereFace {
                        element: e,
                        face: f,
                        sphere: s,
                    });
                    break;
                }
            }
        }
    }
    out
}

/// Force as separated linear functionals: `F_c(μ) = Σ_k φ_k(μ) g_{k,c} · x`
/// with sparse state-space vectors `g_{k,c}`.
#[derive(Clone, Debug)]
pub struct DragFunctional {
    pub factors: Vec<ParamFactor>,
    /// Per term, per force component: sparse `(state index, weight)` pairs.
    pub weights: Vec<[Vec<(usize, f64)>; 2]>,
}

impl DragFunctional {
    /// Builds the functional for `surface`. Without a Jacobian the force is
    /// that of the reference domain.
    pub fn new(
        op: &AffineOperator,
        jac: Option<&SeparatedJacobian>,
        faces: &[SphereFace],
        surface: Surface,
    ) -> Self {
        let disc = &op.disc;
        let dofs = &disc.dofs;
        let ly = dofs.layout;
        let n_pa = op.n_pa();
        let factors = match jac {
            Some(j) => j.adj_factors.clone(),
            None => vec![ParamFactor::one(n_pa)],
        };
        let mut weights: Vec<[Vec<(usize, f64)>; 2]> = (0..factors.len()).map(|_| [vec![], vec![]]).collect();
        for sf in faces.iter().filter(|sf| surface.includes(sf.sphere)) {
            let e = sf.element;
            let g = &disc.elements[e];
            let fg = &g.faces[sf.face];
            let regions = jac.map(|j| j.mapping.regions(g.centroid));
            for q in 0..fg.w.len() {
                let adjs: Vec<Mat2> = match (jac, &regions) {
                    (Some(j), Some(reg)) => j.adj_terms(&j.jac_terms(reg, fg.x[q])),
                    _ => vec![IDENTITY2],
                };
                let nv = &disc.tables.face_values[sf.face][q];
                for (k, am) in adjs.iter().enumerate() {
                    let n = fg.normal[q];
                    // Âᵀ n̂ (domain normal, pointing into the body).
                    let an = [am[0][0] * n[0] + am[1][0] * n[1], am[0][1] * n[0] + am[1][1] * n[1]];
                    if an == [0.0, 0.0] {
                        continue;
                    }
                    let w = fg.w[q];
                    // F_c = -∫ σ_cj n_j = ∫ (p δ_cj + L_cj + L_jc) n_j.
                    for (c, wc) in weights[k].iter_mut().enumerate() {
                        for r in 0..ly.n {
                            let b = w * nv[r];
                            wc.push((dofs.p_index(e, r), b * an[c]));
                            for j in 0..2 {
                                wc.push((dofs.l_index(e, c, j, r), b * an[j]));
                                wc.push((dofs.l_index(e, j, c, r), b * an[j]));
                            }
                        }
                    }
                }
            }
        }
        for w in weights.iter_mut().flat_map(|w| w.iter_mut()) {
            compress(w);
        }
        DragFunctional { factors, weights }
    }

    /// Per-term values `g_{k,c} · x`.
    pub fn term_values(&self, state: &[f64]) -> Vec<[f64; 2]> {
        self.weights
            .iter()
            .map(|wc| [0, 1].map(|c| wc[c].iter().map(|&(i, v)| v * state[i]).sum()))
            .collect()
    }

    /// Force at `mu` for the state `x(μ)`.
    pub fn eval(&self, mu: &[f64], state: &[f64]) -> [f64; 2] {
        let mut f = [0.0; 2];
        for (t, phi) in self.term_values(state).iter().zip(&self.factors) {
            let c = phi.eval(mu);
            f[0] += c * t[0];
            f[1] += c * t[1];
        }
        f
    }
}

/// Sorts and merges duplicate indices.
fn compress(w: &mut Vec<(usize, f64)>) {
    w.sort_by_key(|p| p.0);
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(w.len());
    for &(i, v) in w.iter() {
        match out.last_mut() {
            Some(l) if l.0 == i => l.1 += v,
            _ => out.push((i, v)),
        }
    }
    out.retain(|p| p.1 != 0.0);
    *w = out;
}

/// Force on `surface` computed on the reference domain (no mapping).
pub fn compute_drag(op: &AffineOperator, faces: &[SphereFace], surface: Surface, state: &[f64]) -> [f64; 2] {
    DragFunctional::new(op, None, faces, surface).eval(&vec![0.0; op.n_pa()], state)
}

/// Force on `surface` of the mapped domain at `mu`.
pub fn compute_drag_mapped(
    op: &AffineOperator,
    jac: &SeparatedJacobian,
    faces: &[SphereFace],
    surface: Surface,
    mu: &[f64],
    state: &[f64],
) -> [f64; 2] {
    DragFunctional::new(op, Some(jac), faces, surface).eval(mu, state)
}

/// Direct evaluation of the mapped force at `mu` from the physical
/// Jacobian (used to cross-check the separated functional).
pub fn drag_direct(
    op: &AffineOperator,
    jac: &SeparatedJacobian,
    faces: &[SphereFace],
    surface: Surface,
    mu: &[f64],
    state: &[f64],
) -> [f64; 2] {
    let disc = &op.disc;
    let dofs = &disc.dofs;
    let mut f = [0.0; 2];
    for sf in faces.iter().filter(|sf| surface.includes(sf.sphere)) {
        let e = sf.element;
        let g = &disc.elements[e];
        let fg = &g.faces[sf.face];
        let regions = jac.mapping.regions(g.centroid);
        for q in 0..fg.w.len() {
            let am = adj2(&jac.mapping.jacobian_in(&regions, fg.x[q], mu));
            let n = fg.normal[q];
            let an = [am[0][0] * n[0] + am[1][0] * n[1], am[0][1] * n[0] + am[1][1] * n[1]];
            let nv = &disc.tables.face_values[sf.face][q];
            let (mut p, mut l) = (0.0, [[0.0; 2]; 2]);
            for (r, &v) in nv.iter().enumerate() {
                p += v * state[dofs.p_index(e, r)];
                for (i, li) in l.iter_mut().enumerate() {
                    for (j, lij) in li.iter_mut().enumerate() {
                        *lij += v * state[dofs.l_index(e, i, j, r)];
                    }
                }
            }
            for (c, fc) in f.iter_mut().enumerate() {
                let mut s = p * an[c];
                for j in 0..2 {
                    s += (l[c][j] + l[j][c]) * an[j];
                }
                *fc += fg.w[q] * s;
            }
        }
    }
    f
}
