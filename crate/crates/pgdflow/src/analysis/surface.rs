//! Separated drag response surfaces and their errors.

use crate::hdg::{DragFunctional, Surface};
use crate::mapping::ParamFactor;
use crate::mesh::ParametricGrid;
use crate::pgd::SeparatedSolution;
use crate::{Error, Result};

use super::errors::ParamQuadrature;

/// `F(μ) = Σ_j ψ^j(μ) Σ_k φ_k(μ) D^j_k`: drag coefficients of every spatial
/// mode, per term of the (possibly parameter-dependent) force functional.
#[derive(Clone, Debug)]
pub struct ResponseSurface {
    pub surface: Surface,
    pub grids: Vec<ParametricGrid>,
    /// Parametric factors of every mode.
    pub psi: Vec<Vec<Vec<f64>>>,
    /// Factors `φ_k` of the functional terms.
    pub factors: Vec<ParamFactor>,
    /// `D^j_k` per mode `j` and term `k`, both force components.
    pub coefficients: Vec<Vec<[f64; 2]>>,
}

impl ResponseSurface {
    pub fn n_modes(&self) -> usize {
        self.coefficients.len()
    }

    /// Force of the first `m` modes at `mu`.
    pub fn eval_truncated(&self, mu: &[f64], m: usize) -> Result<[f64; 2]> {
        if mu.len() != self.grids.len() {
            return Err(Error::Invalid(format!("expected {} parameter values", self.grids.len())));
        }
        let phi: Vec<f64> = self.factors.iter().map(|f| f.eval(mu)).collect();
        let mut out = [0.0; 2];
        for (psi, d) in self.psi.iter().zip(&self.coefficients).take(m) {
            let mut p = 1.0;
            for (j, (g, v)) in self.grids.iter().zip(psi).enumerate() {
                p *= g.interpolate(v, mu[j]).ok_or_else(|| {
                    let (lo, hi) = g.interval();
                    Error::OutOfRange { index: j, value: mu[j], lo, hi }
                })?;
            }
            for (dk, f) in d.iter().zip(&phi) {
                out[0] += p * f * dk[0];
                out[1] += p * f * dk[1];
            }
        }
        Ok(out)
    }

    /// Force at `mu`.
    pub fn eval(&self, mu: &[f64]) -> Result<[f64; 2]> {
        self.eval_truncated(mu, self.n_modes())
    }
}

/// Response surface of `sol` for the force functional `functional` (one
/// functional evaluation per mode).
pub fn drag_response_surface(sol: &SeparatedSolution, functional: &DragFunctional, surface: Surface) -> Result<ResponseSurface> {
    if functional.weights.iter().all(|w| w[0].is_empty() && w[1].is_empty()) {
        return Err(Error::Invalid(format!("the {} surface has no faces", surface.name())));
    }
    let coefficients = sol
        .modes
        .iter()
        .map(|m| functional.term_values(&m.spatial_state()))
        .collect();
    Ok(ResponseSurface {
        surface,
        grids: sol.grids.clone(),
        psi: sol.modes.iter().map(|m| m.psi.clone()).collect(),
        factors: functional.factors.clone(),
        coefficients,
    })
}

/// Pointwise drag error at one parametric quadrature point.
#[derive(Clone, Debug, PartialEq)]
pub struct PointError {
    pub mu: Vec<f64>,
    pub value: f64,
    pub reference: f64,
    /// `|F − F_ref| / |F_ref|`; `None` where the reference vanishes.
    pub eps: Option<f64>,
}

/// Per-element mean of the pointwise drag error.
#[derive(Clone, Debug, PartialEq)]
pub struct ElementError {
    /// Parametric element index per parameter.
    pub element: Vec<usize>,
    /// Element centre per parameter.
    pub centre: Vec<f64>,
    /// Mean of the defined pointwise errors (`None` if all were excluded).
    pub mean: Option<f64>,
}

/// Drag error measures of a response surface.
#[derive(Clone, Debug)]
pub struct DragErrors {
    /// `E_D = ‖F − F_ref‖_{L2(I)} / ‖F_ref‖_{L2(I)}`.
    pub e_d: f64,
    pub points: Vec<PointError>,
    pub smoothed: Vec<ElementError>,
    /// Points excluded from `ε_D` because the reference drag vanishes.
    pub excluded: usize,
}

/// `E_D` from values at the quadrature points.
pub fn drag_l2_error(quad: &ParamQuadrature, values: &[f64], reference: &[f64]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for ((w, a), b) in quad.weights.iter().zip(values).zip(reference) {
        num += w * (a - b) * (a - b);
        den += w * b * b;
    }
    if den > 0.0 {
        (num / den).sqrt()
    } else {
        num.sqrt()
    }
}

/// `E_D`, pointwise `ε_D` and the per-element smoothed map for the drag
/// values `values` against `reference` at the quadrature points.
pub fn drag_errors(quad: &ParamQuadrature, grids: &[ParametricGrid], values: &[f64], reference: &[f64]) -> DragErrors {
    let e_d = drag_l2_error(quad, values, reference);
    let points: Vec<PointError> = quad
        .points
        .iter()
        .zip(values)
        .zip(reference)
        .map(|((mu, &a), &b)| PointError {
            mu: mu.clone(),
            value: a,
            reference: b,
            eps: (b != 0.0).then(|| (a - b).abs() / b.abs()),
        })
        .collect();
    let excluded = points.iter().filter(|p| p.eps.is_none()).count();
    let n_el: usize = quad.element_shape.iter().product();
    let mut sums = vec![(0.0, 0usize); n_el];
    for (p, e) in points.iter().zip(&quad.elements) {
        if let Some(v) = p.eps {
            let k = crate::pgd::tensor::flat_index(e, &quad.element_shape);
            sums[k].0 += v;
            sums[k].1 += 1;
        }
    }
    let smoothed = sums
        .iter()
        .enumerate()
        .map(|(k, &(s, c))| {
            let element = crate::pgd::tensor::multi_index(k, &quad.element_shape);
            let centre = element
                .iter()
                .zip(grids)
                .map(|(&e, g)| {
                    let (lo, hi) = g.element_bounds(e);
                    0.5 * (lo + hi)
                })
                .collect();
            ElementError {
                element,
                centre,
                mean: (c > 0).then(|| s / c as f64),
            }
        })
        .collect();
    DragErrors {
        e_d,
        points,
        smoothed,
        excluded,
    }
}

/// Drag component (flow direction) of the reference states at the
/// quadrature points.
pub fn reference_drag(functional: &DragFunctional, quad: &ParamQuadrature, refs: &[std::sync::Arc<Vec<f64>>]) -> Vec<f64> {
    quad.points
        .iter()
        .zip(refs)
        .map(|(mu, r)| functional.eval(mu, r)[0])
        .collect()
}

/// Drag component of the first `m` modes of a surface at the quadrature
/// points.
pub fn surface_drag(surface: &ResponseSurface, quad: &ParamQuadrature, m: usize) -> Result<Vec<f64>> {
    quad.points
        .iter()
        .map(|mu| surface.eval_truncated(mu, m).map(|f| f[0]))
        .collect()
}

/// `E_D` of the first `m` modes for every `m = 1..=M`.
pub fn drag_errors_vs_modes(surface: &ResponseSurface, quad: &ParamQuadrature, reference: &[f64]) -> Result<Vec<f64>> {
    (1..=surface.n_modes())
        .map(|m| Ok(drag_l2_error(quad, &surface_drag(surface, quad, m)?, reference)))
        .collect()
}
