//! Multidimensional `L2(Ω × I)` errors of separated solutions against
//! full-order reference solves at the parametric quadrature points.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use crate::hdg::{Discretisation, HdgSolver};
use crate::mesh::ParametricGrid;
use crate::par::{map_collect, Parallelism};
use crate::pgd::SeparatedSolution;
use crate::Result;

/// Tensor-product Gauss quadrature over the parametric box of a set of
/// grids, in row-major order (last parameter fastest).
#[derive(Clone, Debug)]
pub struct ParamQuadrature {
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    /// Parametric element (per parameter) containing each point.
    pub elements: Vec<Vec<usize>>,
    /// Number of elements per parameter.
    pub element_shape: Vec<usize>,
}

impl ParamQuadrature {
    pub fn new(grids: &[ParametricGrid]) -> Self {
        let mut points = vec![Vec::new()];
        let mut weights = vec![1.0];
        let mut elements = vec![Vec::new()];
        for g in grids {
            let q = g.quadrature();
            let mut np = Vec::with_capacity(points.len() * q.len());
            let mut nw = Vec::with_capacity(points.len() * q.len());
            let mut ne = Vec::with_capacity(points.len() * q.len());
            for ((p, w), e) in points.iter().zip(&weights).zip(&elements) {
                for qp in &q {
                    let mut p2 = p.clone();
                    p2.push(qp.mu);
                    np.push(p2);
                    nw.push(w * qp.weight);
                    let mut e2 = e.clone();
                    e2.push(qp.element);
                    ne.push(e2);
                }
            }
            points = np;
            weights = nw;
            elements = ne;
        }
        ParamQuadrature {
            points,
            weights,
            elements,
            element_shape: grids.iter().map(ParametricGrid::n_elements).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Full-order solutions keyed by the exact parameter value, shared between
/// field and drag error measures.
#[derive(Debug, Default)]
pub struct ReferenceCache {
    map: Mutex<HashMap<Vec<u64>, Arc<Vec<f64>>>>,
}

impl ReferenceCache {
    pub fn new() -> Self {
        Self::default()
    }

    fn key(mu: &[f64]) -> Vec<u64> {
        mu.iter().map(|v| v.to_bits()).collect()
    }

    /// Number of cached solutions.
    pub fn len(&self) -> usize {
        self.map.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Reference states at `mus`, solving (in parallel) only the missing
    /// ones.
    pub fn states(&self, solver: &HdgSolver, mus: &[Vec<f64>], par: Parallelism) -> Result<Vec<Arc<Vec<f64>>>> {
        let missing: Vec<Vec<f64>> = {
            let map = self.map.lock().unwrap();
            let mut seen = std::collections::HashSet::new();
            mus.iter()
                .filter(|m| !map.contains_key(&Self::key(m)) && seen.insert(Self::key(m)))
                .cloned()
                .collect()
        };
        if !missing.is_empty() {
            let sols = solver.solve_many(&missing, par)?;
            let mut map = self.map.lock().unwrap();
            for s in sols {
                map.insert(Self::key(&s.mu), Arc::new(s.state));
            }
        }
        let map = self.map.lock().unwrap();
        Ok(mus.iter().map(|m| map[&Self::key(m)].clone()).collect())
    }
}

/// Relative errors of the velocity, pressure and mixed variable.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FieldErrors {
    pub u: f64,
    pub p: f64,
    pub l: f64,
}

impl FieldErrors {
    pub fn max(&self) -> f64 {
        self.u.max(self.p).max(self.l)
    }
}

/// Squared spatial `L2(Ω)` norms of `u`, `p` and `L` of a state (reference
/// domain, element mass matrices).
pub fn squared_norms(disc: &Discretisation, x: &[f64]) -> [f64; 3] {
    let dofs = &disc.dofs;
    let n = dofs.layout.n;
    let mut out = [0.0; 3];
    let quad = |m: &nalgebra::DMatrix<f64>, v: &[f64]| -> f64 {
        let mut s = 0.0;
        for (a, va) in v.iter().enumerate() {
            if *va != 0.0 {
                let mut t = 0.0;
                for (b, vb) in v.iter().enumerate() {
                    t += m[(a, b)] * vb;
                }
                s += va * t;
            }
        }
        s
    };
    for (e, g) in disc.elements.iter().enumerate() {
        for i in 0..2 {
            let o = dofs.u_index(e, i, 0);
            out[0] += quad(&g.mass, &x[o..o + n]);
        }
        let o = dofs.p_index(e, 0);
        out[1] += quad(&g.mass, &x[o..o + n]);
        for i in 0..2 {
            for j in 0..2 {
                let o = dofs.l_index(e, i, j, 0);
                out[2] += quad(&g.mass, &x[o..o + n]);
            }
        }
    }
    out
}

/// Relative spatial `L2(Ω)` errors of `x` against `reference`.
pub fn relative_field_error(disc: &Discretisation, x: &[f64], reference: &[f64]) -> FieldErrors {
    let d: Vec<f64> = x.iter().zip(reference).map(|(a, b)| a - b).collect();
    let num = squared_norms(disc, &d);
    let den = squared_norms(disc, reference);
    let r = |a: f64, b: f64| if b > 0.0 { (a / b).sqrt() } else { a.sqrt() };
    FieldErrors {
        u: r(num[0], den[0]),
        p: r(num[1], den[1]),
        l: r(num[2], den[2]),
    }
}

/// `E` of the first `m` modes, for every `m = 1..=M`: relative
/// `L2(Ω × I)` errors integrated with the spatial element quadrature and
/// the parametric Gauss rule, `refs[q]` being the reference at
/// `quad.points[q]`.
pub fn errors_vs_modes(
    sol: &SeparatedSolution,
    disc: &Discretisation,
    quad: &ParamQuadrature,
    refs: &[Arc<Vec<f64>>],
    par: Parallelism,
) -> Result<Vec<FieldErrors>> {
    let nm = sol.n_modes();
    let per_point = map_collect(par, quad.len(), |q| -> Result<(Vec<[f64; 3]>, [f64; 3])> {
        let mu = &quad.points[q];
        let psi = sol.parametric_values(mu)?;
        let r = &refs[q];
        let mut x = vec![0.0; sol.n_dofs()];
        let mut nums = Vec::with_capacity(nm);
        for (mode, p) in sol.modes.iter().zip(&psi) {
            let mut start = 0;
            for (s, f) in mode.sigma.iter().zip(&mode.fields) {
                let c = s * p;
                if c != 0.0 {
                    for (o, v) in x[start..start + f.len()].iter_mut().zip(f) {
                        *o += c * v;
                    }
                }
                start += f.len();
            }
            let d: Vec<f64> = x.iter().zip(r.iter()).map(|(a, b)| a - b).collect();
            nums.push(squared_norms(disc, &d));
        }
        Ok((nums, squared_norms(disc, r)))
    });
    let mut num = vec![[0.0; 3]; nm];
    let mut den = [0.0; 3];
    for (res, w) in per_point.into_iter().zip(&quad.weights) {
        let (nums, d) = res?;
        for (acc, v) in num.iter_mut().zip(&nums) {
            for c in 0..3 {
                acc[c] += w * v[c];
            }
        }
        for c in 0..3 {
            den[c] += w * d[c];
        }
    }
    let r = |a: f64, b: f64| if b > 0.0 { (a / b).sqrt() } else { a.sqrt() };
    Ok(num
        .iter()
        .map(|n| FieldErrors {
            u: r(n[0], den[0]),
            p: r(n[1], den[1]),
            l: r(n[2], den[2]),
        })
        .collect())
}

/// `E` of the complete separated solution.
pub fn multidim_l2_error(
    sol: &SeparatedSolution,
    disc: &Discretisation,
    quad: &ParamQuadrature,
    refs: &[Arc<Vec<f64>>],
    par: Parallelism,
) -> Result<FieldErrors> {
    if sol.n_modes() == 0 {
        let mut den = [0.0; 3];
        for (r, w) in refs.iter().zip(&quad.weights) {
            let d = squared_norms(disc, r);
            for c in 0..3 {
                den[c] += w * d[c];
            }
        }
        let one = |d: f64| if d > 0.0 { 1.0 } else { 0.0 };
        return Ok(FieldErrors {
            u: one(den[0]),
            p: one(den[1]),
            l: one(den[2]),
        });
    }
    Ok(*errors_vs_modes(sol, disc, quad, refs, par)?.last().unwrap())
}
