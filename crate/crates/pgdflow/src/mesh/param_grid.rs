//! One-dimensional high-order grids for the parametric coordinates.

use super::{basis::LineBasis, fekete_nodes_1d, gauss_quadrature_1d};
use crate::{Error, Result};

/// Relative slack accepted when locating points at the interval ends.
const EDGE_SLACK: f64 = 1e-12;

/// A quadrature point of a parametric grid.
#[derive(Clone, Debug)]
pub struct ParamQuadPoint {
    pub mu: f64,
    pub weight: f64,
    pub element: usize,
    /// Values of the element's `k + 1` local basis functions at `mu`.
    pub basis: Vec<f64>,
}

/// Uniform partition of `[a, b]` into `n_elements` elements of degree `k`
/// with Gauss–Lobatto (1D Fekete) nodes, continuous across elements.
#[derive(Clone, Debug)]
pub struct ParametricGrid {
    a: f64,
    b: f64,
    n_el: usize,
    k: usize,
    basis: LineBasis,
    n_gauss: usize,
}

impl ParametricGrid {
    /// Grid with the default `k + 1` Gauss points per element, which is exact
    /// for degree-`2k` products of basis functions.
    pub fn new(a: f64, b: f64, n_elements: usize, k: usize) -> Result<Self> {
        Self::with_gauss(a, b, n_elements, k, k + 1)
    }

    /// Grid with an explicit number of Gauss points per element.
    pub fn with_gauss(a: f64, b: f64, n_elements: usize, k: usize, n_gauss: usize) -> Result<Self> {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::Invalid(format!("empty parametric interval [{a}, {b}]")));
        }
        if n_elements == 0 || n_gauss == 0 {
            return Err(Error::Invalid("parametric grid needs elements and Gauss points".into()));
        }
        let basis = LineBasis::new(fekete_nodes_1d(k)?);
        Ok(ParametricGrid {
            a,
            b,
            n_el: n_elements,
            k,
            basis,
            n_gauss,
        })
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn n_elements(&self) -> usize {
        self.n_el
    }

    pub fn degree(&self) -> usize {
        self.k
    }

    pub fn n_gauss(&self) -> usize {
        self.n_gauss
    }

    pub fn n_nodes(&self) -> usize {
        self.n_el * self.k + 1
    }

    fn h(&self) -> f64 {
        (self.b - self.a) / self.n_el as f64
    }

    /// Bounds of element `e`.
    pub fn element_bounds(&self, e: usize) -> (f64, f64) {
        let h = self.h();
        (self.a + e as f64 * h, self.a + (e + 1) as f64 * h)
    }

    /// Global coordinates of all nodes (ascending).
    pub fn nodes(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_nodes());
        for e in 0..self.n_el {
            let (lo, hi) = self.element_bounds(e);
            let start = if e == 0 { 0 } else { 1 };
            for &r in &self.basis.nodes()[start..] {
                out.push(lo + 0.5 * (r + 1.0) * (hi - lo));
            }
        }
        let last = out.len() - 1;
        out[last] = self.b;
        out
    }

    /// Global node index of local node `i` of element `e`.
    pub fn global_node(&self, e: usize, i: usize) -> usize {
        e * self.k + i
    }

    /// Whether `mu` lies in the interval (with a tiny relative slack).
    pub fn contains(&self, mu: f64) -> bool {
        let tol = EDGE_SLACK * (self.b - self.a).max(1.0);
        mu >= self.a - tol && mu <= self.b + tol
    }

    /// Element containing `mu` and the local basis values there.
    pub fn basis_at(&self, mu: f64) -> Option<(usize, Vec<f64>)> {
        if !self.contains(mu) {
            return None;
        }
        let h = self.h();
        let e = (((mu - self.a) / h).floor().max(0.0) as usize).min(self.n_el - 1);
        let (lo, hi) = self.element_bounds(e);
        let xi = (2.0 * (mu - lo) / (hi - lo) - 1.0).clamp(-1.0, 1.0);
        Some((e, self.basis.eval(xi)))
    }

    /// Interpolates nodal `values` at `mu`.
    pub fn interpolate(&self, values: &[f64], mu: f64) -> Option<f64> {
        let (e, b) = self.basis_at(mu)?;
        Some(
            b.iter()
                .enumerate()
                .map(|(i, bi)| bi * values[self.global_node(e, i)])
                .sum(),
        )
    }

    /// All quadrature points, element by element.
    pub fn quadrature(&self) -> Vec<ParamQuadPoint> {
        let (g, w) = gauss_quadrature_1d(self.n_gauss);
        let mut out = Vec::with_capacity(self.n_el * self.n_gauss);
        for e in 0..self.n_el {
            let (lo, hi) = self.element_bounds(e);
            let jac = 0.5 * (hi - lo);
            for (xi, wi) in g.iter().zip(&w) {
                out.push(ParamQuadPoint {
                    mu: lo + (xi + 1.0) * jac,
                    weight: wi * jac,
                    element: e,
                    basis: self.basis.eval(*xi),
                });
            }
        }
        out
    }

    /// Grid on the same elements with degree `sub_k`, whose nodes are a
    /// subset of this grid's nodes, and the indices of those nodes here.
    /// Valid for `sub_k = k`, `sub_k = 1` and, for even `k`, `sub_k = 2`.
    pub fn subgrid(&self, sub_k: usize) -> Result<(ParametricGrid, Vec<usize>)> {
        let step = match sub_k {
            s if s == self.k => 1,
            1 => self.k,
            2 if self.k.is_multiple_of(2) => self.k / 2,
            _ => {
                return Err(Error::Invalid(format!(
                    "degree-{sub_k} nodes are not nested in degree-{} Gauss–Lobatto nodes",
                    self.k
                )))
            }
        };
        let sub = ParametricGrid::with_gauss(self.a, self.b, self.n_el, sub_k, self.n_gauss)?;
        let idx: Vec<usize> = (0..sub.n_nodes()).map(|i| i * step).collect();
        Ok((sub, idx))
    }

    /// Dense consistent mass matrix `∫ N_a N_b w(μ) dμ` for a weight sampled
    /// at the quadrature points (in [`ParametricGrid::quadrature`] order).
    pub fn weighted_mass(&self, quad: &[ParamQuadPoint], weight: &[f64]) -> nalgebra::DMatrix<f64> {
        let n = self.n_nodes();
        let mut m = nalgebra::DMatrix::zeros(n, n);
        for (q, wq) in quad.iter().zip(weight) {
            let s = q.weight * wq;
            for (i, bi) in q.basis.iter().enumerate() {
                let gi = self.global_node(q.element, i);
                for (j, bj) in q.basis.iter().enumerate() {
                    m[(gi, self.global_node(q.element, j))] += s * bi * bj;
                }
            }
        }
        m
    }

    /// Values at the quadrature points of a nodal vector.
    pub fn values_at_quadrature(&self, quad: &[ParamQuadPoint], nodal: &[f64]) -> Vec<f64> {
        quad.iter()
            .map(|q| {
                q.basis
                    .iter()
                    .enumerate()
                    .map(|(i, b)| b * nodal[self.global_node(q.element, i)])
                    .sum()
            })
            .collect()
    }

    /// Load vector `∫ N_a f(μ) dμ` for `f` sampled at the quadrature points.
    pub fn load(&self, quad: &[ParamQuadPoint], f: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_nodes()];
        for (q, fq) in quad.iter().zip(f) {
            for (i, b) in q.basis.iter().enumerate() {
                out[self.global_node(q.element, i)] += q.weight * fq * b;
            }
        }
        out
    }
}
