//! Least-squares (a posteriori) separation of snapshot tensors: greedy
//! rank-one approximations computed by alternating directions.

use nalgebra::{DMatrix, DVector};

use super::repr::{normalize_mode, Provenance, SeparatedSolution, Variable};
use super::tensor::SnapshotTensor;
use crate::par::{map_collect, Parallelism};
use crate::{Error, Result};

/// Parameters of the greedy separation.
#[derive(Clone, Debug)]
pub struct AposterioriConfig {
    /// Greedy tolerance on `σ_û^m / σ_û^1`.
    pub eta_star: f64,
    /// Tolerance on the relative amplitude change between consecutive
    /// alternating-direction iterates.
    pub eta_sigma: f64,
    /// Maximum number of alternating-direction iterations per mode.
    pub n_i: usize,
    pub max_modes: usize,
    pub par: Parallelism,
}

impl Default for AposterioriConfig {
    fn default() -> Self {
        AposterioriConfig {
            eta_star: 1e-6,
            eta_sigma: 1e-10,
            n_i: 200,
            max_modes: 50,
            par: Parallelism::Parallel,
        }
    }
}

impl AposterioriConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta_star > 0.0) || !(self.eta_sigma > 0.0) {
            return Err(Error::Invalid("a posteriori tolerances must be positive".into()));
        }
        if self.n_i == 0 || self.max_modes == 0 {
            return Err(Error::Invalid("a posteriori iteration and mode limits must be at least 1".into()));
        }
        Ok(())
    }
}

/// A rank-one term `σ f ⊗ ψ_1 ⊗ … ⊗ ψ_npa` with unit factors.
#[derive(Clone, Debug)]
pub struct RankOne {
    pub f: Vec<f64>,
    pub psi: Vec<Vec<f64>>,
    pub sigma: f64,
    /// Alternating-direction iterations performed.
    pub iterations: usize,
}

/// A dense residual tensor: `n_dof` spatial entries per parametric
/// position, positions in row-major order over `shape`.
#[derive(Clone, Debug)]
pub struct Residual {
    pub n_dof: usize,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
    par: Parallelism,
    /// Gram matrix `RᵀR`, maintained for a single parametric axis.
    gram: Option<DMatrix<f64>>,
}

const CHUNK: usize = 4096;

impl Residual {
    pub fn new(n_dof: usize, shape: Vec<usize>, data: Vec<f64>, par: Parallelism) -> Self {
        assert_eq!(data.len(), n_dof * shape.iter().product::<usize>());
        let mut r = Residual {
            n_dof,
            shape,
            data,
            par,
            gram: None,
        };
        if r.shape.len() == 1 {
            r.gram = Some(r.compute_gram());
        }
        r
    }

    fn n_pos(&self) -> usize {
        self.shape.iter().product()
    }

    fn column(&self, p: usize) -> &[f64] {
        &self.data[p * self.n_dof..(p + 1) * self.n_dof]
    }

    fn compute_gram(&self) -> DMatrix<f64> {
        let np = self.n_pos();
        let rows = map_collect(self.par, np, |i| {
            let ci = self.column(i);
            (0..np).map(|j| if j < i { 0.0 } else { dot(ci, self.column(j)) }).collect::<Vec<_>>()
        });
        DMatrix::from_fn(np, np, |i, j| if j >= i { rows[i][j] } else { rows[j][i] })
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        let n = self.data.len();
        map_collect(self.par, n.div_ceil(CHUNK), |c| {
            self.data[c * CHUNK..((c + 1) * CHUNK).min(n)].iter().map(|x| x * x).sum::<f64>()
        })
        .iter()
        .sum::<f64>()
        .sqrt()
    }

    /// `R w` for a parametric weight vector `w`.
    pub fn apply(&self, w: &[f64]) -> Vec<f64> {
        let n = self.n_dof;
        let parts = map_collect(self.par, n.div_ceil(CHUNK), |c| {
            let (lo, hi) = (c * CHUNK, ((c + 1) * CHUNK).min(n));
            let mut out = vec![0.0; hi - lo];
            for (p, &wp) in w.iter().enumerate() {
                if wp != 0.0 {
                    for (o, x) in out.iter_mut().zip(&self.data[p * n + lo..p * n + hi]) {
                        *o += wp * x;
                    }
                }
            }
            out
        });
        parts.concat()
    }

    /// `Rᵀ f`.
    pub fn apply_t(&self, f: &[f64]) -> Vec<f64> {
        map_collect(self.par, self.n_pos(), |p| dot(self.column(p), f))
    }

    /// The column with the largest norm (deterministic starting point).
    fn dominant_position(&self) -> usize {
        let norms: Vec<f64> = match &self.gram {
            Some(c) => (0..self.n_pos()).map(|i| c[(i, i)]).collect(),
            None => map_collect(self.par, self.n_pos(), |p| dot(self.column(p), self.column(p))),
        };
        norms
            .iter()
            .enumerate()
            .fold((0, -1.0), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) })
            .0
    }

    /// Best rank-one approximation by alternating directions. Each sweep
    /// updates the spatial factor from the current parametric factors, then
    /// every parametric factor in turn from the others; `σ` is the norm of
    /// the last contraction. Iterates until the relative change of `σ`
    /// between sweeps is at most `eta_sigma`, or `n_i` sweeps.
    pub fn als_rank_one(&self, eta_sigma: f64, n_i: usize) -> Result<RankOne> {
        let np = self.n_pos();
        let start = self.dominant_position();
        let idx = super::tensor::multi_index(start, &self.shape);
        let mut psi: Vec<Vec<f64>> = self
            .shape
            .iter()
            .zip(&idx)
            .map(|(&n, &i)| {
                let mut v = vec![0.0; n];
                v[i] = 1.0;
                v
            })
            .collect();
        let mut sigma_prev = 0.0;
        let mut iterations = 0;
        if let Some(c) = &self.gram {
            // One parametric axis: f ∝ Rψ and ψ ∝ Rᵀf combine into ψ ∝ Cψ.
            let mut v = DVector::from_vec(psi.pop().unwrap());
            for q in 1..=n_i {
                iterations = q;
                let cv = c * &v;
                let rr = v.dot(&cv);
                if !(rr > 0.0) {
                    return Err(Error::ZeroMode);
                }
                let nc = cv.norm();
                let sigma = nc / rr.sqrt();
                v = cv / nc;
                let eps = (sigma - sigma_prev).abs() / sigma;
                sigma_prev = sigma;
                if eps <= eta_sigma {
                    break;
                }
            }
            psi.push(v.as_slice().to_vec());
        } else {
            for q in 1..=n_i {
                iterations = q;
                let w = outer(&psi, np);
                let f = unit(self.apply(&w)).ok_or(Error::ZeroMode)?;
                let g = self.apply_t(&f);
                let mut sigma = 0.0;
                for j in 0..psi.len() {
                    let c = contract_except(&g, &self.shape, &psi, j);
                    sigma = norm(&c);
                    psi[j] = unit(c).ok_or(Error::ZeroMode)?;
                }
                let eps = (sigma - sigma_prev).abs() / sigma;
                sigma_prev = sigma;
                if eps <= eta_sigma {
                    break;
                }
            }
        }
        let rw = self.apply(&outer(&psi, np));
        let sigma = norm(&rw);
        let f = unit(rw).ok_or(Error::ZeroMode)?;
        Ok(RankOne {
            f,
            psi,
            sigma,
            iterations,
        })
    }

    /// `R ← R − σ f ⊗ ψ`.
    pub fn subtract(&mut self, t: &RankOne) {
        let n = self.n_dof;
        let w = outer(&t.psi, self.n_pos());
        if let Some(c) = &mut self.gram {
            // C − ψ(Cψ)ᵀ − (Cψ)ψᵀ + σ²ψψᵀ with σ f = Rψ.
            let v = DVector::from_column_slice(&t.psi[0]);
            let cv = &*c * &v;
            let s2 = t.sigma * t.sigma;
            *c -= &v * cv.transpose() + &cv * v.transpose() - s2 * &v * v.transpose();
        }
        let sf: Vec<f64> = t.f.iter().map(|x| t.sigma * x).collect();
        #[cfg(feature = "parallel")]
        if self.par.is_parallel() {
            use rayon::prelude::*;
            self.data.par_chunks_mut(n).zip(w.par_iter()).for_each(|(col, &wp)| {
                if wp != 0.0 {
                    for (x, s) in col.iter_mut().zip(&sf) {
                        *x -= wp * s;
                    }
                }
            });
            return;
        }
        for (col, &wp) in self.data.chunks_mut(n).zip(&w) {
            if wp != 0.0 {
                for (x, s) in col.iter_mut().zip(&sf) {
                    *x -= wp * s;
                }
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

fn unit(mut v: Vec<f64>) -> Option<Vec<f64>> {
    let n = norm(&v);
    if n > 0.0 && n.is_finite() {
        v.iter_mut().for_each(|x| *x /= n);
        Some(v)
    } else {
        None
    }
}

/// Row-major outer product `ψ_1 ⊗ … ⊗ ψ_npa`.
pub(crate) fn outer(psi: &[Vec<f64>], np: usize) -> Vec<f64> {
    let mut w = vec![1.0];
    for p in psi {
        w = w.iter().flat_map(|&a| p.iter().map(move |&b| a * b)).collect();
    }
    debug_assert_eq!(w.len(), np);
    w
}

/// Contraction of a parametric tensor with every factor except the `j`-th.
fn contract_except(g: &[f64], shape: &[usize], psi: &[Vec<f64>], j: usize) -> Vec<f64> {
    let mut out = vec![0.0; shape[j]];
    let mut idx = vec![0usize; shape.len()];
    for &gp in g {
        let mut prod = gp;
        for (l, (&i, p)) in idx.iter().zip(psi).enumerate() {
            if l != j {
                prod *= p[i];
            }
        }
        out[idx[j]] += prod;
        for l in (0..shape.len()).rev() {
            idx[l] += 1;
            if idx[l] < shape[l] {
                break;
            }
            idx[l] = 0;
        }
    }
    out
}

/// Result of a greedy separation.
#[derive(Clone, Debug)]
pub struct Separation {
    pub solution: SeparatedSolution,
    /// Residual Frobenius norms: the input norm followed by the norm after
    /// every accepted mode.
    pub residual_norms: Vec<f64>,
    /// Alternating-direction iterations per mode.
    pub iterations: Vec<usize>,
}

/// Greedy rank-one separation of a snapshot tensor; per-variable
/// amplitudes are the block norms of the spatial factor. Performs no
/// full-order solves; the solution's counter is the tensor's.
pub fn separate(tensor: &SnapshotTensor, cfg: &AposterioriConfig) -> Result<Separation> {
    cfg.validate()?;
    let mut res = Residual::new(tensor.n_dof(), tensor.shape(), tensor.data.clone(), cfg.par);
    let mut sol = SeparatedSolution::new(tensor.grids.clone(), tensor.blocks, Provenance::Aposteriori);
    sol.solves = tensor.solves;
    let mut norms = vec![res.norm()];
    let mut iterations = Vec::new();
    let floor = 1e-14 * norms[0];
    while sol.n_modes() < cfg.max_modes && norms[norms.len() - 1] > floor {
        let t = match res.als_rank_one(cfg.eta_sigma, cfg.n_i) {
            Ok(t) => t,
            Err(Error::ZeroMode) => break,
            Err(e) => return Err(e),
        };
        let sf: Vec<f64> = t.f.iter().map(|x| t.sigma * x).collect();
        let mode = normalize_mode(&sf, &tensor.blocks, t.psi.clone())?;
        res.subtract(&t);
        norms.push(res.norm());
        iterations.push(t.iterations);
        log::info!(
            "method=aposteriori m={} iterations={} sigma_hat={:e} residual={:e}",
            sol.n_modes() + 1,
            t.iterations,
            mode.amplitude(Variable::Hat),
            norms[norms.len() - 1]
        );
        sol.push(mode);
        if stop_ratio(&sol) <= cfg.eta_star {
            break;
        }
    }
    Ok(Separation {
        solution: sol,
        residual_norms: norms,
        iterations,
    })
}

/// `σ_û^m / σ_û^1` of the last mode (total amplitudes when the hybrid block
/// is empty).
pub(crate) fn stop_ratio(sol: &SeparatedSolution) -> f64 {
    let h = &sol.history;
    if h[0] > 0.0 {
        h[h.len() - 1] / h[0]
    } else {
        let tot = |m: &super::repr::Mode| m.sigma.iter().map(|s| s * s).sum::<f64>().sqrt();
        tot(&sol.modes[sol.n_modes() - 1]) / tot(&sol.modes[0])
    }
}

/// Greedy separation of a snapshot tensor (Algorithm of the least-squares
/// PGD).
pub fn run_aposteriori(tensor: &SnapshotTensor, cfg: &AposterioriConfig) -> Result<SeparatedSolution> {
    separate(tensor, cfg).map(|s| s.solution)
}
