//! Recompression of separated solutions.
//!
//! The tensor a solution defines on its own parametric nodes is reduced
//! exactly along the spatial axis by an orthonormal basis of the input's
//! spatial modes, giving a small core tensor. With one parameter the core
//! is a matrix and is truncated by its SVD. Modes with parallel parametric
//! factors are merged exactly beforehand. With several parameters the
//! smallest canonical rank reaching the tolerance is searched by
//! alternating least squares over all terms simultaneously, starting from
//! the lower bound given by the ranks of the core's unfoldings and
//! initialised by greedy rank-one deflation.

use nalgebra::{DMatrix, DVector};

use super::aposteriori::{outer, Residual};
use super::repr::{normalize_mode, Mode, Provenance, SeparatedSolution};
use super::tensor::multi_index;
use crate::par::Parallelism;
use crate::{Error, Result};

/// A rank-one term of the core tensor: spatial core coefficients and
/// (unnormalised) parametric factors.
type Term = (Vec<f64>, Vec<Vec<f64>>);

const MAX_SWEEPS: usize = 3000;
const CHECK_EVERY: usize = 5;
/// A rank is abandoned when the error drops by less than this factor over
/// [`STALL_WINDOW`] sweeps.
const STALL_FACTOR: f64 = 0.98;
const STALL_WINDOW: usize = 50;

/// Recompresses `sol` to the smallest number of modes whose relative
/// Frobenius error on the parametric nodes is at most `tol`, never
/// returning more modes than the input. When no smaller representation is
/// found the input modes are kept.
pub fn compress(sol: &SeparatedSolution, tol: f64) -> Result<SeparatedSolution> {
    let m_in = sol.n_modes();
    if m_in == 0 {
        return Err(Error::Invalid("cannot compress an empty separated solution".into()));
    }
    if !(tol >= 0.0) {
        return Err(Error::Invalid(format!("compression tolerance must be non-negative, got {tol}")));
    }
    let mut out = sol.clone();
    out.provenance = Provenance::Compressed;
    let merged = merge_collinear(sol)?;
    if merged.len() < m_in {
        out.modes = merged.clone();
        out.history = merged.iter().map(|m| m.sigma[0]).collect();
    }
    let m_in = merged.len();

    let n = sol.n_dofs();
    let mut f = DMatrix::zeros(n, m_in);
    for (k, m) in merged.iter().enumerate() {
        f.set_column(k, &DVector::from_vec(m.spatial_state()));
    }
    let qr = f.qr();
    let q = qr.q();
    let r = qr.r();
    let rank_sp = r.nrows();
    let shape: Vec<usize> = sol.grids.iter().map(|g| g.n_nodes()).collect();
    let np: usize = shape.iter().product();
    let psi_t: Vec<Vec<f64>> = merged.iter().map(|m| outer(&m.psi, np)).collect();
    let mut core = vec![0.0; rank_sp * np];
    for p in 0..np {
        for i in 0..rank_sp {
            core[p * rank_sp + i] = (0..m_in).map(|k| r[(i, k)] * psi_t[k][p]).sum();
        }
    }
    let core = Core {
        m: rank_sp,
        shape,
        data: core,
    };
    let total = core.norm();
    if total == 0.0 {
        return Err(Error::ZeroMode);
    }
    let target = tol * total;

    let terms = if core.shape.len() == 1 {
        Some(svd_truncation(&core, target))
    } else {
        canonical_search(&core, target, m_in)?
    };
    let terms = match terms {
        Some(t) if t.len() <= m_in => t,
        _ => {
            log::warn!("compression found no representation with fewer than {m_in} modes; keeping them");
            return Ok(out);
        }
    };
    out.modes.clear();
    out.history.clear();
    for (c, psi) in terms {
        let full = &q * DVector::from_vec(c);
        out.push(normalize_mode(full.as_slice(), &sol.blocks, psi)?);
    }
    log::info!("compressed {} modes to {}", m_in, out.n_modes());
    Ok(out)
}

/// Sums modes whose parametric factors are parallel in every parameter
/// (an exact reduction); modes that cancel are dropped.
fn merge_collinear(sol: &SeparatedSolution) -> Result<Vec<Mode>> {
    const COLLINEAR: f64 = 1e-13;
    let mut groups: Vec<(Vec<Vec<f64>>, Vec<f64>)> = Vec::new();
    for m in &sol.modes {
        let state = m.spatial_state();
        let found = groups.iter_mut().find_map(|(psi, acc)| {
            let mut sign = 1.0;
            for (a, b) in psi.iter().zip(&m.psi) {
                let c: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                if (c.abs() - 1.0).abs() > COLLINEAR {
                    return None;
                }
                sign *= c.signum();
            }
            Some((acc, sign))
        });
        match found {
            Some((acc, sign)) => {
                for (a, v) in acc.iter_mut().zip(&state) {
                    *a += sign * v;
                }
            }
            None => groups.push((m.psi.clone(), state)),
        }
    }
    let scale = sol.modes.iter().map(|m| m.spatial_state().iter().map(|x| x * x).sum::<f64>()).fold(0.0, f64::max).sqrt();
    let mut out = Vec::with_capacity(groups.len());
    for (psi, state) in groups {
        if state.iter().map(|x| x * x).sum::<f64>().sqrt() > 1e-15 * scale {
            out.push(normalize_mode(&state, &sol.blocks, psi)?);
        }
    }
    if out.is_empty() {
        return Err(Error::ZeroMode);
    }
    Ok(out)
}

/// Dense core tensor: `m` spatial coefficients per parametric position,
/// positions row-major over `shape`.
struct Core {
    m: usize,
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Core {
    fn n_pos(&self) -> usize {
        self.shape.iter().product()
    }

    fn norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Spatial unfolding (`m × n_pos`).
    fn spatial_unfolding(&self) -> DMatrix<f64> {
        DMatrix::from_column_slice(self.m, self.n_pos(), &self.data)
    }

    /// Unfolding along parameter `j` (`n_j × rest`).
    fn param_unfolding(&self, j: usize) -> DMatrix<f64> {
        let nj = self.shape[j];
        let cols = self.data.len() / nj;
        let mut u = DMatrix::zeros(nj, cols);
        for p in 0..self.n_pos() {
            let idx = multi_index(p, &self.shape);
            let other = idx
                .iter()
                .zip(&self.shape)
                .enumerate()
                .filter(|&(l, _)| l != j)
                .fold(0, |acc, (_, (&i, &s))| acc * s + i);
            for i in 0..self.m {
                u[(idx[j], other * self.m + i)] = self.data[p * self.m + i];
            }
        }
        u
    }
}

/// Singular values in decreasing order.
fn singular_values(a: DMatrix<f64>) -> Vec<f64> {
    let mut s: Vec<f64> = a.svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// Smallest `r` whose discarded tail `(Σ_{i≥r} s_i²)^{1/2}` is at most
/// `target`.
fn truncation_rank(s: &[f64], target: f64) -> usize {
    let mut tail = 0.0;
    for r in (0..s.len()).rev() {
        tail += s[r] * s[r];
        if tail.sqrt() > target {
            return r + 1;
        }
    }
    0
}

fn svd_truncation(core: &Core, target: f64) -> Vec<Term> {
    let svd = core.spatial_unfolding().svd(true, true);
    let (u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let s: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let r = truncation_rank(&s, target).max(1);
    order[..r]
        .iter()
        .map(|&c| {
            let sv = svd.singular_values[c];
            let coeffs = u.column(c).iter().map(|x| x * sv).collect();
            (coeffs, vec![vt.row(c).iter().copied().collect()])
        })
        .collect()
}

/// Smallest canonical rank (at most `cap`) reaching `target`, or `None`.
fn canonical_search(core: &Core, target: f64, cap: usize) -> Result<Option<Vec<Term>>> {
    let mut r_min = truncation_rank(&singular_values(core.spatial_unfolding()), target);
    for j in 0..core.shape.len() {
        r_min = r_min.max(truncation_rank(&singular_values(core.param_unfolding(j)), target));
    }
    let r_min = r_min.max(1);

    // Greedy deflation: an upper bound and the initial guesses.
    let mut res = Residual::new(core.m, core.shape.clone(), core.data.clone(), Parallelism::Sequential);
    let mut greedy: Vec<Term> = Vec::new();
    let mut err = res.norm();
    while greedy.len() < cap && err > target {
        let t = match res.als_rank_one(1e-15, 20_000) {
            Ok(t) => t,
            Err(Error::ZeroMode) => break,
            Err(e) => return Err(e),
        };
        greedy.push((t.f.iter().map(|x| x * t.sigma).collect(), t.psi.clone()));
        res.subtract(&t);
        err = res.norm();
    }
    let greedy_ok = err <= target;
    let upper = if greedy_ok { greedy.len() } else { cap + 1 };
    for r in r_min..upper {
        if r > greedy.len() {
            break;
        }
        if let Some(t) = cp_als(core, &greedy[..r], target) {
            return Ok(Some(t));
        }
    }
    Ok(greedy_ok.then_some(greedy))
}

/// Alternating least squares for all `r` terms of a canonical
/// decomposition of `core`, started at `init`. Returns the terms once the
/// error is at most `target`; `None` when it stalls above it.
fn cp_als(core: &Core, init: &[Term], target: f64) -> Option<Vec<Term>> {
    let r = init.len();
    let d = core.shape.len();
    let dims: Vec<usize> = std::iter::once(core.m).chain(core.shape.iter().copied()).collect();
    let mut a: Vec<DMatrix<f64>> = dims
        .iter()
        .enumerate()
        .map(|(k, &nk)| {
            DMatrix::from_fn(nk, r, |i, c| if k == 0 { init[c].0[i] } else { init[c].1[k - 1][i] })
        })
        .collect();
    let positions: Vec<Vec<usize>> = (0..core.n_pos()).map(|p| multi_index(p, &core.shape)).collect();
    let mut last_check = f64::INFINITY;
    let mut window_start = f64::INFINITY;
    for sweep in 1..=MAX_SWEEPS {
        for k in 0..=d {
            let mut v = DMatrix::from_element(r, r, 1.0);
            for (l, al) in a.iter().enumerate() {
                if l != k {
                    v.component_mul_assign(&(al.transpose() * al));
                }
            }
            let m = mttkrp(core, &a, &positions, k);
            let tol = 1e-14 * v.amax();
            let vinv = v.pseudo_inverse(tol).ok()?;
            a[k] = m * vinv;
        }
        // Keep the parametric factors at unit norm.
        for c in 0..r {
            for k in 1..=d {
                let n = a[k].column(c).norm();
                if n > 0.0 {
                    a[k].column_mut(c).unscale_mut(n);
                    a[0].column_mut(c).scale_mut(n);
                }
            }
        }
        if sweep % CHECK_EVERY == 0 {
            let err = reconstruction_error(core, &a, &positions);
            if !err.is_finite() {
                return None;
            }
            if err <= target {
                return Some(
                    (0..r)
                        .map(|c| {
                            (
                                a[0].column(c).iter().copied().collect(),
                                (1..=d).map(|k| a[k].column(c).iter().copied().collect()).collect(),
                            )
                        })
                        .collect(),
                );
            }
            if sweep % STALL_WINDOW == 0 {
                if err > STALL_FACTOR * window_start {
                    return None;
                }
                window_start = err;
            }
            last_check = err;
        }
    }
    log::debug!("canonical rank {r}: no convergence, error {last_check:e}");
    None
}

/// Product over the parametric factors `l ≠ skip` at a position.
fn weights(a: &[DMatrix<f64>], idx: &[usize], skip: usize, r: usize) -> Vec<f64> {
    (0..r)
        .map(|c| {
            idx.iter()
                .enumerate()
                .filter(|&(l, _)| l + 1 != skip)
                .map(|(l, &i)| a[l + 1][(i, c)])
                .product()
        })
        .collect()
}

/// Matricised core times the Khatri–Rao product of every factor but `k`.
fn mttkrp(core: &Core, a: &[DMatrix<f64>], positions: &[Vec<usize>], k: usize) -> DMatrix<f64> {
    let r = a[0].ncols();
    let m = core.m;
    let mut out = DMatrix::zeros(a[k].nrows(), r);
    for (p, idx) in positions.iter().enumerate() {
        let x = &core.data[p * m..(p + 1) * m];
        let w = weights(a, idx, k, r);
        if k == 0 {
            for c in 0..r {
                for i in 0..m {
                    out[(i, c)] += x[i] * w[c];
                }
            }
        } else {
            for c in 0..r {
                let y: f64 = (0..m).map(|i| x[i] * a[0][(i, c)]).sum();
                out[(idx[k - 1], c)] += y * w[c];
            }
        }
    }
    out
}

fn reconstruction_error(core: &Core, a: &[DMatrix<f64>], positions: &[Vec<usize>]) -> f64 {
    let r = a[0].ncols();
    let m = core.m;
    let mut sq = 0.0;
    for (p, idx) in positions.iter().enumerate() {
        let w = DVector::from_vec(weights(a, idx, 0, r));
        let col = &a[0] * w;
        for i in 0..m {
            let e = core.data[p * m + i] - col[i];
            sq += e * e;
        }
    }
    sq.sqrt()
}
