//! A priori PGD: greedy enrichment where every mode is computed by an
//! alternating-direction fixed point between a spatial HDG-structured solve
//! and one-dimensional parametric solves.
//!
//! With the affine operator `K(μ) = Σ_t c_t(μ) K_t`, `c_t = Π_j c_{t,j}(μ_j)`,
//! the right-hand side `F(μ) = Σ_r f_r(μ) F_r` and previous modes
//! `x^i ⊗ ψ^i`, the new mode `x ⊗ ψ_1 ⊗ … ⊗ ψ_npa` satisfies
//!
//! * spatial problem (tested with `δx ⊗ ψ`):
//!   `Σ_t β_t K_t x = Σ_r a_r F_r − Σ_i Σ_t b_{t,i} K_t x^i` with
//!   `β_t = Π_j ∫ c_{t,j} ψ_j²`, `a_r = Π_j ∫ f_{r,j} ψ_j` and
//!   `b_{t,i} = Π_j ∫ c_{t,j} ψ_j ψ^i_j`;
//! * parametric problem for `ψ_j` (tested with `x ⊗ δψ_j ⊗ Π_{l≠j} ψ_l`):
//!   a weighted mass matrix whose weight combines the spatial constants
//!   `γ_t = w·K_t x` with the frozen factors of the other parameters, where
//!   `w` is the Galerkin test built from the mode's own fields.

use nalgebra::{DMatrix, DVector};

use super::aposteriori::stop_ratio;
use super::repr::{normalize_mode, Provenance, SeparatedSolution, Variable};
use crate::hdg::AffineOperator;
use crate::mesh::{ParamQuadPoint, ParametricGrid};
use crate::{Error, Result};

/// Initial guess of the parametric factors of a new mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParametricInit {
    /// Constant unit-norm nodal vector for every parameter.
    Constant,
    /// The parametric factors of the previous mode (constant for mode 1).
    Previous,
}

/// Test function of the parametric problems.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParametricTest {
    /// The mode's own fields (Galerkin).
    Galerkin,
    /// The mode's image under the parameter-averaged operator
    /// (least-squares / Petrov–Galerkin).
    Residual,
}

/// Parameters of the a priori PGD.
#[derive(Clone, Debug)]
pub struct AprioriConfig {
    /// Greedy tolerance on `σ_û^m / σ_û^1`.
    pub eta_star: f64,
    /// Alternating-direction corrections per mode.
    pub n_i: usize,
    pub max_modes: usize,
    pub init: ParametricInit,
    pub test: ParametricTest,
    /// Optional early exit of the alternating directions when the relative
    /// correction of the spatial mode falls below this value.
    pub correction_tol: Option<f64>,
}

impl Default for AprioriConfig {
    fn default() -> Self {
        AprioriConfig {
            eta_star: 1e-4,
            n_i: 2,
            max_modes: 30,
            init: ParametricInit::Constant,
            test: ParametricTest::Galerkin,
            correction_tol: None,
        }
    }
}

impl AprioriConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta_star > 0.0) {
            return Err(Error::Invalid("a priori tolerance must be positive".into()));
        }
        if self.n_i == 0 || self.max_modes == 0 {
            return Err(Error::Invalid("a priori iteration and mode limits must be at least 1".into()));
        }
        Ok(())
    }
}

/// Parametric quadrature data shared by all steps: per parameter, the
/// quadrature points and the values of every operator and right-hand-side
/// factor there.
#[derive(Clone, Debug)]
pub struct ParametricSpace {
    pub grids: Vec<ParametricGrid>,
    pub quad: Vec<Vec<ParamQuadPoint>>,
    /// `[j][t][q]`: `c_{t,j}` at quadrature point `q` of parameter `j`.
    pub term_values: Vec<Vec<Vec<f64>>>,
    /// `[j][r][q]`: `f_{r,j}` at quadrature point `q` of parameter `j`.
    pub rhs_values: Vec<Vec<Vec<f64>>>,
}

impl ParametricSpace {
    pub fn new(op: &AffineOperator, grids: Vec<ParametricGrid>) -> Result<Self> {
        if grids.len() != op.n_pa() {
            return Err(Error::Invalid(format!(
                "{} parametric grids for {} parameters",
                grids.len(),
                op.n_pa()
            )));
        }
        for (j, (g, &(lo, hi))) in grids.iter().zip(&op.intervals).enumerate() {
            let (a, b) = g.interval();
            if a < lo - 1e-12 || b > hi + 1e-12 {
                return Err(Error::Invalid(format!(
                    "grid of parameter {j} on [{a}, {b}] leaves the mapping interval [{lo}, {hi}]"
                )));
            }
        }
        let quad: Vec<Vec<ParamQuadPoint>> = grids.iter().map(ParametricGrid::quadrature).collect();
        let term_values = (0..grids.len())
            .map(|j| {
                op.terms
                    .iter()
                    .map(|t| quad[j].iter().map(|q| t.factor.parts[j].eval(q.mu)).collect())
                    .collect()
            })
            .collect();
        let rhs_values = (0..grids.len())
            .map(|j| {
                op.rhs_terms
                    .iter()
                    .map(|t| quad[j].iter().map(|q| t.factor.parts[j].eval(q.mu)).collect())
                    .collect()
            })
            .collect();
        Ok(ParametricSpace {
            grids,
            quad,
            term_values,
            rhs_values,
        })
    }

    pub fn n_pa(&self) -> usize {
        self.grids.len()
    }

    /// Values of a nodal vector of parameter `j` at its quadrature points.
    pub fn at_quad(&self, j: usize, nodal: &[f64]) -> Vec<f64> {
        self.grids[j].values_at_quadrature(&self.quad[j], nodal)
    }

    /// `∫ c(μ_j) a(μ_j) b(μ_j) dμ_j` for values at the quadrature points.
    fn integral(&self, j: usize, c: &[f64], a: &[f64], b: &[f64]) -> f64 {
        self.quad[j]
            .iter()
            .enumerate()
            .map(|(q, p)| p.weight * c[q] * a[q] * b[q])
            .sum()
    }

    /// Per parameter, per operator term: `∫ c_{t,j} ψ_j ψ'_j`.
    fn term_integrals(&self, psi_q: &[Vec<f64>], other_q: &[Vec<f64>]) -> Vec<Vec<f64>> {
        (0..self.n_pa())
            .map(|j| {
                self.term_values[j]
                    .iter()
                    .map(|c| self.integral(j, c, &psi_q[j], &other_q[j]))
                    .collect()
            })
            .collect()
    }

    /// Per parameter, per right-hand-side term: `∫ f_{r,j} ψ_j`.
    fn rhs_integrals(&self, psi_q: &[Vec<f64>]) -> Vec<Vec<f64>> {
        (0..self.n_pa())
            .map(|j| {
                let one = vec![1.0; self.quad[j].len()];
                self.rhs_values[j]
                    .iter()
                    .map(|f| self.integral(j, f, &psi_q[j], &one))
                    .collect()
            })
            .collect()
    }

    fn all_at_quad(&self, psi: &[Vec<f64>]) -> Vec<Vec<f64>> {
        psi.iter().enumerate().map(|(j, p)| self.at_quad(j, p)).collect()
    }
}

/// Product over all parameters except `skip` of `per[j][t]`.
fn product_except(per: &[Vec<f64>], t: usize, skip: Option<usize>) -> f64 {
    per.iter()
        .enumerate()
        .filter(|(j, _)| Some(*j) != skip)
        .map(|(_, v)| v[t])
        .product()
}

/// `β_t = Π_j ∫ c_{t,j} ψ_j²`.
pub fn spatial_constants(space: &ParametricSpace, psi: &[Vec<f64>]) -> Vec<f64> {
    let pq = space.all_at_quad(psi);
    let per = space.term_integrals(&pq, &pq);
    (0..per[0].len()).map(|t| product_except(&per, t, None)).collect()
}

/// `b_t = Π_j ∫ c_{t,j} ψ_j ψ'_j`.
pub fn coupling_constants(space: &ParametricSpace, psi: &[Vec<f64>], other: &[Vec<f64>]) -> Vec<f64> {
    let per = space.term_integrals(&space.all_at_quad(psi), &space.all_at_quad(other));
    (0..per[0].len()).map(|t| product_except(&per, t, None)).collect()
}

/// `a_r = Π_j ∫ f_{r,j} ψ_j`.
pub fn rhs_constants(space: &ParametricSpace, psi: &[Vec<f64>]) -> Vec<f64> {
    let per = space.rhs_integrals(&space.all_at_quad(psi));
    (0..per[0].len()).map(|r| product_except(&per, r, None)).collect()
}

/// Right-hand side of the spatial problem for the parametric factors `psi`:
/// `Σ_r a_r F_r − Σ_t K_t (Σ_i b_{t,i} x^i)`.
pub fn spatial_rhs(op: &AffineOperator, space: &ParametricSpace, psi: &[Vec<f64>], previous: &[(Vec<f64>, Vec<Vec<f64>>)]) -> Vec<f64> {
    let mut rhs = vec![0.0; op.n_rows()];
    for (r, a) in rhs_constants(space, psi).into_iter().enumerate() {
        if a != 0.0 {
            for (o, x) in rhs.iter_mut().zip(op.rhs_vector(r)) {
                *o += a * x;
            }
        }
    }
    if !previous.is_empty() {
        let nt = op.n_terms();
        let mut ys = vec![vec![0.0; op.n_state()]; nt];
        for (x, psi_i) in previous {
            for (t, b) in coupling_constants(space, psi, psi_i).into_iter().enumerate() {
                if b != 0.0 {
                    for (y, v) in ys[t].iter_mut().zip(x) {
                        *y += b * v;
                    }
                }
            }
        }
        let xs: Vec<Option<&[f64]>> = ys.iter().map(|y| Some(y.as_slice())).collect();
        for (o, k) in rhs.iter_mut().zip(op.apply_terms(&xs)) {
            *o -= k;
        }
    }
    rhs
}

/// Spatial step: the stacked spatial state `x` of the current mode for
/// fixed parametric factors (one HDG-structured solve).
pub fn spatial_step(
    op: &AffineOperator,
    space: &ParametricSpace,
    psi: &[Vec<f64>],
    previous: &[(Vec<f64>, Vec<Vec<f64>>)],
) -> Result<Vec<f64>> {
    let beta = spatial_constants(space, psi);
    let rhs = spatial_rhs(op, space, psi, previous);
    op.solve(&beta, &rhs)
}

/// Galerkin test vector of a spatial mode: every equation is weighted by
/// the matching component of the mode (`L` rows by `F_L`, `u` rows by
/// `f_u`, `p` rows by `f_p`, trace rows by `f_û`), mean-pressure and
/// closure rows by 1 and the global pressure constraint by 0.
pub fn galerkin_test(op: &AffineOperator, x: &[f64]) -> Vec<f64> {
    let dofs = &op.disc.dofs;
    let ly = dofs.layout;
    let n = ly.n;
    let mut w = vec![0.0; op.n_rows()];
    for e in 0..dofs.n_el {
        let base = e * ly.n_local_rows();
        for i in 0..2 {
            for j in 0..2 {
                for r in 0..n {
                    w[base + ly.l(i, j, r)] = x[dofs.l_index(e, i, j, r)];
                }
            }
            for r in 0..n {
                w[base + ly.u(i, r)] = x[dofs.u_index(e, i, r)];
            }
        }
        for r in 0..n {
            w[base + ly.p(r)] = x[dofs.p_index(e, r)];
        }
        w[base + ly.mean_row()] = 1.0;
    }
    let to = dofs.trace_row_offset();
    w[to..to + dofs.n_hat].copy_from_slice(&x[..dofs.n_hat]);
    let co = dofs.closure_row_offset();
    w[co..co + dofs.n_el].iter_mut().for_each(|v| *v = 1.0);
    w
}

/// Test vector of the parametric problems.
pub fn parametric_test(op: &AffineOperator, space: &ParametricSpace, x: &[f64], test: ParametricTest) -> Vec<f64> {
    match test {
        ParametricTest::Galerkin => galerkin_test(op, x),
        ParametricTest::Residual => {
            let uniform: Vec<Vec<f64>> = space.grids.iter().map(|g| vec![1.0; g.n_nodes()]).collect();
            let c = spatial_constants(space, &uniform);
            op.apply_combined(&c, x)
        }
    }
}

/// The 1D system `M ψ_j = g` for parameter `j` with the spatial mode `x`,
/// the other factors of `psi` frozen and test vector `w`.
pub fn parametric_system(
    op: &AffineOperator,
    space: &ParametricSpace,
    j: usize,
    x: &[f64],
    w: &[f64],
    psi: &[Vec<f64>],
    previous: &[(Vec<f64>, Vec<Vec<f64>>)],
) -> (DMatrix<f64>, Vec<f64>) {
    let grid = &space.grids[j];
    let quad = &space.quad[j];
    let nq = quad.len();
    let pq = space.all_at_quad(psi);
    let skip = Some(j);

    // Left-hand side weight W(μ_j) = Σ_t γ_t Π_{l≠j} ∫c_{t,l}ψ_l² · c_{t,j}(μ_j).
    let gamma = op.forms(w, x);
    let sq = space.term_integrals(&pq, &pq);
    let mut weight = vec![0.0; nq];
    for (t, &g) in gamma.iter().enumerate() {
        let s = g * product_except(&sq, t, skip);
        if s != 0.0 {
            for (o, c) in weight.iter_mut().zip(&space.term_values[j][t]) {
                *o += s * c;
            }
        }
    }
    let m = grid.weighted_mass(quad, &weight);

    // Right-hand side samples.
    let mut load = vec![0.0; nq];
    let rint = space.rhs_integrals(&pq);
    for r in 0..op.rhs_terms.len() {
        let wf: f64 = w.iter().zip(op.rhs_vector(r)).map(|(a, b)| a * b).sum();
        let s = wf * product_except(&rint, r, skip);
        if s != 0.0 {
            for (o, f) in load.iter_mut().zip(&space.rhs_values[j][r]) {
                *o += s * f;
            }
        }
    }
    for (xi, psi_i) in previous {
        let fi = op.forms(w, xi);
        let iq = space.all_at_quad(psi_i);
        let cross = space.term_integrals(&pq, &iq);
        for (t, &g) in fi.iter().enumerate() {
            let s = g * product_except(&cross, t, skip);
            if s != 0.0 {
                for q in 0..nq {
                    load[q] -= s * space.term_values[j][t][q] * iq[j][q];
                }
            }
        }
    }
    (m, grid.load(quad, &load))
}

/// Parametric step for parameter `j`: solves the 1D system for `ψ_j`.
pub fn parametric_step(
    op: &AffineOperator,
    space: &ParametricSpace,
    j: usize,
    x: &[f64],
    w: &[f64],
    psi: &[Vec<f64>],
    previous: &[(Vec<f64>, Vec<Vec<f64>>)],
) -> Result<Vec<f64>> {
    let (m, g) = parametric_system(op, space, j, x, w, psi, previous);
    let sol = m
        .lu()
        .solve(&DVector::from_vec(g))
        .ok_or_else(|| Error::Singular(format!("parametric problem of parameter {j}")))?;
    if sol.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular(format!("parametric problem of parameter {j}")));
    }
    Ok(sol.as_slice().to_vec())
}

/// One alternating-direction iteration record.
#[derive(Clone, Debug)]
pub struct IterationRecord {
    /// Mode number (from 1).
    pub mode: usize,
    /// Iteration within the mode (0 = prediction).
    pub iteration: usize,
    /// `σ_û` of the current iterate.
    pub sigma_hat: f64,
    /// Relative change of the spatial state.
    pub spatial_correction: f64,
    /// Largest change of a (unit) parametric factor.
    pub parametric_correction: f64,
}

/// Result of an a priori run.
#[derive(Clone, Debug)]
pub struct AprioriRun {
    pub solution: SeparatedSolution,
    pub log: Vec<IterationRecord>,
    /// Whether enrichment stopped on a vanishing mode.
    pub zero_mode: bool,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn sigma_hat(op: &AffineOperator, x: &[f64]) -> f64 {
    norm(&x[..op.disc.dofs.n_hat])
}

/// Runs the a priori PGD on the grids `grids` (one per parameter).
pub fn run_apriori(op: &AffineOperator, grids: Vec<ParametricGrid>, cfg: &AprioriConfig) -> Result<SeparatedSolution> {
    run_apriori_logged(op, grids, cfg).map(|r| r.solution)
}

/// [`run_apriori`] returning the iteration log as well.
pub fn run_apriori_logged(op: &AffineOperator, grids: Vec<ParametricGrid>, cfg: &AprioriConfig) -> Result<AprioriRun> {
    cfg.validate()?;
    let space = ParametricSpace::new(op, grids)?;
    let blocks = {
        let r = op.disc.dofs.variable_ranges();
        [r[0].len(), r[1].len(), r[2].len(), r[3].len(), r[4].len()]
    };
    let mut sol = SeparatedSolution::new(space.grids.clone(), blocks, Provenance::Apriori);
    let mut previous: Vec<(Vec<f64>, Vec<Vec<f64>>)> = Vec::new();
    let mut log = Vec::new();
    let start = op.solve_count();
    let mut zero_mode = false;
    while sol.n_modes() < cfg.max_modes {
        let m = sol.n_modes() + 1;
        let mut psi: Vec<Vec<f64>> = match (cfg.init, sol.modes.last()) {
            (ParametricInit::Previous, Some(last)) => last.psi.clone(),
            _ => space
                .grids
                .iter()
                .map(|g| vec![1.0 / (g.n_nodes() as f64).sqrt(); g.n_nodes()])
                .collect(),
        };
        let mut x = spatial_step(op, &space, &psi, &previous)?;
        let rec = IterationRecord {
            mode: m,
            iteration: 0,
            sigma_hat: sigma_hat(op, &x),
            spatial_correction: 1.0,
            parametric_correction: 1.0,
        };
        emit(&rec);
        log.push(rec);
        for q in 1..=cfg.n_i {
            if norm(&x) == 0.0 {
                break;
            }
            let mut dpsi: f64 = 0.0;
            for j in 0..space.n_pa() {
                let w = parametric_test(op, &space, &x, cfg.test);
                let p = parametric_step(op, &space, j, &x, &w, &psi, &previous)?;
                let n = norm(&p);
                if n == 0.0 {
                    return Err(Error::ZeroMode);
                }
                let unit: Vec<f64> = p.iter().map(|v| v / n).collect();
                let d = unit.iter().zip(&psi[j]).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                let d = d.min(unit.iter().zip(&psi[j]).map(|(a, b)| (a + b).powi(2)).sum::<f64>().sqrt());
                dpsi = dpsi.max(d);
                psi[j] = unit;
                x.iter_mut().for_each(|v| *v *= n);
            }
            let x_new = spatial_step(op, &space, &psi, &previous)?;
            let dx = x_new.iter().zip(&x).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt() / norm(&x_new).max(f64::MIN_POSITIVE);
            x = x_new;
            let rec = IterationRecord {
                mode: m,
                iteration: q,
                sigma_hat: sigma_hat(op, &x),
                spatial_correction: dx,
                parametric_correction: dpsi,
            };
            emit(&rec);
            log.push(rec);
            if cfg.correction_tol.is_some_and(|tol| dx <= tol) {
                break;
            }
        }
        let mode = match normalize_mode(&x, &blocks, psi) {
            Ok(mode) => mode,
            Err(Error::ZeroMode) => {
                zero_mode = true;
                log::warn!("method=apriori m={m} event=zero_mode");
                break;
            }
            Err(e) => return Err(e),
        };
        previous.push((mode.spatial_state(), mode.psi.clone()));
        sol.push(mode);
        sol.solves = op.solve_count() - start;
        if stop_ratio(&sol) <= cfg.eta_star {
            break;
        }
    }
    sol.solves = op.solve_count() - start;
    Ok(AprioriRun {
        solution: sol,
        log,
        zero_mode,
    })
}

impl AprioriRun {
    /// Full-order solves consumed by the first `m` modes, per `m` (one
    /// spatial solve per logged iteration).
    pub fn cumulative_solves(&self) -> Vec<usize> {
        (1..=self.solution.n_modes())
            .map(|m| self.log.iter().filter(|r| r.mode <= m).count())
            .collect()
    }
}

fn emit(r: &IterationRecord) {
    log::info!(
        "method=apriori m={} q={} sigma_hat={:e} spatial_correction={:e} parametric_correction={:e}",
        r.mode,
        r.iteration,
        r.sigma_hat,
        r.spatial_correction,
        r.parametric_correction
    );
}

/// Stopping ratio of a run's last mode (`σ_û^m / σ_û^1`).
pub fn amplitude_ratios(sol: &SeparatedSolution) -> Vec<f64> {
    let h0 = sol.history.first().copied().unwrap_or(0.0);
    sol.modes
        .iter()
        .map(|m| if h0 > 0.0 { m.amplitude(Variable::Hat) / h0 } else { 0.0 })
        .collect()
}
