//! Affine HDG operator `K(μ) = Σ_t c_t(μ) K_t` and right-hand side
//! `F(μ) = Σ_r f_r(μ) F_r`, assembled once from the separated Jacobian.
//!
//! Every term is stored element by element as a sparse block in the
//! element layout of [`ElementLayout`]. Terms are: one constant term
//! (stabilisation, mean-pressure and constraint rows), one term per
//! separated determinant component and one per separated adjugate
//! component. The operator acts on the stacked state `[û, ρ, u, p, L]`
//! and produces vectors in the equation (row) space of [`DofMap`].

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use nalgebra::{DMatrix, DVector};

use super::discretisation::{Discretisation, ElementLayout};
use super::{DataTerm, StokesProblem};
use crate::mapping::{Mat2, ParamFactor, SeparatedJacobian};
use crate::mesh::FaceTag;
use crate::par::{map_collect, try_map_collect, Parallelism};
use crate::{Error, Result};

/// Kind of an operator term.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TermKind {
    /// Parameter-independent part.
    Const,
    /// Separated determinant component `D^k`.
    Det(usize),
    /// Separated adjugate component `A^k`.
    Adj(usize),
}

/// One operator term with its separable coefficient.
#[derive(Clone, Debug)]
pub struct OpTerm {
    pub kind: TermKind,
    pub factor: ParamFactor,
}

/// Kind of problem data entering a right-hand-side term.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DataKind {
    Dirichlet,
    Neumann,
    BodyForce,
}

/// One right-hand-side term: geometric term × data term.
#[derive(Clone, Debug)]
pub struct RhsTerm {
    /// Index of the geometric operator term.
    pub term: usize,
    pub data: DataKind,
    /// Index into the problem's list for `data`.
    pub index: usize,
    /// Product of the geometric and data factors.
    pub factor: ParamFactor,
}

/// Sparse element block in coordinate form.
#[derive(Clone, Debug, Default)]
struct Block {
    idx: Vec<(u32, u32)>,
    val: Vec<f64>,
}

impl Block {
    fn from_dense(d: &[f64], cols: usize) -> Option<Block> {
        let mut b = Block::default();
        for (i, &v) in d.iter().enumerate() {
            if v != 0.0 {
                b.idx.push(((i / cols) as u32, (i % cols) as u32));
                b.val.push(v);
            }
        }
        (!b.val.is_empty()).then_some(b)
    }
}

/// Assembled affine operator.
pub struct AffineOperator {
    pub disc: Arc<Discretisation>,
    pub terms: Vec<OpTerm>,
    pub rhs_terms: Vec<RhsTerm>,
    pub intervals: Vec<(f64, f64)>,
    pub par: Parallelism,
    nu: f64,
    /// Per element: `(term, block)` for the nonzero terms.
    blocks: Vec<Vec<(usize, Block)>>,
    /// Row-space vector of each right-hand-side term.
    rhs: Vec<Vec<f64>>,
    solves: AtomicUsize,
}

impl std::fmt::Debug for AffineOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "AffineOperator({} terms, {} rhs terms, {} elements)",
            self.terms.len(),
            self.rhs_terms.len(),
            self.blocks.len()
        )
    }
}

/// Dense row-major scratch matrix.
struct Dense {
    cols: usize,
    v: Vec<f64>,
}

impl Dense {
    fn new(rows: usize, cols: usize) -> Self {
        Dense {
            cols,
            v: vec![0.0; rows * cols],
        }
    }
    #[inline]
    fn add(&mut self, r: usize, c: usize, x: f64) {
        self.v[r * self.cols + c] += x;
    }
}

/// Hybrid columns and trace rows exist on faces that are not Dirichlet.
fn has_trace(tag: FaceTag) -> bool {
    tag != FaceTag::Dirichlet
}

impl AffineOperator {
    /// Assembles all term blocks and right-hand-side vectors.
    pub fn assemble(
        disc: Arc<Discretisation>,
        problem: &StokesProblem,
        jac: &SeparatedJacobian,
        par: Parallelism,
    ) -> Result<Self> {
        let n_pa = jac.mapping.n_pa();
        problem.validate(n_pa)?;
        let mut terms = vec![OpTerm {
            kind: TermKind::Const,
            factor: ParamFactor::one(n_pa),
        }];
        for (k, f) in jac.det_factors.iter().enumerate() {
            terms.push(OpTerm {
                kind: TermKind::Det(k),
                factor: f.clone(),
            });
        }
        for (k, f) in jac.adj_factors.iter().enumerate() {
            terms.push(OpTerm {
                kind: TermKind::Adj(k),
                factor: f.clone(),
            });
        }
        let n_det = jac.n_det();
        let det_term = |k: usize| 1 + k;
        let adj_term = |k: usize| 1 + n_det + k;

        let mut rhs_terms = Vec::new();
        let push = |rt: &mut Vec<RhsTerm>, term: usize, data: DataKind, index: usize, d: &DataTerm| {
            rt.push(RhsTerm {
                term,
                data,
                index,
                factor: terms[term].factor.product(&d.factor),
            })
        };
        for (l, d) in problem.dirichlet.iter().enumerate() {
            push(&mut rhs_terms, 0, DataKind::Dirichlet, l, d);
            for k in 0..jac.n_adj() {
                push(&mut rhs_terms, adj_term(k), DataKind::Dirichlet, l, d);
            }
        }
        for (l, d) in problem.neumann.iter().enumerate() {
            push(&mut rhs_terms, 0, DataKind::Neumann, l, d);
        }
        for (l, d) in problem.body_force.iter().enumerate() {
            for k in 0..n_det {
                push(&mut rhs_terms, det_term(k), DataKind::BodyForce, l, d);
            }
        }

        let n_el = disc.mesh.n_elements();
        let tau = problem.tau();
        let nu = problem.nu;
        let per_element = try_map_collect(par, n_el, |e| {
            assemble_element(&disc, problem, jac, &terms, &rhs_terms, e, tau, nu)
        })?;
        let dofs = &disc.dofs;
        let mut rhs = vec![vec![0.0; dofs.n_rows()]; rhs_terms.len()];
        let mut blocks = Vec::with_capacity(n_el);
        for (e, (b, r)) in per_element.into_iter().enumerate() {
            for (t, v) in r {
                dofs.scatter_rows(e, &v, &mut rhs[t]);
            }
            blocks.push(b);
        }
        Ok(AffineOperator {
            disc,
            terms,
            rhs_terms,
            intervals: jac.mapping.intervals.clone(),
            par,
            nu,
            blocks,
            rhs,
            solves: AtomicUsize::new(0),
        })
    }

    pub fn n_pa(&self) -> usize {
        self.intervals.len()
    }

    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn layout(&self) -> ElementLayout {
        self.disc.layout()
    }

    pub fn n_state(&self) -> usize {
        self.disc.dofs.n_state()
    }

    pub fn n_rows(&self) -> usize {
        self.disc.dofs.n_rows()
    }

    /// Number of condensed solves performed so far.
    pub fn solve_count(&self) -> usize {
        self.solves.load(Ordering::Relaxed)
    }

    /// Operator coefficients `c_t(μ)`.
    pub fn coefficients(&self, mu: &[f64]) -> Vec<f64> {
        self.terms.iter().map(|t| t.factor.eval(mu)).collect()
    }

    /// Right-hand-side term vector `F_r` (row space).
    pub fn rhs_vector(&self, r: usize) -> &[f64] {
        &self.rhs[r]
    }

    /// `F(μ) = Σ_r f_r(μ) F_r`.
    pub fn rhs_at(&self, mu: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_rows()];
        for (t, v) in self.rhs_terms.iter().zip(&self.rhs) {
            let c = t.factor.eval(mu);
            if c != 0.0 {
                for (o, x) in out.iter_mut().zip(v) {
                    *o += c * x;
                }
            }
        }
        out
    }

    /// `Σ_t K_t x_t` for per-term state vectors (`None` skips a term).
    pub fn apply_terms(&self, xs: &[Option<&[f64]>]) -> Vec<f64> {
        assert_eq!(xs.len(), self.terms.len());
        let dofs = &self.disc.dofs;
        let ly = dofs.layout;
        let per = map_collect(self.par, self.blocks.len(), |e| {
            let mut y = vec![0.0; ly.n_rows()];
            let mut xe = vec![0.0; ly.n_cols()];
            for (t, b) in &self.blocks[e] {
                if let Some(x) = xs[*t] {
                    dofs.gather(e, x, &mut xe);
                    for (&(r, c), &v) in b.idx.iter().zip(&b.val) {
                        y[r as usize] += v * xe[c as usize];
                    }
                }
            }
            y
        });
        let mut out = vec![0.0; self.n_rows()];
        for (e, y) in per.iter().enumerate() {
            dofs.scatter_rows(e, y, &mut out);
        }
        if let (Some(row), Some(x)) = (dofs.constraint_row(), xs[0]) {
            out[row] += self.constraint_dot(x);
        }
        out
    }

    /// `K_t x` for a single term.
    pub fn apply(&self, term: usize, x: &[f64]) -> Vec<f64> {
        let mut xs = vec![None; self.terms.len()];
        xs[term] = Some(x);
        self.apply_terms(&xs)
    }

    /// `Σ_t c_t K_t x`.
    pub fn apply_combined(&self, coeffs: &[f64], x: &[f64]) -> Vec<f64> {
        let dofs = &self.disc.dofs;
        let ly = dofs.layout;
        let per = map_collect(self.par, self.blocks.len(), |e| {
            let mut y = vec![0.0; ly.n_rows()];
            let mut xe = vec![0.0; ly.n_cols()];
            dofs.gather(e, x, &mut xe);
            for (t, b) in &self.blocks[e] {
                let c = coeffs[*t];
                if c != 0.0 {
                    for (&(r, col), &v) in b.idx.iter().zip(&b.val) {
                        y[r as usize] += c * v * xe[col as usize];
                    }
                }
            }
            y
        });
        let mut out = vec![0.0; self.n_rows()];
        for (e, y) in per.iter().enumerate() {
            dofs.scatter_rows(e, y, &mut out);
        }
        if let Some(row) = dofs.constraint_row() {
            out[row] += coeffs[0] * self.constraint_dot(x);
        }
        out
    }

    /// `K_tᵀ w` for a single term (row-space `w` to state space).
    pub fn apply_transpose(&self, term: usize, w: &[f64]) -> Vec<f64> {
        let dofs = &self.disc.dofs;
        let ly = dofs.layout;
        let per = map_collect(self.par, self.blocks.len(), |e| {
            let mut we = vec![0.0; ly.n_rows()];
            let mut z = vec![0.0; ly.n_cols()];
            let mut any = false;
            for (t, b) in &self.blocks[e] {
                if *t == term {
                    if !any {
                        dofs.gather_rows(e, w, &mut we);
                        any = true;
                    }
                    for (&(r, c), &v) in b.idx.iter().zip(&b.val) {
                        z[c as usize] += v * we[r as usize];
                    }
                }
            }
            z
        });
        let mut out = vec![0.0; self.n_state()];
        for (e, z) in per.iter().enumerate() {
            dofs.scatter_cols(e, z, &mut out);
        }
        if term == 0 {
            if let Some(row) = dofs.constraint_row() {
                let ro = dofs.rho_offset();
                for (e, g) in self.disc.elements.iter().enumerate() {
                    out[ro + e] += g.area * w[row];
                }
            }
        }
        out
    }

    /// Bilinear values `wᵀ K_t x` for every term.
    pub fn forms(&self, w: &[f64], x: &[f64]) -> Vec<f64> {
        let dofs = &self.disc.dofs;
        let ly = dofs.layout;
        let nt = self.terms.len();
        let per = map_collect(self.par, self.blocks.len(), |e| {
            let mut acc = vec![0.0; nt];
            if self.blocks[e].is_empty() {
                return acc;
            }
            let mut we = vec![0.0; ly.n_rows()];
            let mut xe = vec![0.0; ly.n_cols()];
            dofs.gather_rows(e, w, &mut we);
            dofs.gather(e, x, &mut xe);
            for (t, b) in &self.blocks[e] {
                let mut s = 0.0;
                for (&(r, c), &v) in b.idx.iter().zip(&b.val) {
                    s += we[r as usize] * v * xe[c as usize];
                }
                acc[*t] += s;
            }
            acc
        });
        let mut out = vec![0.0; nt];
        for a in per {
            for (o, v) in out.iter_mut().zip(a) {
                *o += v;
            }
        }
        if let Some(row) = dofs.constraint_row() {
            out[0] += w[row] * self.constraint_dot(x);
        }
        out
    }

    fn constraint_dot(&self, x: &[f64]) -> f64 {
        let ro = self.disc.dofs.rho_offset();
        self.disc.elements.iter().enumerate().map(|(e, g)| g.area * x[ro + e]).sum()
    }

    /// Dense element matrix `Σ_t c_t K_t` of element `e` (element layout).
    pub fn element_matrix(&self, e: usize, coeffs: &[f64]) -> DMatrix<f64> {
        let ly = self.layout();
        let mut m = DMatrix::zeros(ly.n_rows(), ly.n_cols());
        for (t, b) in &self.blocks[e] {
            let c = coeffs[*t];
            if c != 0.0 {
                for (&(r, col), &v) in b.idx.iter().zip(&b.val) {
                    m[(r as usize, col as usize)] += c * v;
                }
            }
        }
        m
    }

    /// Solves `(Σ_t c_t K_t) x = rhs` by static condensation onto the
    /// hybrid velocity and mean pressures, a sparse direct solve and local
    /// back-substitution. The last pressure row of each element is replaced
    /// by its mean-pressure row (the pressure rows sum to the element's
    /// closure equation, which is kept in the global system).
    pub fn solve(&self, coeffs: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
        assert_eq!(coeffs.len(), self.terms.len());
        assert_eq!(rhs.len(), self.n_rows());
        self.solves.fetch_add(1, Ordering::Relaxed);
        let dofs = &self.disc.dofs;
        let ly = dofs.layout;
        let ni = ly.n_interior();
        let ng = 6 * ly.nf + 1;
        let loc_rows: Vec<usize> = (0..ni - 1).chain(std::iter::once(ly.mean_row())).collect();
        let glob_rows: Vec<usize> = (ly.n_local_rows()..ly.n_rows()).collect();
        let n_el = dofs.n_el;

        struct Condensed {
            s: DMatrix<f64>,
            g: DVector<f64>,
            z: DMatrix<f64>,
            z0: DVector<f64>,
        }
        let condensed = try_map_collect(self.par, n_el, |e| -> Result<Condensed> {
            let m = self.element_matrix(e, coeffs);
            let a = DMatrix::from_fn(ni, ni, |i, j| m[(loc_rows[i], j)]);
            let b = DMatrix::from_fn(ni, ng, |i, j| m[(loc_rows[i], ni + j)]);
            let c = DMatrix::from_fn(ng, ni, |i, j| m[(glob_rows[i], j)]);
            let d = DMatrix::from_fn(ng, ng, |i, j| m[(glob_rows[i], ni + j)]);
            let r = DVector::from_fn(ni, |i, _| {
                dofs.global_row(e, loc_rows[i]).map_or(0.0, |g| rhs[g])
            });
            let lu = a.lu();
            let z = lu
                .solve(&b)
                .ok_or_else(|| Error::Singular(format!("local problem of element {e}")))?;
            let z0 = lu
                .solve(&r)
                .ok_or_else(|| Error::Singular(format!("local problem of element {e}")))?;
            let s = d - &c * &z;
            let g = -(&c * &z0);
            Ok(Condensed { s, g, z, z0 })
        })?;

        let n_hat = dofs.n_hat;
        let n_glob = n_hat + n_el + usize::from(dofs.constraint);
        // Element-local global index -> global unknown/equation.
        let map = |e: usize, a: usize| -> Option<usize> {
            if a < 6 * ly.nf {
                let f = a / (2 * ly.nf);
                let i = (a % (2 * ly.nf)) / ly.nf;
                let q = a % ly.nf;
                dofs.hat_dof(e, f, i, q)
            } else {
                Some(n_hat + e)
            }
        };
        let mut trip = Vec::new();
        let mut b = vec![0.0; n_glob];
        b[..n_hat].copy_from_slice(&rhs[dofs.trace_row_offset()..dofs.trace_row_offset() + n_hat]);
        b[n_hat..n_hat + n_el].copy_from_slice(&rhs[dofs.closure_row_offset()..dofs.closure_row_offset() + n_el]);
        for (e, c) in condensed.iter().enumerate() {
            for i in 0..ng {
                let Some(gi) = map(e, i) else { continue };
                b[gi] += c.g[i];
                for j in 0..ng {
                    let v = c.s[(i, j)];
                    if v != 0.0 {
                        if let Some(gj) = map(e, j) {
                            trip.push(Triplet::new(gi, gj, v));
                        }
                    }
                }
            }
        }
        if let Some(row) = dofs.constraint_row() {
            let cr = n_hat + n_el;
            for (e, g) in self.disc.elements.iter().enumerate() {
                let v = coeffs[0] * g.area;
                trip.push(Triplet::new(cr, n_hat + e, v));
                trip.push(Triplet::new(n_hat + e, cr, v));
            }
            b[cr] = rhs[row];
        }
        let mat = SparseColMat::<usize, f64>::try_new_from_triplets(n_glob, n_glob, &trip)
            .map_err(|e| Error::Singular(format!("global matrix construction failed: {e:?}")))?;
        let lu = mat
            .sp_lu()
            .map_err(|e| Error::Singular(format!("global factorisation failed: {e:?}")))?;
        let mut rhs_mat = faer::Mat::<f64>::zeros(n_glob, 1);
        for (i, v) in b.iter().enumerate() {
            rhs_mat[(i, 0)] = *v;
        }
        let sol = lu.solve(&rhs_mat);
        let xg: Vec<f64> = (0..n_glob).map(|i| sol[(i, 0)]).collect();
        if xg.iter().any(|v| !v.is_finite()) {
            return Err(Error::Singular("global system produced non-finite values".into()));
        }

        let mut state = vec![0.0; dofs.n_state()];
        state[..n_hat].copy_from_slice(&xg[..n_hat]);
        state[dofs.rho_offset()..dofs.rho_offset() + n_el].copy_from_slice(&xg[n_hat..n_hat + n_el]);
        let locals = map_collect(self.par, n_el, |e| {
            let c = &condensed[e];
            let xe = DVector::from_fn(ng, |i, _| map(e, i).map_or(0.0, |g| xg[g]));
            &c.z0 - &c.z * xe
        });
        let n = ly.n;
        for (e, x) in locals.iter().enumerate() {
            for i in 0..2 {
                for j in 0..2 {
                    for r in 0..n {
                        state[dofs.l_index(e, i, j, r)] = x[ly.l(i, j, r)];
                    }
                }
                for r in 0..n {
                    state[dofs.u_index(e, i, r)] = x[ly.u(i, r)];
                }
            }
            for r in 0..n {
                state[dofs.p_index(e, r)] = x[ly.p(r)];
            }
        }
        Ok(state)
    }

    /// Full-order solve at `mu`.
    pub fn solve_at(&self, mu: &[f64]) -> Result<Vec<f64>> {
        if mu.len() != self.n_pa() {
            return Err(Error::Invalid(format!("expected {} parameters, got {}", self.n_pa(), mu.len())));
        }
        for (j, (&m, &(lo, hi))) in mu.iter().zip(&self.intervals).enumerate() {
            let tol = 1e-12 * (hi - lo).abs().max(1.0);
            if !(m >= lo - tol && m <= hi + tol) {
                return Err(Error::OutOfRange { index: j, value: m, lo, hi });
            }
        }
        self.solve(&self.coefficients(mu), &self.rhs_at(mu))
    }

    /// Residual `F(μ) − K(μ) x` in the row space.
    pub fn residual_at(&self, mu: &[f64], x: &[f64]) -> Vec<f64> {
        let kx = self.apply_combined(&self.coefficients(mu), x);
        let mut r = self.rhs_at(mu);
        for (a, b) in r.iter_mut().zip(kx) {
            *a -= b;
        }
        r
    }
}

/// Per-term element blocks and per-term element loads.
type ElementBlocks = (Vec<(usize, Block)>, Vec<(usize, Vec<f64>)>);

/// Assembles the term blocks and right-hand-side element vectors of one
/// element.
#[allow(clippy::too_many_arguments)]
fn assemble_element(
    disc: &Discretisation,
    problem: &StokesProblem,
    jac: &SeparatedJacobian,
    terms: &[OpTerm],
    rhs_terms: &[RhsTerm],
    e: usize,
    tau: f64,
    nu: f64,
) -> Result<ElementBlocks> {
    let ly = disc.layout();
    let (n, nf) = (ly.n, ly.nf);
    let (rows, cols) = (ly.n_rows(), ly.n_cols());
    let geo = &disc.elements[e];
    let tab = &disc.tables;
    let regions = jac.mapping.regions(geo.centroid);
    let n_det = jac.n_det();
    let nt = terms.len();
    let mut dense: Vec<Option<Dense>> = (0..nt).map(|_| None).collect();
    fn slot(dense: &mut [Option<Dense>], t: usize, rows: usize, cols: usize) -> &mut Dense {
        dense[t].get_or_insert_with(|| Dense::new(rows, cols))
    }

    // ---- constant term ----
    {
        let m = slot(&mut dense, 0, rows, cols);
        for (f, fg) in geo.faces.iter().enumerate() {
            let trace = has_trace(fg.tag);
            let slip = fg.tag == FaceTag::Slip;
            for q in 0..fg.w.len() {
                let w = fg.w[q];
                let nv = &tab.face_values[f][q];
                let hv = &tab.hat_values[q];
                let nrm = fg.normal[q];
                let t = [-nrm[1], nrm[0]];
                for i in 0..2 {
                    for r in 0..n {
                        for s in 0..n {
                            m.add(ly.u(i, r), ly.u(i, s), tau * w * nv[r] * nv[s]);
                        }
                        if trace {
                            for a in 0..nf {
                                m.add(ly.u(i, r), ly.hat(f, i, a), -tau * w * nv[r] * hv[a]);
                            }
                        }
                    }
                }
                if trace && !slip {
                    for i in 0..2 {
                        for a in 0..nf {
                            for s in 0..n {
                                m.add(ly.trace_row(f, i, a), ly.u(i, s), tau * w * hv[a] * nv[s]);
                            }
                            for b in 0..nf {
                                m.add(ly.trace_row(f, i, a), ly.hat(f, i, b), -tau * w * hv[a] * hv[b]);
                            }
                        }
                    }
                }
                if slip {
                    for a in 0..nf {
                        for i in 0..2 {
                            for s in 0..n {
                                m.add(ly.trace_row(f, 1, a), ly.u(i, s), -tau * w * hv[a] * nv[s] * t[i]);
                            }
                            for b in 0..nf {
                                m.add(ly.trace_row(f, 1, a), ly.hat(f, i, b), tau * w * hv[a] * hv[b] * t[i]);
                            }
                        }
                    }
                }
            }
        }
        for (q, &w) in geo.w.iter().enumerate() {
            let nv = &tab.vol_values[q];
            for s in 0..n {
                m.add(ly.mean_row(), ly.p(s), w * nv[s] / geo.area);
            }
        }
        m.add(ly.mean_row(), ly.rho_col(), -1.0);
    }

    // ---- volume terms ----
    for (q, &x) in geo.x.iter().enumerate() {
        let w = geo.w[q];
        let nv = &tab.vol_values[q];
        let grad = &geo.grad[q];
        let jt = jac.jac_terms(&regions, x);
        let dets = jac.det_terms(&jt);
        for (k, &d) in dets.iter().enumerate() {
            if d == 0.0 {
                continue;
            }
            let m = slot(&mut dense, 1 + k, rows, cols);
            let c = -w * d / nu;
            for r in 0..n {
                for s in 0..n {
                    let v = c * nv[r] * nv[s];
                    for comp in 0..4 {
                        m.add(comp * n + r, comp * n + s, v);
                    }
                }
            }
        }
        let adjs = jac.adj_terms(&jt);
        for (k, am) in adjs.iter().enumerate() {
            if is_zero(am) {
                continue;
            }
            let m = slot(&mut dense, 1 + n_det + k, rows, cols);
            // G_r = Âᵀ ∇N_r.
            let g: Vec<[f64; 2]> = grad.iter().map(|gr| at_mul(am, *gr)).collect();
            for r in 0..n {
                for s in 0..n {
                    let ws = w * nv[s];
                    for j in 0..2 {
                        let v = ws * g[r][j];
                        for i in 0..2 {
                            // A_Lu: row L_ij r, col u_i s;  A_uL: row u_i s, col L_ij r.
                            m.add(ly.l(i, j, r), ly.u(i, s), v);
                            m.add(ly.u(i, s), ly.l(i, j, r), v);
                        }
                        // A_pu: row p r, col u_j s;  A_up: row u_j s, col p r.
                        m.add(ly.p(r), ly.u(j, s), v);
                        m.add(ly.u(j, s), ly.p(r), v);
                    }
                }
            }
        }
    }

    // ---- face terms of the adjugate components ----
    for (f, fg) in geo.faces.iter().enumerate() {
        if !has_trace(fg.tag) {
            continue;
        }
        let slip = fg.tag == FaceTag::Slip;
        for q in 0..fg.w.len() {
            let w = fg.w[q];
            let nv = &tab.face_values[f][q];
            let hv = &tab.hat_values[q];
            let nrm = fg.normal[q];
            let t = [-nrm[1], nrm[0]];
            let jt = jac.jac_terms(&regions, fg.x[q]);
            for (k, am) in jac.adj_terms(&jt).iter().enumerate() {
                if is_zero(am) {
                    continue;
                }
                let an = at_mul(am, nrm);
                let m = slot(&mut dense, 1 + n_det + k, rows, cols);
                for a in 0..nf {
                    let wa = w * hv[a];
                    for i in 0..2 {
                        let v = wa * an[i];
                        m.add(ly.closure_row(), ly.hat(f, i, a), v);
                        for r in 0..n {
                            let vr = v * nv[r];
                            m.add(ly.p(r), ly.hat(f, i, a), -vr);
                            for j in 0..2 {
                                m.add(ly.l(i, j, r), ly.hat(f, i, a), -wa * nv[r] * an[j]);
                            }
                        }
                    }
                    if slip {
                        for b in 0..nf {
                            for i in 0..2 {
                                m.add(ly.trace_row(f, 0, a), ly.hat(f, i, b), wa * hv[b] * an[i]);
                            }
                        }
                        for s in 0..n {
                            for i in 0..2 {
                                for j in 0..2 {
                                    m.add(ly.trace_row(f, 1, a), ly.l(i, j, s), -wa * nv[s] * t[i] * an[j]);
                                }
                            }
                        }
                    } else {
                        for s in 0..n {
                            let vs = wa * nv[s];
                            for i in 0..2 {
                                m.add(ly.trace_row(f, i, a), ly.p(s), vs * an[i]);
                                for j in 0..2 {
                                    m.add(ly.trace_row(f, i, a), ly.l(i, j, s), vs * an[j]);
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    // ---- right-hand sides ----
    let mut rhs_out = Vec::new();
    for (ri, rt) in rhs_terms.iter().enumerate() {
        let mut v = vec![0.0; rows];
        match (rt.data, terms[rt.term].kind) {
            (DataKind::Dirichlet, TermKind::Const) => {
                let g = &problem.dirichlet[rt.index].field;
                for (f, fg) in geo.faces.iter().enumerate() {
                    if fg.tag != FaceTag::Dirichlet {
                        continue;
                    }
                    for q in 0..fg.w.len() {
                        let gv = g(fg.x[q]);
                        let nv = &tab.face_values[f][q];
                        for i in 0..2 {
                            for r in 0..n {
                                v[ly.u(i, r)] += tau * fg.w[q] * nv[r] * gv[i];
                            }
                        }
                    }
                }
            }
            (DataKind::Dirichlet, TermKind::Adj(k)) => {
                let g = &problem.dirichlet[rt.index].field;
                for (f, fg) in geo.faces.iter().enumerate() {
                    if fg.tag != FaceTag::Dirichlet {
                        continue;
                    }
                    for q in 0..fg.w.len() {
                        let jt = jac.jac_terms(&regions, fg.x[q]);
                        let am = crate::mapping::adj2(&jt[k]);
                        if is_zero(&am) {
                            continue;
                        }
                        let an = at_mul(&am, fg.normal[q]);
                        let gv = g(fg.x[q]);
                        let w = fg.w[q];
                        let nv = &tab.face_values[f][q];
                        let flux = gv[0] * an[0] + gv[1] * an[1];
                        v[ly.closure_row()] -= w * flux;
                        for r in 0..n {
                            v[ly.p(r)] += w * nv[r] * flux;
                            for i in 0..2 {
                                for j in 0..2 {
                                    v[ly.l(i, j, r)] += w * nv[r] * an[j] * gv[i];
                                }
                            }
                        }
                    }
                }
            }
            (DataKind::Neumann, TermKind::Const) => {
                let g = &problem.neumann[rt.index].field;
                for (f, fg) in geo.faces.iter().enumerate() {
                    if fg.tag != FaceTag::Neumann {
                        continue;
                    }
                    for q in 0..fg.w.len() {
                        let gv = g(fg.x[q]);
                        let hv = &tab.hat_values[q];
                        for i in 0..2 {
                            for a in 0..nf {
                                v[ly.trace_row(f, i, a)] -= fg.w[q] * hv[a] * gv[i];
                            }
                        }
                    }
                }
            }
            (DataKind::BodyForce, TermKind::Det(k)) => {
                let s = &problem.body_force[rt.index].field;
                for (q, &x) in geo.x.iter().enumerate() {
                    let jt = jac.jac_terms(&regions, x);
                    let d = jac.det_terms(&jt)[k];
                    if d == 0.0 {
                        continue;
                    }
                    let sv = s(x);
                    let nv = &tab.vol_values[q];
                    for i in 0..2 {
                        for r in 0..n {
                            v[ly.u(i, r)] += geo.w[q] * d * nv[r] * sv[i];
                        }
                    }
                }
            }
            _ => unreachable!("right-hand-side term with mismatched kinds"),
        }
        if v.iter().any(|&x| x != 0.0) {
            rhs_out.push((ri, v));
        }
    }

    let blocks = dense
        .into_iter()
        .enumerate()
        .filter_map(|(t, d)| d.and_then(|d| Block::from_dense(&d.v, cols).map(|b| (t, b))))
        .collect();
    Ok((blocks, rhs_out))
}

#[inline]
fn is_zero(m: &Mat2) -> bool {
    m.iter().all(|r| r.iter().all(|&v| v == 0.0))
}

/// `mᵀ v`.
#[inline]
fn at_mul(m: &Mat2, v: [f64; 2]) -> [f64; 2] {
    [m[0][0] * v[0] + m[1][0] * v[1], m[0][1] * v[0] + m[1][1] * v[1]]
}
