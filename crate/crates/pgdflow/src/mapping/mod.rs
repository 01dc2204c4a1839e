//! Separated geometric mappings `M_μ(x) = Σ_k M^k(x) φ^k(μ)` from the
//! reference domain to parametrised domains, with the exact separation of
//! the Jacobian determinant and adjugate in two dimensions.

pub mod quality;
pub mod swimmer;

use std::fmt;
use std::sync::Arc;

pub use quality::{check_conforming, scaled_jacobian_quality};
pub use swimmer::{distance_mapping, radius_mapping, swimmer_mapping, SwimmerGeometry, SwimmerStudy, VOLUME_CONSTANT};

use crate::{Error, Result};

/// 2×2 matrix stored row-major: `m[a][b]`.
pub type Mat2 = [[f64; 2]; 2];

/// Identity matrix.
pub const IDENTITY2: Mat2 = [[1.0, 0.0], [0.0, 1.0]];

/// Determinant of a 2×2 matrix.
pub fn det2(m: &Mat2) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

/// Adjugate `det(m)·m⁻¹` of a 2×2 matrix (linear in the entries).
pub fn adj2(m: &Mat2) -> Mat2 {
    [[m[1][1], -m[0][1]], [-m[1][0], m[0][0]]]
}

/// Mixed determinant term: `det(a + b) = det a + det b + mixed2(a, b)`.
pub fn mixed2(a: &Mat2, b: &Mat2) -> f64 {
    a[0][0] * b[1][1] + a[1][1] * b[0][0] - a[0][1] * b[1][0] - a[1][0] * b[0][1]
}

/// Matrix product.
pub fn mul2(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut c = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

/// A closed-form spatial term `M^k(x)`, possibly piecewise. Piecewise
/// fields label their pieces with a region id so that every point of one
/// element can be evaluated with the element's own formula, even on the
/// element boundary where the pieces meet.
pub trait SpatialField: Send + Sync {
    /// Region of a point; single-piece fields return 0.
    fn region(&self, _x: [f64; 2]) -> u32 {
        0
    }
    /// Value using the formula of region `r`.
    fn value_in(&self, r: u32, x: [f64; 2]) -> [f64; 2];
    /// Jacobian `∂M_a/∂x_b` using the formula of region `r`.
    fn jacobian_in(&self, r: u32, x: [f64; 2]) -> Mat2;
    /// Short description for diagnostics.
    fn describe(&self) -> String;

    /// Value with the region of `x` itself.
    fn value(&self, x: [f64; 2]) -> [f64; 2] {
        self.value_in(self.region(x), x)
    }
    /// Jacobian with the region of `x` itself.
    fn jacobian(&self, x: [f64; 2]) -> Mat2 {
        self.jacobian_in(self.region(x), x)
    }
}

/// The identity field `M(x) = x`.
#[derive(Clone, Copy, Debug)]
pub struct IdentityField;

impl SpatialField for IdentityField {
    fn value_in(&self, _: u32, x: [f64; 2]) -> [f64; 2] {
        x
    }
    fn jacobian_in(&self, _: u32, _: [f64; 2]) -> Mat2 {
        IDENTITY2
    }
    fn describe(&self) -> String {
        "x".into()
    }
}

/// A field multiplied by a constant (used when a parameter is frozen).
struct ScaledField {
    inner: Arc<dyn SpatialField>,
    scale: f64,
}

impl SpatialField for ScaledField {
    fn region(&self, x: [f64; 2]) -> u32 {
        self.inner.region(x)
    }
    fn value_in(&self, r: u32, x: [f64; 2]) -> [f64; 2] {
        let v = self.inner.value_in(r, x);
        [self.scale * v[0], self.scale * v[1]]
    }
    fn jacobian_in(&self, r: u32, x: [f64; 2]) -> Mat2 {
        let j = self.inner.jacobian_in(r, x);
        [
            [self.scale * j[0][0], self.scale * j[0][1]],
            [self.scale * j[1][0], self.scale * j[1][1]],
        ]
    }
    fn describe(&self) -> String {
        format!("{}*({})", self.scale, self.inner.describe())
    }
}

/// A scalar function of one parametric coordinate.
#[derive(Clone)]
pub enum Factor1D {
    /// The constant 1.
    One,
    /// A general function, with a label for diagnostics.
    Func(Arc<dyn Fn(f64) -> f64 + Send + Sync>, String),
}

impl Factor1D {
    /// Wraps a closure.
    pub fn func(label: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Factor1D::Func(Arc::new(f), label.into())
    }

    pub fn eval(&self, mu: f64) -> f64 {
        match self {
            Factor1D::One => 1.0,
            Factor1D::Func(f, _) => f(mu),
        }
    }

    pub fn is_one(&self) -> bool {
        matches!(self, Factor1D::One)
    }

    /// Pointwise product.
    pub fn product(&self, other: &Factor1D) -> Factor1D {
        match (self, other) {
            (Factor1D::One, o) | (o, Factor1D::One) => o.clone(),
            (Factor1D::Func(f, a), Factor1D::Func(g, b)) => {
                let (f, g) = (f.clone(), g.clone());
                Factor1D::Func(Arc::new(move |m| f(m) * g(m)), format!("{a}*{b}"))
            }
        }
    }
}

impl fmt::Debug for Factor1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Factor1D::One => write!(f, "1"),
            Factor1D::Func(_, l) => write!(f, "{l}"),
        }
    }
}

/// A separable function of all parameters: `Π_j f_j(μ_j)`.
#[derive(Clone, Debug)]
pub struct ParamFactor {
    pub parts: Vec<Factor1D>,
}

impl ParamFactor {
    /// The constant 1 over `n_pa` parameters.
    pub fn one(n_pa: usize) -> Self {
        ParamFactor {
            parts: vec![Factor1D::One; n_pa],
        }
    }

    /// A factor depending on parameter `j` only.
    pub fn single(n_pa: usize, j: usize, f: Factor1D) -> Self {
        let mut p = Self::one(n_pa);
        p.parts[j] = f;
        p
    }

    pub fn n_pa(&self) -> usize {
        self.parts.len()
    }

    pub fn eval(&self, mu: &[f64]) -> f64 {
        self.parts.iter().zip(mu).map(|(f, &m)| f.eval(m)).product()
    }

    /// Pointwise product of two factors over the same parameters.
    pub fn product(&self, other: &ParamFactor) -> ParamFactor {
        assert_eq!(self.n_pa(), other.n_pa());
        ParamFactor {
            parts: self
                .parts
                .iter()
                .zip(&other.parts)
                .map(|(a, b)| a.product(b))
                .collect(),
        }
    }

    /// Inserts constant parts so the factor lives on a larger parameter set:
    /// `before` parameters in front, `after` behind.
    pub fn pad(&self, before: usize, after: usize) -> ParamFactor {
        let mut parts = vec![Factor1D::One; before];
        parts.extend(self.parts.iter().cloned());
        parts.extend(std::iter::repeat_n(Factor1D::One, after));
        ParamFactor { parts }
    }
}

/// One term `M^k(x) φ^k(μ)`.
#[derive(Clone)]
pub struct MapTerm {
    pub field: Arc<dyn SpatialField>,
    pub factor: ParamFactor,
}

impl fmt::Debug for MapTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]·{:?}", self.field.describe(), self.factor.parts)
    }
}

/// Separated mapping with its parameter box.
#[derive(Clone, Debug)]
pub struct SeparatedMapping {
    pub terms: Vec<MapTerm>,
    pub intervals: Vec<(f64, f64)>,
}

/// Slack used when checking that parameters lie in their intervals.
const RANGE_SLACK: f64 = 1e-12;

impl SeparatedMapping {
    /// The parameter-free identity mapping.
    pub fn identity() -> Self {
        SeparatedMapping {
            terms: vec![MapTerm {
                field: Arc::new(IdentityField),
                factor: ParamFactor::one(0),
            }],
            intervals: vec![],
        }
    }

    /// The identity mapping over a parameter box (for problems whose only
    /// parametric dependence is in the data).
    pub fn identity_over(intervals: Vec<(f64, f64)>) -> Self {
        SeparatedMapping {
            terms: vec![MapTerm {
                field: Arc::new(IdentityField),
                factor: ParamFactor::one(intervals.len()),
            }],
            intervals,
        }
    }

    pub fn n_pa(&self) -> usize {
        self.intervals.len()
    }

    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }

    /// Checks that `mu` has the right length and lies in the box.
    pub fn check_mu(&self, mu: &[f64]) -> Result<()> {
        if mu.len() != self.n_pa() {
            return Err(Error::Invalid(format!(
                "expected {} parameter values, got {}",
                self.n_pa(),
                mu.len()
            )));
        }
        for (j, (&m, &(lo, hi))) in mu.iter().zip(&self.intervals).enumerate() {
            let tol = RANGE_SLACK * (hi - lo).abs().max(1.0);
            if !(m >= lo - tol && m <= hi + tol) {
                return Err(Error::OutOfRange {
                    index: j,
                    value: m,
                    lo,
                    hi,
                });
            }
        }
        Ok(())
    }

    /// Per-term region ids of a point (see [`SpatialField::region`]).
    pub fn regions(&self, x: [f64; 2]) -> Vec<u32> {
        self.terms.iter().map(|t| t.field.region(x)).collect()
    }

    /// Parametric factors `φ^k(μ)` (no range check).
    pub fn factors(&self, mu: &[f64]) -> Vec<f64> {
        self.terms.iter().map(|t| t.factor.eval(mu)).collect()
    }

    /// `M_μ(x)`.
    pub fn evaluate(&self, x: [f64; 2], mu: &[f64]) -> Result<[f64; 2]> {
        self.check_mu(mu)?;
        Ok(self.evaluate_in(&self.regions(x), x, mu))
    }

    /// `M_μ(x)` using the given per-term regions (no range check).
    pub fn evaluate_in(&self, regions: &[u32], x: [f64; 2], mu: &[f64]) -> [f64; 2] {
        let mut y = [0.0; 2];
        for (t, &r) in self.terms.iter().zip(regions) {
            let c = t.factor.eval(mu);
            if c != 0.0 {
                let v = t.field.value_in(r, x);
                y[0] += c * v[0];
                y[1] += c * v[1];
            }
        }
        y
    }

    /// `J_μ(x)`.
    pub fn jacobian(&self, x: [f64; 2], mu: &[f64]) -> Result<Mat2> {
        self.check_mu(mu)?;
        Ok(self.jacobian_in(&self.regions(x), x, mu))
    }

    /// `J_μ(x)` with explicit regions (no range check).
    pub fn jacobian_in(&self, regions: &[u32], x: [f64; 2], mu: &[f64]) -> Mat2 {
        let mut j = [[0.0; 2]; 2];
        for (t, &r) in self.terms.iter().zip(regions) {
            let c = t.factor.eval(mu);
            if c != 0.0 {
                let jt = t.field.jacobian_in(r, x);
                for a in 0..2 {
                    for b in 0..2 {
                        j[a][b] += c * jt[a][b];
                    }
                }
            }
        }
        j
    }

    /// Freezes parameter `j` at `value`, removing it from the box.
    pub fn freeze(&self, j: usize, value: f64) -> Result<SeparatedMapping> {
        if j >= self.n_pa() {
            return Err(Error::Invalid(format!("no parameter {j} to freeze")));
        }
        let (lo, hi) = self.intervals[j];
        let tol = RANGE_SLACK * (hi - lo).abs().max(1.0);
        if !(value >= lo - tol && value <= hi + tol) {
            return Err(Error::OutOfRange {
                index: j,
                value,
                lo,
                hi,
            });
        }
        let terms = self
            .terms
            .iter()
            .map(|t| {
                let mut parts = t.factor.parts.clone();
                let f = parts.remove(j);
                let field: Arc<dyn SpatialField> = if f.is_one() {
                    t.field.clone()
                } else {
                    Arc::new(ScaledField {
                        inner: t.field.clone(),
                        scale: f.eval(value),
                    })
                };
                MapTerm {
                    field,
                    factor: ParamFactor { parts },
                }
            })
            .collect();
        let mut intervals = self.intervals.clone();
        intervals.remove(j);
        Ok(SeparatedMapping { terms, intervals })
    }
}

/// Composition `b ∘ a`: `x ↦ b(a(x, μ_a), μ_b)` with parameters `(μ_a, μ_b)`.
///
/// `b` must consist of one identity term (factor 1) plus displacement terms
/// `B^k` that are invariant under `a` (`B^k(a(x, μ)) = B^k(x)`), which is what
/// keeps the composition separable with the factors of `a` and `b`
/// unchanged. Invariance is checked at the `samples` for the corners and
/// centre of `a`'s box; a violation is reported as an error (no numerical
/// re-separation is attempted).
pub fn compose_mappings(
    a: &SeparatedMapping,
    b: &SeparatedMapping,
    samples: &[[f64; 2]],
) -> Result<SeparatedMapping> {
    let is_identity = |t: &MapTerm| {
        t.factor.parts.iter().all(Factor1D::is_one)
            && samples.iter().all(|&x| {
                let v = t.field.value(x);
                let j = t.field.jacobian(x);
                (v[0] - x[0]).abs() < 1e-14 * (1.0 + x[0].abs())
                    && (v[1] - x[1]).abs() < 1e-14 * (1.0 + x[1].abs())
                    && j == IDENTITY2
            })
    };
    // An inner identity without parameters leaves the outer mapping as is.
    if a.n_pa() == 0 && a.terms.len() == 1 && is_identity(&a.terms[0]) {
        return Ok(b.clone());
    }
    let id: Vec<usize> = (0..b.terms.len()).filter(|&i| is_identity(&b.terms[i])).collect();
    if id.len() != 1 {
        return Err(Error::Invalid(format!(
            "composition needs exactly one identity term in the outer mapping, found {}",
            id.len()
        )));
    }
    // Parameter samples of a: corners of the box and its centre.
    let na = a.n_pa();
    let mut mus: Vec<Vec<f64>> = Vec::new();
    for mask in 0..(1usize << na) {
        mus.push(
            (0..na)
                .map(|j| if mask >> j & 1 == 1 { a.intervals[j].1 } else { a.intervals[j].0 })
                .collect(),
        );
    }
    mus.push(a.intervals.iter().map(|(l, h)| 0.5 * (l + h)).collect());
    for (i, t) in b.terms.iter().enumerate() {
        if i == id[0] {
            continue;
        }
        for &x in samples {
            let bx = t.field.value(x);
            for mu in &mus {
                let y = a.evaluate(x, mu)?;
                let by = t.field.value(y);
                let scale = 1.0 + bx[0].abs().max(bx[1].abs());
                if (by[0] - bx[0]).abs() > 1e-12 * scale || (by[1] - bx[1]).abs() > 1e-12 * scale {
                    return Err(Error::Invalid(format!(
                        "composition is not separable: term '{}' varies under the inner mapping at x = {:?}",
                        t.field.describe(),
                        x
                    )));
                }
            }
        }
    }
    let nb = b.n_pa();
    let mut terms: Vec<MapTerm> = a
        .terms
        .iter()
        .map(|t| MapTerm {
            field: t.field.clone(),
            factor: t.factor.pad(0, nb),
        })
        .collect();
    for (i, t) in b.terms.iter().enumerate() {
        if i != id[0] {
            terms.push(MapTerm {
                field: t.field.clone(),
                factor: t.factor.pad(na, 0),
            });
        }
    }
    let mut intervals = a.intervals.clone();
    intervals.extend(b.intervals.iter().copied());
    Ok(SeparatedMapping { terms, intervals })
}

/// Which Jacobian terms a separated det term multiplies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DetPair(pub usize, pub usize);

/// Separated determinant and adjugate of a mapping's Jacobian.
///
/// `det J_μ = Σ_{i<=j} D^{ij}(x) φ^i φ^j` with `D^{ii} = det J^i` and
/// `D^{ij} = mixed(J^i, J^j)` for `i < j`; `adj J_μ = Σ_k adj(J^k) φ^k`.
#[derive(Clone, Debug)]
pub struct SeparatedJacobian {
    pub mapping: SeparatedMapping,
    pub det_pairs: Vec<DetPair>,
    pub det_factors: Vec<ParamFactor>,
    pub adj_factors: Vec<ParamFactor>,
}

impl SeparatedJacobian {
    /// Analytic separation of det/adj (two dimensions only).
    pub fn new(mapping: &SeparatedMapping) -> Self {
        let n = mapping.n_terms();
        let mut det_pairs = Vec::with_capacity(n * (n + 1) / 2);
        let mut det_factors = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in i..n {
                det_pairs.push(DetPair(i, j));
                det_factors.push(mapping.terms[i].factor.product(&mapping.terms[j].factor));
            }
        }
        let adj_factors = mapping.terms.iter().map(|t| t.factor.clone()).collect();
        SeparatedJacobian {
            mapping: mapping.clone(),
            det_pairs,
            det_factors,
            adj_factors,
        }
    }

    pub fn n_det(&self) -> usize {
        self.det_pairs.len()
    }

    pub fn n_adj(&self) -> usize {
        self.adj_factors.len()
    }

    /// Jacobian terms `J^k(x)` with explicit regions.
    pub fn jac_terms(&self, regions: &[u32], x: [f64; 2]) -> Vec<Mat2> {
        self.mapping
            .terms
            .iter()
            .zip(regions)
            .map(|(t, &r)| t.field.jacobian_in(r, x))
            .collect()
    }

    /// Spatial det terms `D^k(x)` from precomputed Jacobian terms.
    pub fn det_terms(&self, jac: &[Mat2]) -> Vec<f64> {
        self.det_pairs
            .iter()
            .map(|&DetPair(i, j)| {
                if i == j {
                    det2(&jac[i])
                } else {
                    mixed2(&jac[i], &jac[j])
                }
            })
            .collect()
    }

    /// Spatial adjugate terms `A^k(x)` from precomputed Jacobian terms.
    pub fn adj_terms(&self, jac: &[Mat2]) -> Vec<Mat2> {
        jac.iter().map(adj2).collect()
    }

    /// Reconstructed `det J_μ(x)` from the separated terms.
    pub fn det(&self, x: [f64; 2], mu: &[f64]) -> Result<f64> {
        self.mapping.check_mu(mu)?;
        let jac = self.jac_terms(&self.mapping.regions(x), x);
        Ok(self
            .det_terms(&jac)
            .iter()
            .zip(&self.det_factors)
            .map(|(d, f)| d * f.eval(mu))
            .sum())
    }

    /// Reconstructed `adj J_μ(x)` from the separated terms.
    pub fn adj(&self, x: [f64; 2], mu: &[f64]) -> Result<Mat2> {
        self.mapping.check_mu(mu)?;
        let jac = self.jac_terms(&self.mapping.regions(x), x);
        let mut out = [[0.0; 2]; 2];
        for (a, f) in self.adj_terms(&jac).iter().zip(&self.adj_factors) {
            let c = f.eval(mu);
            for r in 0..2 {
                for s in 0..2 {
                    out[r][s] += c * a[r][s];
                }
            }
        }
        Ok(out)
    }
}

/// Alias matching the operation name used in the documentation.
pub fn separate_det_adj(mapping: &SeparatedMapping) -> SeparatedJacobian {
    SeparatedJacobian::new(mapping)
}
