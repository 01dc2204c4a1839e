//! Separated solutions: modes with per-variable amplitudes, unit spatial
//! blocks and one shared parametric factor per parameter.

use std::fmt::Write as _;
use std::path::Path;

use crate::mesh::ParametricGrid;
use crate::{Error, Result};

/// The five unknowns of the HDG state, in storage order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variable {
    Hat,
    Rho,
    U,
    P,
    L,
}

impl Variable {
    pub const ALL: [Variable; 5] = [Variable::Hat, Variable::Rho, Variable::U, Variable::P, Variable::L];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Variable::Hat => "u_hat",
            Variable::Rho => "rho",
            Variable::U => "u",
            Variable::P => "p",
            Variable::L => "L",
        }
    }
}

/// How a separated solution was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    Apriori,
    Aposteriori,
    Compressed,
}

impl Provenance {
    pub fn name(self) -> &'static str {
        match self {
            Provenance::Apriori => "apriori",
            Provenance::Aposteriori => "aposteriori",
            Provenance::Compressed => "compressed",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "apriori" => Some(Provenance::Apriori),
            "aposteriori" => Some(Provenance::Aposteriori),
            "compressed" => Some(Provenance::Compressed),
            _ => None,
        }
    }
}

/// One rank-one term `Σ_v σ_v f_v ⊗ ψ_1 ⊗ … ⊗ ψ_npa`.
#[derive(Clone, Debug, PartialEq)]
pub struct Mode {
    /// Amplitude per variable (nonnegative).
    pub sigma: [f64; 5],
    /// Spatial block per variable: unit Euclidean norm, or all zeros when
    /// the amplitude is zero.
    pub fields: [Vec<f64>; 5],
    /// Nodal parametric factor per parameter, unit Euclidean norm.
    pub psi: Vec<Vec<f64>>,
}

impl Mode {
    /// Amplitude of `v`.
    pub fn amplitude(&self, v: Variable) -> f64 {
        self.sigma[v.index()]
    }

    /// The stacked spatial vector `[σ_û f_û, σ_ρ f_ρ, σ_u f_u, σ_p f_p, σ_L f_L]`.
    pub fn spatial_state(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.fields.iter().map(Vec::len).sum());
        for (s, f) in self.sigma.iter().zip(&self.fields) {
            out.extend(f.iter().map(|x| s * x));
        }
        out
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Splits a stacked spatial vector into normalised blocks and absorbs the
/// norms of the parametric factors into the amplitudes.
pub fn normalize_mode(state: &[f64], blocks: &[usize; 5], psi: Vec<Vec<f64>>) -> Result<Mode> {
    if state.len() != blocks.iter().sum::<usize>() {
        return Err(Error::Invalid(format!(
            "spatial vector of length {} does not match the block sizes {blocks:?}",
            state.len()
        )));
    }
    let mut scale = 1.0;
    let mut psi_n = Vec::with_capacity(psi.len());
    for p in psi {
        let n = norm(&p);
        if n == 0.0 || !n.is_finite() {
            return Err(Error::ZeroMode);
        }
        scale *= n;
        psi_n.push(p.iter().map(|x| x / n).collect());
    }
    let mut sigma = [0.0; 5];
    let mut fields: [Vec<f64>; 5] = Default::default();
    let mut start = 0;
    for (b, &len) in blocks.iter().enumerate() {
        let blk = &state[start..start + len];
        start += len;
        let n = norm(blk);
        if !n.is_finite() {
            return Err(Error::Singular("non-finite spatial mode".into()));
        }
        if n > 0.0 {
            sigma[b] = n * scale;
            fields[b] = blk.iter().map(|x| x / n).collect();
        } else {
            fields[b] = vec![0.0; len];
        }
    }
    if sigma.iter().all(|&s| s == 0.0) {
        return Err(Error::ZeroMode);
    }
    Ok(Mode {
        sigma,
        fields,
        psi: psi_n,
    })
}

/// A separated approximation over a box of parametric grids.
#[derive(Clone, Debug)]
pub struct SeparatedSolution {
    /// Grid of each parameter on which the factors are nodal vectors.
    pub grids: Vec<ParametricGrid>,
    /// Lengths of the five spatial blocks `[û, ρ, u, p, L]`.
    pub blocks: [usize; 5],
    pub modes: Vec<Mode>,
    /// `σ_û` of every mode, exactly as used by the stopping test.
    pub history: Vec<f64>,
    pub provenance: Provenance,
    /// Full-order (or full-order-structured) solves consumed.
    pub solves: usize,
}

impl SeparatedSolution {
    pub fn new(grids: Vec<ParametricGrid>, blocks: [usize; 5], provenance: Provenance) -> Self {
        SeparatedSolution {
            grids,
            blocks,
            modes: Vec::new(),
            history: Vec::new(),
            provenance,
            solves: 0,
        }
    }

    pub fn n_pa(&self) -> usize {
        self.grids.len()
    }

    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    /// Length of the stacked spatial vector.
    pub fn n_dofs(&self) -> usize {
        self.blocks.iter().sum()
    }

    /// Appends a mode and records its `σ_û`.
    pub fn push(&mut self, mode: Mode) {
        self.history.push(mode.amplitude(Variable::Hat));
        self.modes.push(mode);
    }

    /// Checks that `mu` lies in the parametric box.
    pub fn check_mu(&self, mu: &[f64]) -> Result<()> {
        if mu.len() != self.n_pa() {
            return Err(Error::Invalid(format!(
                "expected {} parameter values, got {}",
                self.n_pa(),
                mu.len()
            )));
        }
        for (j, (g, &m)) in self.grids.iter().zip(mu).enumerate() {
            if !g.contains(m) {
                let (lo, hi) = g.interval();
                return Err(Error::OutOfRange { index: j, value: m, lo, hi });
            }
        }
        Ok(())
    }

    /// `∏_j ψ_j(μ_j)` of every mode.
    pub fn parametric_values(&self, mu: &[f64]) -> Result<Vec<f64>> {
        self.check_mu(mu)?;
        Ok(self
            .modes
            .iter()
            .map(|m| {
                self.grids
                    .iter()
                    .zip(&m.psi)
                    .zip(mu)
                    .map(|((g, p), &x)| g.interpolate(p, x).unwrap_or(0.0))
                    .product()
            })
            .collect())
    }

    /// Stacked state of the first `n_modes` modes at `mu`.
    pub fn evaluate_truncated(&self, mu: &[f64], n_modes: usize) -> Result<Vec<f64>> {
        let psi = self.parametric_values(mu)?;
        let mut out = vec![0.0; self.n_dofs()];
        for (m, &p) in self.modes.iter().zip(&psi).take(n_modes) {
            let mut start = 0;
            for (s, f) in m.sigma.iter().zip(&m.fields) {
                let c = s * p;
                if c != 0.0 {
                    for (o, x) in out[start..start + f.len()].iter_mut().zip(f) {
                        *o += c * x;
                    }
                }
                start += f.len();
            }
        }
        Ok(out)
    }

    /// Stacked state `Σ_m σ f ψ(μ)` at `mu`.
    pub fn evaluate_at(&self, mu: &[f64]) -> Result<Vec<f64>> {
        self.evaluate_truncated(mu, self.modes.len())
    }

    /// Stacked state at a multi-index of parametric grid nodes (no
    /// interpolation).
    pub fn evaluate_at_nodes(&self, idx: &[usize]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_dofs()];
        for m in &self.modes {
            let p: f64 = m.psi.iter().zip(idx).map(|(v, &i)| v[i]).product();
            let mut start = 0;
            for (s, f) in m.sigma.iter().zip(&m.fields) {
                let c = s * p;
                if c != 0.0 {
                    for (o, x) in out[start..start + f.len()].iter_mut().zip(f) {
                        *o += c * x;
                    }
                }
                start += f.len();
            }
        }
        out
    }

    /// The first `n` modes.
    pub fn truncated(&self, n: usize) -> SeparatedSolution {
        let mut s = self.clone();
        s.modes.truncate(n);
        s.history.truncate(n);
        s
    }

    /// Sum of two separated solutions on the same grids.
    pub fn union(&self, other: &SeparatedSolution) -> Result<SeparatedSolution> {
        if self.blocks != other.blocks || !same_grids(&self.grids, &other.grids) {
            return Err(Error::Invalid("separated solutions live on different discretisations".into()));
        }
        let mut s = self.clone();
        for m in &other.modes {
            s.push(m.clone());
        }
        s.solves += other.solves;
        Ok(s)
    }

    // ---- text serialisation ----

    /// Serialises to the documented text format (see [`SeparatedSolution::parse`]).
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "pgdflow-separated-solution 1");
        let _ = writeln!(s, "provenance {}", self.provenance.name());
        let _ = writeln!(s, "solves {}", self.solves);
        let _ = writeln!(s, "parameters {}", self.n_pa());
        for g in &self.grids {
            let (a, b) = g.interval();
            let _ = writeln!(s, "grid {a:e} {b:e} {} {} {}", g.n_elements(), g.degree(), g.n_gauss());
        }
        let _ = writeln!(
            s,
            "blocks {} {} {} {} {}",
            self.blocks[0], self.blocks[1], self.blocks[2], self.blocks[3], self.blocks[4]
        );
        let _ = writeln!(s, "modes {}", self.modes.len());
        for (i, m) in self.modes.iter().enumerate() {
            let _ = writeln!(s, "mode {i}");
            let _ = writeln!(s, "history {:e}", self.history[i]);
            s.push_str("sigma");
            for v in m.sigma {
                let _ = write!(s, " {v:e}");
            }
            s.push('\n');
            for p in &m.psi {
                s.push_str("psi");
                for v in p {
                    let _ = write!(s, " {v:e}");
                }
                s.push('\n');
            }
            for f in &m.fields {
                s.push_str("field");
                for v in f {
                    let _ = write!(s, " {v:e}");
                }
                s.push('\n');
            }
        }
        s
    }

    /// Parses the text format:
    ///
    /// ```text
    /// pgdflow-separated-solution 1
    /// provenance apriori|aposteriori|compressed
    /// solves <count>
    /// parameters <n_pa>
    /// grid <a> <b> <n_elements> <degree> <n_gauss>      (n_pa lines)
    /// blocks <n_û> <n_ρ> <n_u> <n_p> <n_L>
    /// modes <M>
    /// mode <i>                                          (M times:)
    /// history <σ_û used by the stopping test>
    /// sigma <σ_û> <σ_ρ> <σ_u> <σ_p> <σ_L>
    /// psi <nodal values>                                (n_pa lines)
    /// field <values>                                    (5 lines, block order)
    /// ```
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let mut next = |key: &str| -> Result<(usize, Vec<&str>)> {
            let (n, l) = lines.next().ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                line: 0,
                message: format!("unexpected end of file, expected '{key}'"),
            })?;
            let mut it = l.split_whitespace();
            let k = it.next().unwrap_or("");
            if k != key {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: n + 1,
                    message: format!("expected '{key}', found '{k}'"),
                });
            }
            Ok((n + 1, it.collect()))
        };
        let perr = |line: usize, message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        fn nums<T: std::str::FromStr>(v: &[&str], line: usize, path: &Path) -> Result<Vec<T>> {
            v.iter()
                .map(|s| {
                    s.parse::<T>().map_err(|_| Error::Parse {
                        path: path.to_path_buf(),
                        line,
                        message: format!("invalid number '{s}'"),
                    })
                })
                .collect()
        }
        let (l, v) = next("pgdflow-separated-solution")?;
        if v != ["1"] {
            return Err(perr(l, "unsupported format version".into()));
        }
        let (l, v) = next("provenance")?;
        let provenance = v
            .first()
            .and_then(|s| Provenance::parse(s))
            .ok_or_else(|| perr(l, "unknown provenance".into()))?;
        let (l, v) = next("solves")?;
        let solves = *nums::<usize>(&v, l, path)?.first().ok_or_else(|| perr(l, "missing count".into()))?;
        let (l, v) = next("parameters")?;
        let n_pa = *nums::<usize>(&v, l, path)?.first().ok_or_else(|| perr(l, "missing count".into()))?;
        let mut grids = Vec::with_capacity(n_pa);
        for _ in 0..n_pa {
            let (l, v) = next("grid")?;
            if v.len() != 5 {
                return Err(perr(l, "grid needs a b n_elements degree n_gauss".into()));
            }
            let ab = nums::<f64>(&v[..2], l, path)?;
            let ints = nums::<usize>(&v[2..], l, path)?;
            grids.push(
                ParametricGrid::with_gauss(ab[0], ab[1], ints[0], ints[1], ints[2])
                    .map_err(|e| perr(l, e.to_string()))?,
            );
        }
        let (l, v) = next("blocks")?;
        let b = nums::<usize>(&v, l, path)?;
        if b.len() != 5 {
            return Err(perr(l, "blocks needs five sizes".into()));
        }
        let blocks = [b[0], b[1], b[2], b[3], b[4]];
        let (l, v) = next("modes")?;
        let n_modes = *nums::<usize>(&v, l, path)?.first().ok_or_else(|| perr(l, "missing count".into()))?;
        let mut sol = SeparatedSolution::new(grids, blocks, provenance);
        sol.solves = solves;
        for i in 0..n_modes {
            let (l, v) = next("mode")?;
            if nums::<usize>(&v, l, path)? != [i] {
                return Err(perr(l, format!("expected mode {i}")));
            }
            let (l, v) = next("history")?;
            let h = *nums::<f64>(&v, l, path)?.first().ok_or_else(|| perr(l, "missing value".into()))?;
            let (l, v) = next("sigma")?;
            let s = nums::<f64>(&v, l, path)?;
            if s.len() != 5 {
                return Err(perr(l, "sigma needs five values".into()));
            }
            let mut psi = Vec::with_capacity(n_pa);
            for j in 0..n_pa {
                let (l, v) = next("psi")?;
                let p = nums::<f64>(&v, l, path)?;
                if p.len() != sol.grids[j].n_nodes() {
                    return Err(perr(l, format!("psi has {} values, grid has {} nodes", p.len(), sol.grids[j].n_nodes())));
                }
                psi.push(p);
            }
            let mut fields: [Vec<f64>; 5] = Default::default();
            for (bi, f) in fields.iter_mut().enumerate() {
                let (l, v) = next("field")?;
                *f = nums::<f64>(&v, l, path)?;
                if f.len() != blocks[bi] {
                    return Err(perr(l, format!("field has {} values, block has {}", f.len(), blocks[bi])));
                }
            }
            sol.modes.push(Mode {
                sigma: [s[0], s[1], s[2], s[3], s[4]],
                fields,
                psi,
            });
            sol.history.push(h);
        }
        Ok(sol)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }
}

/// Whether two grid lists describe the same parametric discretisation.
pub fn same_grids(a: &[ParametricGrid], b: &[ParametricGrid]) -> bool {
    a.len() == b.len()
        && a.iter().zip(b).all(|(x, y)| {
            x.interval() == y.interval() && x.n_elements() == y.n_elements() && x.degree() == y.degree()
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> ParametricGrid {
        ParametricGrid::new(-1.0, 1.0, 2, 2).unwrap()
    }

    #[test]
    fn normalisation_absorbs_magnitudes() {
        let blocks = [2, 0, 0, 0, 0];
        let m = normalize_mode(&[0.0, 2.0], &blocks, vec![vec![3.0, 0.0, 0.0, 0.0, 0.0]]).unwrap();
        assert!((m.sigma[0] - 6.0).abs() < 1e-15);
        assert_eq!(m.fields[0], vec![0.0, 1.0]);
        assert_eq!(m.psi[0][0], 1.0);
        assert!(matches!(normalize_mode(&[0.0, 0.0], &blocks, vec![vec![1.0; 5]]), Err(Error::ZeroMode)));
    }

    #[test]
    fn empty_solution_evaluates_to_zero() {
        let s = SeparatedSolution::new(vec![grid()], [1, 1, 1, 1, 1], Provenance::Apriori);
        assert_eq!(s.evaluate_at(&[0.3]).unwrap(), vec![0.0; 5]);
        assert!(s.evaluate_at(&[1.5]).is_err());
    }

    #[test]
    fn text_round_trip() {
        let mut s = SeparatedSolution::new(vec![grid()], [1, 1, 1, 1, 1], Provenance::Aposteriori);
        s.solves = 7;
        s.push(normalize_mode(&[1.0, 2.0, 3.0, 4.0, 0.1], &s.blocks, vec![vec![1.0, 2.0, 3.0, 4.0, 5.0]]).unwrap());
        let t = s.to_text();
        let r = SeparatedSolution::parse(&t, Path::new("x")).unwrap();
        assert_eq!(r.modes, s.modes);
        assert_eq!(r.history, s.history);
        assert_eq!(r.solves, 7);
        assert_eq!(r.provenance, Provenance::Aposteriori);
        let bad = t.replace("sigma", "sigmx");
        assert!(matches!(SeparatedSolution::parse(&bad, Path::new("x")), Err(Error::Parse { .. })));
    }
}
