//! Error reports of PGD runs, the comparison table and CSV / summary output.

use std::path::Path;

use crate::hdg::{DragFunctional, HdgSolver, Surface};
use crate::par::Parallelism;
use crate::pgd::SeparatedSolution;
use crate::{Error, Result};

use super::errors::{errors_vs_modes, FieldErrors, ParamQuadrature, ReferenceCache};
use super::surface::{drag_errors, drag_l2_error, drag_response_surface, reference_drag, surface_drag, DragErrors, ResponseSurface};

/// Accuracy of one PGD run as a function of the number of modes.
#[derive(Clone, Debug)]
pub struct ErrorReport {
    /// `apriori`, `aposteriori` or `compressed`.
    pub method: String,
    /// Method setting, e.g. `n_i=2` or `n_s=41`.
    pub setting: String,
    pub solves: usize,
    /// Full-order solves consumed by the first `m` modes, per `m`.
    pub cumulative_solves: Vec<usize>,
    /// `E_u`, `E_p`, `E_L` of the first `m` modes, per `m`.
    pub fields: Vec<FieldErrors>,
    /// `E_D` of the first `m` modes, per `m`.
    pub drag: Vec<f64>,
    /// Pointwise and smoothed drag errors of the complete solution.
    pub final_drag: DragErrors,
}

impl ErrorReport {
    pub fn modes(&self) -> usize {
        self.fields.len()
    }

    /// Solves needed for the first mode count reaching `E_D ≤ target`.
    pub fn solves_to_reach(&self, target: f64) -> Option<(usize, usize)> {
        self.drag
            .iter()
            .position(|&e| e <= target)
            .map(|i| (self.cumulative_solves[i], i + 1))
    }
}

/// Everything needed to measure runs against full-order references.
pub struct Evaluator<'a> {
    pub solver: &'a HdgSolver,
    pub functional: DragFunctional,
    pub surface: Surface,
    pub quad: ParamQuadrature,
    pub cache: ReferenceCache,
    pub par: Parallelism,
}

impl<'a> Evaluator<'a> {
    pub fn new(
        solver: &'a HdgSolver,
        functional: DragFunctional,
        surface: Surface,
        grids: &[crate::mesh::ParametricGrid],
        par: Parallelism,
    ) -> Self {
        Evaluator {
            solver,
            functional,
            surface,
            quad: ParamQuadrature::new(grids),
            cache: ReferenceCache::new(),
            par,
        }
    }

    /// Reference drag at the quadrature points (solving the references on
    /// first use).
    pub fn reference_drag(&self) -> Result<Vec<f64>> {
        let refs = self.cache.states(self.solver, &self.quad.points, self.par)?;
        Ok(reference_drag(&self.functional, &self.quad, &refs))
    }

    /// Error report of `sol`; `cumulative` gives the solves consumed by the
    /// first `m` modes (`None`: all solves precede the first mode, as for a
    /// snapshot tensor).
    pub fn report(&self, sol: &SeparatedSolution, setting: &str, cumulative: Option<&[usize]>) -> Result<ErrorReport> {
        let refs = self.cache.states(self.solver, &self.quad.points, self.par)?;
        let fields = errors_vs_modes(sol, self.solver.disc(), &self.quad, &refs, self.par)?;
        let surface = drag_response_surface(sol, &self.functional, self.surface)?;
        let reference = reference_drag(&self.functional, &self.quad, &refs);
        let mut drag = Vec::with_capacity(sol.n_modes());
        for m in 1..=sol.n_modes() {
            drag.push(drag_l2_error(&self.quad, &surface_drag(&surface, &self.quad, m)?, &reference));
        }
        let values = surface_drag(&surface, &self.quad, sol.n_modes())?;
        let final_drag = drag_errors(&self.quad, &sol.grids, &values, &reference);
        let cumulative_solves = match cumulative {
            Some(c) if c.len() == sol.n_modes() => c.to_vec(),
            Some(c) => {
                return Err(Error::Invalid(format!(
                    "{} cumulative solve counts for {} modes",
                    c.len(),
                    sol.n_modes()
                )))
            }
            None => vec![sol.solves; sol.n_modes()],
        };
        Ok(ErrorReport {
            method: sol.provenance.name().to_string(),
            setting: setting.to_string(),
            solves: sol.solves,
            cumulative_solves,
            fields,
            drag,
            final_drag,
        })
    }

    pub fn response_surface(&self, sol: &SeparatedSolution) -> Result<ResponseSurface> {
        drag_response_surface(sol, &self.functional, self.surface)
    }
}

/// One row of the comparison table.
#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonRow {
    pub method: String,
    pub setting: String,
    pub modes: usize,
    pub solves: usize,
    pub e_u: f64,
    pub e_p: f64,
    pub e_l: f64,
    pub e_d: f64,
}

/// Cheapest run of a method reaching an `E_D` target.
#[derive(Clone, Debug, PartialEq)]
pub struct MatchedAccuracy {
    pub target: f64,
    pub method: String,
    /// `(solves, modes, setting)` of the cheapest run, if any reaches it.
    pub best: Option<(usize, usize, String)>,
}

/// `E_D` targets of the matched-accuracy summary.
pub const DRAG_TARGETS: [f64; 3] = [1e-2, 1e-3, 1e-5];

/// Comparison table and matched-accuracy summary of several runs.
#[derive(Clone, Debug, Default)]
pub struct Comparison {
    pub rows: Vec<ComparisonRow>,
    pub matched: Vec<MatchedAccuracy>,
}

pub fn comparison_report(runs: &[ErrorReport]) -> Comparison {
    let rows = runs
        .iter()
        .map(|r| {
            let f = r.fields.last().copied().unwrap_or(FieldErrors {
                u: 1.0,
                p: 1.0,
                l: 1.0,
            });
            ComparisonRow {
                method: r.method.clone(),
                setting: r.setting.clone(),
                modes: r.modes(),
                solves: r.solves,
                e_u: f.u,
                e_p: f.p,
                e_l: f.l,
                e_d: r.drag.last().copied().unwrap_or(1.0),
            }
        })
        .collect();
    let mut methods: Vec<&str> = Vec::new();
    for r in runs {
        if !methods.contains(&r.method.as_str()) {
            methods.push(&r.method);
        }
    }
    let mut matched = Vec::new();
    for &target in &DRAG_TARGETS {
        for &m in &methods {
            let best = runs
                .iter()
                .filter(|r| r.method == m)
                .filter_map(|r| r.solves_to_reach(target).map(|(s, k)| (s, k, r.setting.clone())))
                .min_by_key(|b| (b.0, b.1));
            matched.push(MatchedAccuracy {
                target,
                method: m.to_string(),
                best,
            });
        }
    }
    Comparison { rows, matched }
}

fn fmt(v: f64) -> String {
    format!("{v:.12e}")
}

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Invalid(format!("{other:?}")),
    })
}

fn finish(mut w: csv::Writer<std::fs::File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

/// `errors_vs_modes.csv`: one row per run and mode count.
pub fn write_errors_vs_modes(path: impl AsRef<Path>, runs: &[ErrorReport]) -> Result<()> {
    let path = path.as_ref();
    let mut w = writer(path)?;
    w.write_record(["method", "setting", "m", "solves", "E_u", "E_p", "E_L", "E_D"])?;
    for r in runs {
        for (i, (f, d)) in r.fields.iter().zip(&r.drag).enumerate() {
            w.write_record([
                r.method.clone(),
                r.setting.clone(),
                (i + 1).to_string(),
                r.cumulative_solves[i].to_string(),
                fmt(f.u),
                fmt(f.p),
                fmt(f.l),
                fmt(*d),
            ])?;
        }
    }
    finish(w, path)
}

/// `drag_surface.csv`: the force of each surface at every node of the
/// parametric grids.
pub fn write_drag_surface(path: impl AsRef<Path>, surfaces: &[&ResponseSurface]) -> Result<()> {
    let path = path.as_ref();
    let first = surfaces
        .first()
        .ok_or_else(|| Error::Invalid("no response surface to write".into()))?;
    let mut w = writer(path)?;
    let n_pa = first.grids.len();
    let mut header: Vec<String> = (1..=n_pa).map(|j| format!("mu{j}")).collect();
    for s in surfaces {
        header.push(format!("F_D_{}", s.surface.name()));
        header.push(format!("F_L_{}", s.surface.name()));
    }
    w.write_record(&header)?;
    let nodes: Vec<Vec<f64>> = first.grids.iter().map(|g| g.nodes()).collect();
    let shape: Vec<usize> = nodes.iter().map(Vec::len).collect();
    for p in 0..shape.iter().product() {
        let idx = crate::pgd::tensor::multi_index(p, &shape);
        let mu: Vec<f64> = idx.iter().zip(&nodes).map(|(&i, n)| n[i]).collect();
        let mut rec: Vec<String> = mu.iter().map(|&v| fmt(v)).collect();
        for s in surfaces {
            let f = s.eval(&mu)?;
            rec.push(fmt(f[0]));
            rec.push(fmt(f[1]));
        }
        w.write_record(&rec)?;
    }
    finish(w, path)
}

/// `error_map.csv`: smoothed pointwise drag error per parametric element.
pub fn write_error_map(path: impl AsRef<Path>, errors: &DragErrors) -> Result<()> {
    let path = path.as_ref();
    let mut w = writer(path)?;
    let n_pa = errors.smoothed.first().map_or(0, |e| e.element.len());
    let mut header: Vec<String> = (1..=n_pa).map(|j| format!("element{j}")).collect();
    header.extend((1..=n_pa).map(|j| format!("centre{j}")));
    header.push("eps_D".into());
    w.write_record(&header)?;
    for e in &errors.smoothed {
        let mut rec: Vec<String> = e.element.iter().map(|i| i.to_string()).collect();
        rec.extend(e.centre.iter().map(|&c| fmt(c)));
        rec.push(e.mean.map(fmt).unwrap_or_default());
        w.write_record(&rec)?;
    }
    finish(w, path)
}

/// `pointwise_error.csv`: `ε_D` at every parametric quadrature point.
pub fn write_pointwise_error(path: impl AsRef<Path>, errors: &DragErrors) -> Result<()> {
    let path = path.as_ref();
    let mut w = writer(path)?;
    let n_pa = errors.points.first().map_or(0, |p| p.mu.len());
    let mut header: Vec<String> = (1..=n_pa).map(|j| format!("mu{j}")).collect();
    header.extend(["F_D".to_string(), "F_D_ref".to_string(), "eps_D".to_string()]);
    w.write_record(&header)?;
    for p in &errors.points {
        let mut rec: Vec<String> = p.mu.iter().map(|&v| fmt(v)).collect();
        rec.push(fmt(p.value));
        rec.push(fmt(p.reference));
        rec.push(p.eps.map(fmt).unwrap_or_default());
        w.write_record(&rec)?;
    }
    finish(w, path)
}

/// `comparison.csv`: one row per run.
pub fn write_comparison(path: impl AsRef<Path>, cmp: &Comparison) -> Result<()> {
    let path = path.as_ref();
    let mut w = writer(path)?;
    w.write_record(["method", "setting", "modes", "solves", "E_u", "E_p", "E_L", "E_D"])?;
    for r in &cmp.rows {
        w.write_record([
            r.method.clone(),
            r.setting.clone(),
            r.modes.to_string(),
            r.solves.to_string(),
            fmt(r.e_u),
            fmt(r.e_p),
            fmt(r.e_l),
            fmt(r.e_d),
        ])?;
    }
    finish(w, path)
}

/// `matched_accuracy.csv`: cheapest run of each method per `E_D` target.
pub fn write_matched_accuracy(path: impl AsRef<Path>, cmp: &Comparison) -> Result<()> {
    let path = path.as_ref();
    let mut w = writer(path)?;
    w.write_record(["target_E_D", "method", "solves", "modes", "setting"])?;
    for m in &cmp.matched {
        let (s, k, set) = match &m.best {
            Some((s, k, set)) => (s.to_string(), k.to_string(), set.clone()),
            None => (String::new(), String::new(), String::new()),
        };
        w.write_record([format!("{:e}", m.target), m.method.clone(), s, k, set])?;
    }
    finish(w, path)
}

/// Writes `key: value` lines.
pub fn write_summary(path: impl AsRef<Path>, entries: &[(String, String)]) -> Result<()> {
    let path = path.as_ref();
    let mut s = String::new();
    for (k, v) in entries {
        s.push_str(k);
        s.push_str(": ");
        s.push_str(v);
        s.push('\n');
    }
    std::fs::write(path, s).map_err(|e| Error::io(path, e))
}

/// Summary entries of a report.
pub fn report_summary(r: &ErrorReport) -> Vec<(String, String)> {
    let f = r.fields.last().copied().unwrap_or_default();
    vec![
        ("method".into(), r.method.clone()),
        ("setting".into(), r.setting.clone()),
        ("modes".into(), r.modes().to_string()),
        ("solves".into(), r.solves.to_string()),
        ("E_u".into(), fmt(f.u)),
        ("E_p".into(), fmt(f.p)),
        ("E_L".into(), fmt(f.l)),
        ("E_D".into(), fmt(r.drag.last().copied().unwrap_or(1.0))),
        ("excluded_points".into(), r.final_drag.excluded.to_string()),
    ]
}
