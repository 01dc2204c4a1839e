//! Implementation of the subcommands.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use pgdflow::analysis::{
    comparison_report, report_summary, write_comparison, write_drag_surface, write_error_map, write_errors_vs_modes,
    write_matched_accuracy, write_pointwise_error, write_summary, ErrorReport, Evaluator,
};
use pgdflow::hdg::{export_fields, HdgSolver, StokesProblem, Surface};
use pgdflow::mapping::{scaled_jacobian_quality, swimmer_mapping, SeparatedMapping, SwimmerGeometry};
use pgdflow::mesh::{load_mesh, write_mesh, ParametricGrid, ReferenceMesh};
use pgdflow::meshgen::{swimmer_mesh, SwimmerMeshSpec};
use pgdflow::pgd::{
    compress as compress_solution, compute_snapshots, run_apriori_logged, separate, SeparatedSolution, SnapshotPlan,
};
use pgdflow::Parallelism;

use crate::config::{BoundaryData, Level, MethodSpec, RunConfig, Study};
use crate::Failure;

type Outcome = Result<(), Failure>;

/// Mesh, mapping, solver and parametric grids of a configuration.
struct Setup {
    geom: SwimmerGeometry,
    mesh: Arc<ReferenceMesh>,
    solver: HdgSolver,
    grids: Vec<ParametricGrid>,
    par: Parallelism,
}

impl Setup {
    fn new(cfg: &RunConfig) -> Result<Self, Failure> {
        let par = parallelism(cfg);
        let geom = SwimmerGeometry::default();
        let mesh = Arc::new(build_mesh(cfg, &geom)?);
        let mapping = build_mapping(cfg, &geom)?;
        let problem = build_problem(cfg, &geom, mapping.n_pa());
        let solver = HdgSolver::new(mesh.clone(), &mapping, &problem, par)?;
        let grids = cfg
            .mapping
            .parameters()
            .into_iter()
            .map(|(i, n)| ParametricGrid::with_gauss(i[0], i[1], n, cfg.mapping.degree, cfg.mapping.gauss))
            .collect::<pgdflow::Result<Vec<_>>>()?;
        log::info!(
            "setup elements={} dofs={} operator_terms={} parameters={}",
            mesh.n_elements(),
            solver.op.n_state(),
            solver.op.n_terms(),
            grids.len()
        );
        Ok(Setup {
            geom,
            mesh,
            solver,
            grids,
            par,
        })
    }

    fn evaluator(&self, cfg: &RunConfig, grids: &[ParametricGrid]) -> Evaluator<'_> {
        let surface = cfg.analysis.surface.surface();
        Evaluator::new(&self.solver, self.functional(surface), surface, grids, self.par)
    }

    fn functional(&self, surface: Surface) -> pgdflow::hdg::DragFunctional {
        let faces = self.solver.sphere_faces(&self.geom.centres(), self.geom.r_out);
        self.solver.drag_functional(&faces, surface)
    }
}

fn parallelism(cfg: &RunConfig) -> Parallelism {
    if cfg.run.threads == 1 {
        Parallelism::Sequential
    } else {
        Parallelism::Parallel
    }
}

fn build_mesh(cfg: &RunConfig, geom: &SwimmerGeometry) -> Result<ReferenceMesh, Failure> {
    Ok(match &cfg.mesh.path {
        Some(p) => load_mesh(p)?,
        None => {
            let spec = SwimmerMeshSpec {
                k: cfg.mesh.k,
                ..SwimmerMeshSpec::default()
            };
            swimmer_mesh(geom, &spec.refined(cfg.mesh.refine))?
        }
    })
}

fn build_mapping(cfg: &RunConfig, geom: &SwimmerGeometry) -> Result<SeparatedMapping, Failure> {
    let m = &cfg.mapping;
    let i1 = (m.i1[0], m.i1[1]);
    let i2 = (m.i2[0], m.i2[1]);
    Ok(match m.swimmer_study() {
        None => SeparatedMapping::identity_over(vec![i1]),
        Some(study) => swimmer_mapping(geom, study, i1, i2, m.mu1)?,
    })
}

fn build_problem(cfg: &RunConfig, geom: &SwimmerGeometry, n_pa: usize) -> StokesProblem {
    let p = &cfg.problem;
    let mut problem = match p.boundary {
        BoundaryData::Swimmer => StokesProblem::swimmer(p.nu, geom.l, n_pa),
        BoundaryData::Constant => {
            let mut s = StokesProblem::new(p.nu);
            s.dirichlet.push(pgdflow::hdg::DataTerm::fixed(n_pa, |_| [1.0, 0.0]));
            s
        }
    };
    problem.ell = p.ell;
    problem.tau_scale = p.tau_scale;
    problem.quad_degree = p.quad_degree;
    problem
}

/// Creates the output directory and writes the configuration echo.
fn prepare_out(cfg: &RunConfig) -> Result<PathBuf, Failure> {
    let out = cfg.run.out.clone();
    std::fs::create_dir_all(&out).map_err(|e| Failure::usage(format!("{}: {e}", out.display())))?;
    let echo = toml::to_string(cfg).map_err(|e| Failure::usage(format!("config echo: {e}")))?;
    write_text(&out.join("config.toml"), &echo)?;
    Ok(out)
}

fn write_text(path: &Path, text: &str) -> Outcome {
    std::fs::write(path, text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn fmt(v: f64) -> String {
    format!("{v:.12e}")
}

fn entry(k: &str, v: impl ToString) -> (String, String) {
    (k.to_string(), v.to_string())
}

fn study_name(cfg: &RunConfig) -> &'static str {
    match cfg.mapping.study {
        Study::Identity => "identity",
        Study::Radius => "radius",
        Study::Distance => "distance",
        Study::Both => "both",
    }
}

fn common_summary(cfg: &RunConfig, command: &str, setup: &Setup) -> Vec<(String, String)> {
    vec![
        entry("command", command),
        entry("study", study_name(cfg)),
        entry("config", "config.toml"),
        entry("elements", setup.mesh.n_elements()),
        entry("degree", setup.mesh.degree()),
        entry("dofs", setup.solver.op.n_state()),
        entry("operator_terms", setup.solver.op.n_terms()),
        entry("parameters", setup.grids.len()),
    ]
}

/// Writes the error CSVs of a report and returns its summary entries.
fn write_report(out: &Path, eval: &Evaluator<'_>, sol: &SeparatedSolution, report: &ErrorReport) -> Result<Vec<(String, String)>, Failure> {
    write_errors_vs_modes(out.join("errors_vs_modes.csv"), std::slice::from_ref(report))?;
    write_error_map(out.join("error_map.csv"), &report.final_drag)?;
    write_pointwise_error(out.join("pointwise_error.csv"), &report.final_drag)?;
    let surface = eval.response_surface(sol)?;
    write_drag_surface(out.join("drag_surface.csv"), &[&surface])?;
    let mut s = report_summary(report);
    s.push(entry("reference_solves", eval.cache.len()));
    Ok(s)
}

fn check_mu(mu: Option<&[f64]>, n_pa: usize) -> Result<Vec<f64>, Failure> {
    let mu = mu.ok_or_else(|| Failure::usage("--mu is required"))?;
    if mu.len() != n_pa {
        return Err(Failure::usage(format!(
            "--mu has {} values, the study has {n_pa} parameters",
            mu.len()
        )));
    }
    Ok(mu.to_vec())
}

pub fn solve(cfg: &RunConfig, mu: Option<&[f64]>) -> Outcome {
    let setup = Setup::new(cfg)?;
    let mu = check_mu(mu, setup.grids.len())?;
    let out = prepare_out(cfg)?;
    let sol = setup.solver.solve(&mu)?;
    let mapping = setup.solver.mapping();
    export_fields(out.join("fields.csv"), &setup.mesh, &setup.solver.disc().dofs, &sol.state, Some((mapping, &mu)))?;
    let quality = scaled_jacobian_quality(&setup.mesh, mapping, &mu)?;
    let min_quality = quality.iter().copied().fold(f64::INFINITY, f64::min);
    let mut summary = common_summary(cfg, "solve", &setup);
    summary.push(entry("mu", mu.iter().map(|v| fmt(*v)).collect::<Vec<_>>().join(",")));
    summary.push(entry("min_quality", fmt(min_quality)));
    let mut line = String::from("drag");
    for s in [Surface::Left, Surface::Right, Surface::Total] {
        let f = setup.functional(s).eval(&mu, &sol.state);
        summary.push(entry(&format!("force_{}_x", s.name()), fmt(f[0])));
        summary.push(entry(&format!("force_{}_y", s.name()), fmt(f[1])));
        let _ = write!(line, " {}={:.10e}", s.name(), f[0]);
    }
    summary.push(entry("solves", setup.solver.solve_count()));
    write_summary(out.join("summary.txt"), &summary)?;
    println!("{line}");
    log::info!("command=solve solves={}", setup.solver.solve_count());
    Ok(())
}

pub fn apriori(cfg: &RunConfig) -> Outcome {
    let setup = Setup::new(cfg)?;
    let out = prepare_out(cfg)?;
    let acfg = cfg.apriori.to_config();
    let run = run_apriori_logged(&setup.solver.op, setup.grids.clone(), &acfg)?;
    let sol = &run.solution;
    sol.save(out.join("solution.pgd"))?;
    let mut log = String::from("mode,iteration,sigma_hat,spatial_correction,parametric_correction\n");
    for r in &run.log {
        let _ = writeln!(
            log,
            "{},{},{},{},{}",
            r.mode,
            r.iteration,
            fmt(r.sigma_hat),
            fmt(r.spatial_correction),
            fmt(r.parametric_correction)
        );
    }
    write_text(&out.join("iterations.csv"), &log)?;
    log::info!("method=apriori modes={} solves={}", sol.n_modes(), sol.solves);
    let mut summary = common_summary(cfg, "apriori", &setup);
    summary.push(entry("n_i", acfg.n_i));
    summary.push(entry("modes", sol.n_modes()));
    summary.push(entry("solves", sol.solves));
    summary.push(entry("zero_mode", run.zero_mode));
    if cfg.analysis.errors {
        let eval = setup.evaluator(cfg, &setup.grids);
        let cumulative = run.cumulative_solves();
        let report = eval.report(sol, &format!("n_i={}", acfg.n_i), Some(&cumulative))?;
        summary.extend(write_report(&out, &eval, sol, &report)?);
    }
    Ok(write_summary(out.join("summary.txt"), &summary)?)
}

pub fn aposteriori(cfg: &RunConfig) -> Outcome {
    let setup = Setup::new(cfg)?;
    let out = prepare_out(cfg)?;
    let level = cfg.aposteriori.level;
    let plan = SnapshotPlan::new(&setup.grids, level.plan_level())?;
    let tensor = compute_snapshots(&plan, &setup.solver, setup.par)?;
    tensor.save(out.join("snapshots.tensor"))?;
    let before = setup.solver.solve_count();
    let sep = separate(&tensor, &cfg.aposteriori.to_config(setup.par))?;
    let separation_solves = setup.solver.solve_count() - before;
    let sol = &sep.solution;
    sol.save(out.join("solution.pgd"))?;
    let mut res = String::from("mode,residual_norm,als_iterations\n");
    for (i, (r, it)) in sep.residual_norms.iter().zip(&sep.iterations).enumerate() {
        let _ = writeln!(res, "{},{},{}", i + 1, fmt(*r), it);
    }
    write_text(&out.join("separation.csv"), &res)?;
    log::info!(
        "method=aposteriori snapshots={} modes={} separation_solves={separation_solves}",
        tensor.solves,
        sol.n_modes()
    );
    let mut summary = common_summary(cfg, "aposteriori", &setup);
    summary.push(entry("level", plan_level_name(level)));
    summary.push(entry("snapshots", tensor.n_snapshots()));
    summary.push(entry("modes", sol.n_modes()));
    summary.push(entry("solves", sol.solves));
    summary.push(entry("separation_solves", separation_solves));
    if cfg.analysis.errors {
        let eval = setup.evaluator(cfg, &setup.grids);
        let report = eval.report(sol, &format!("n_s={}", tensor.n_snapshots()), None)?;
        summary.extend(write_report(&out, &eval, sol, &report)?);
    }
    Ok(write_summary(out.join("summary.txt"), &summary)?)
}

fn plan_level_name(l: Level) -> &'static str {
    l.plan_level().name()
}

fn input_solution(cfg: &RunConfig) -> Result<SeparatedSolution, Failure> {
    let p = cfg
        .compress
        .input
        .as_ref()
        .ok_or_else(|| Failure::usage("no input solution: pass --input or set compress.input"))?;
    Ok(SeparatedSolution::load(p)?)
}

/// Largest deviation between two solutions over all parametric nodes,
/// relative to the largest nodal norm of `a`.
fn nodal_deviation(a: &SeparatedSolution, b: &SeparatedSolution) -> f64 {
    let shape: Vec<usize> = a.grids.iter().map(ParametricGrid::n_nodes).collect();
    let mut dev: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for p in 0..shape.iter().product() {
        let idx = pgdflow::pgd::tensor::multi_index(p, &shape);
        let x = a.evaluate_at_nodes(&idx);
        let y = b.evaluate_at_nodes(&idx);
        scale = scale.max(x.iter().map(|v| v * v).sum::<f64>().sqrt());
        dev = dev.max(x.iter().zip(&y).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt());
    }
    if scale > 0.0 {
        dev / scale
    } else {
        dev
    }
}

pub fn compress(cfg: &RunConfig) -> Outcome {
    let sol = input_solution(cfg)?;
    let out = prepare_out(cfg)?;
    let c = compress_solution(&sol, cfg.compress.tol)?;
    c.save(out.join("compressed.pgd"))?;
    let dev = nodal_deviation(&sol, &c);
    log::info!("command=compress modes_in={} modes_out={} deviation={dev:e}", sol.n_modes(), c.n_modes());
    let summary = vec![
        entry("command", "compress"),
        entry("config", "config.toml"),
        entry("input_provenance", sol.provenance.name()),
        entry("output_provenance", c.provenance.name()),
        entry("tol", fmt(cfg.compress.tol)),
        entry("modes_in", sol.n_modes()),
        entry("modes_out", c.n_modes()),
        entry("solves", c.solves),
        entry("max_nodal_deviation", fmt(dev)),
    ];
    Ok(write_summary(out.join("summary.txt"), &summary)?)
}

pub fn compare(cfg: &RunConfig) -> Outcome {
    let specs = cfg
        .compare
        .methods
        .iter()
        .map(|s| MethodSpec::parse(s))
        .collect::<Result<Vec<_>, _>>()
        .map_err(Failure::usage)?;
    if specs.len() < 2 {
        return Err(Failure::usage(format!(
            "compare needs at least two methods, got {}",
            specs.len()
        )));
    }
    let setup = Setup::new(cfg)?;
    let out = prepare_out(cfg)?;
    let eval = setup.evaluator(cfg, &setup.grids);
    let mut reports = Vec::new();
    for spec in &specs {
        let report = match *spec {
            MethodSpec::Apriori { n_i } => {
                let mut acfg = cfg.apriori.to_config();
                acfg.n_i = n_i;
                let run = run_apriori_logged(&setup.solver.op, setup.grids.clone(), &acfg)?;
                run.solution.save(out.join(format!("apriori_n_i{n_i}.pgd")))?;
                let cumulative = run.cumulative_solves();
                eval.report(&run.solution, &format!("n_i={n_i}"), Some(&cumulative))?
            }
            MethodSpec::Aposteriori { level } => {
                let plan = SnapshotPlan::new(&setup.grids, level.plan_level())?;
                let tensor = compute_snapshots(&plan, &setup.solver, setup.par)?;
                let sep = separate(&tensor, &cfg.aposteriori.to_config(setup.par))?;
                let name = plan_level_name(level);
                sep.solution.save(out.join(format!("aposteriori_{name}.pgd")))?;
                eval.report(&sep.solution, &format!("n_s={}", tensor.n_snapshots()), None)?
            }
        };
        log::info!(
            "compare method={} setting={} modes={} solves={} E_D={:e}",
            report.method,
            report.setting,
            report.modes(),
            report.solves,
            report.drag.last().copied().unwrap_or(1.0)
        );
        reports.push(report);
    }
    let cmp = comparison_report(&reports);
    write_comparison(out.join("comparison.csv"), &cmp)?;
    write_matched_accuracy(out.join("matched_accuracy.csv"), &cmp)?;
    write_errors_vs_modes(out.join("errors_vs_modes.csv"), &reports)?;
    let mut summary = common_summary(cfg, "compare", &setup);
    summary.push(entry("runs", reports.len()));
    for r in &cmp.rows {
        summary.push(entry(
            &format!("run_{}_{}", r.method, r.setting),
            format!("modes={} solves={} E_D={}", r.modes, r.solves, fmt(r.e_d)),
        ));
    }
    for m in &cmp.matched {
        let v = match &m.best {
            Some((s, k, set)) => format!("solves={s} modes={k} setting={set}"),
            None => "unreached".into(),
        };
        summary.push(entry(&format!("matched_{}_{:e}", m.method, m.target), v));
    }
    summary.push(entry("reference_solves", eval.cache.len()));
    Ok(write_summary(out.join("summary.txt"), &summary)?)
}

pub fn surface(cfg: &RunConfig, mu: Option<&[f64]>) -> Outcome {
    let sol = input_solution(cfg)?;
    let setup = Setup::new(cfg)?;
    if sol.n_pa() != setup.grids.len() || sol.n_dofs() != setup.solver.op.n_state() {
        return Err(Failure::usage(format!(
            "the solution ({} parameters, {} dofs) does not match the configured study ({} parameters, {} dofs)",
            sol.n_pa(),
            sol.n_dofs(),
            setup.grids.len(),
            setup.solver.op.n_state()
        )));
    }
    let out = prepare_out(cfg)?;
    let surfaces = [Surface::Left, Surface::Right, Surface::Total]
        .map(|s| pgdflow::analysis::drag_response_surface(&sol, &setup.functional(s), s))
        .into_iter()
        .collect::<pgdflow::Result<Vec<_>>>()?;
    write_drag_surface(out.join("drag_surface.csv"), &surfaces.iter().collect::<Vec<_>>())?;
    let mut summary = common_summary(cfg, "surface", &setup);
    summary.push(entry("modes", sol.n_modes()));
    summary.push(entry("provenance", sol.provenance.name()));
    if let Some(mu) = mu {
        let mu = check_mu(Some(mu), sol.n_pa())?;
        let mut line = String::from("drag");
        for s in &surfaces {
            let f = s.eval(&mu)?;
            summary.push(entry(&format!("force_{}_x", s.surface.name()), fmt(f[0])));
            summary.push(entry(&format!("force_{}_y", s.surface.name()), fmt(f[1])));
            let _ = write!(line, " {}={:.10e}", s.surface.name(), f[0]);
        }
        println!("{line}");
    }
    if cfg.analysis.errors {
        let eval = setup.evaluator(cfg, &sol.grids);
        let report = eval.report(&sol, sol.provenance.name(), None)?;
        write_errors_vs_modes(out.join("errors_vs_modes.csv"), std::slice::from_ref(&report))?;
        write_error_map(out.join("error_map.csv"), &report.final_drag)?;
        write_pointwise_error(out.join("pointwise_error.csv"), &report.final_drag)?;
        summary.extend(report_summary(&report));
        summary.push(entry("reference_solves", eval.cache.len()));
    }
    Ok(write_summary(out.join("summary.txt"), &summary)?)
}

pub fn gen_mesh(cfg: &RunConfig) -> Outcome {
    let geom = SwimmerGeometry::default();
    let out = prepare_out(cfg)?;
    let mesh = build_mesh(cfg, &geom)?;
    write_mesh(&mesh, out.join("swimmer.mesh"))?;
    let summary = vec![
        entry("command", "gen-mesh"),
        entry("config", "config.toml"),
        entry("mesh", "swimmer.mesh"),
        entry("elements", mesh.n_elements()),
        entry("degree", mesh.degree()),
        entry("nodes", mesh.nodes().len()),
    ];
    Ok(write_summary(out.join("summary.txt"), &summary)?)
}
