//! Run configuration: a TOML file with one section per concern. Every key
//! has a default, so an empty file describes the radius study.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use pgdflow::hdg::Surface;
use pgdflow::mapping::SwimmerStudy;
use pgdflow::pgd::{AposterioriConfig, AprioriConfig, ParametricInit, ParametricTest, PlanLevel};

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub mesh: MeshConfig,
    pub problem: ProblemConfig,
    pub mapping: MappingConfig,
    pub apriori: AprioriSection,
    pub aposteriori: AposterioriSection,
    pub compress: CompressSection,
    pub compare: CompareSection,
    pub analysis: AnalysisSection,
    pub run: RunSection,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct MeshConfig {
    /// Mesh file; the swimmer mesh is generated when absent.
    pub path: Option<PathBuf>,
    /// Element degree of the generated mesh.
    pub k: usize,
    /// Uniform refinement factor of the generated mesh.
    pub refine: usize,
}

impl Default for MeshConfig {
    fn default() -> Self {
        MeshConfig {
            path: None,
            k: 3,
            refine: 1,
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryData {
    /// Unit inflow at the inlet, no slip on the spheres.
    Swimmer,
    /// Unit horizontal velocity on every Dirichlet face.
    Constant,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemConfig {
    pub nu: f64,
    pub ell: f64,
    pub tau_scale: f64,
    pub boundary: BoundaryData,
    /// Spatial quadrature degree (default `2k + 2`).
    pub quad_degree: Option<usize>,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        ProblemConfig {
            nu: 1.0,
            ell: 1.0,
            tau_scale: 10.0,
            boundary: BoundaryData::Swimmer,
            quad_degree: None,
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum Study {
    /// No deformation; one dummy parameter over `i1`.
    Identity,
    Radius,
    Distance,
    Both,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct MappingConfig {
    pub study: Study,
    pub i1: [f64; 2],
    pub i2: [f64; 2],
    /// Radius parameter of the distance-only study.
    pub mu1: f64,
    pub elements1: usize,
    pub elements2: usize,
    /// Polynomial degree of the parametric grids.
    pub degree: usize,
    /// Gauss points per parametric element.
    pub gauss: usize,
}

impl Default for MappingConfig {
    fn default() -> Self {
        MappingConfig {
            study: Study::Radius,
            i1: [-1.0, 1.0],
            i2: [-2.0, -1.0],
            mu1: 0.0,
            elements1: 10,
            elements2: 20,
            degree: 4,
            gauss: 5,
        }
    }
}

impl MappingConfig {
    pub fn swimmer_study(&self) -> Option<SwimmerStudy> {
        match self.study {
            Study::Identity => None,
            Study::Radius => Some(SwimmerStudy::Radius),
            Study::Distance => Some(SwimmerStudy::Distance),
            Study::Both => Some(SwimmerStudy::Both),
        }
    }

    /// `(interval, elements)` of every active parameter.
    pub fn parameters(&self) -> Vec<([f64; 2], usize)> {
        match self.study {
            Study::Identity | Study::Radius => vec![(self.i1, self.elements1)],
            Study::Distance => vec![(self.i2, self.elements2)],
            Study::Both => vec![(self.i1, self.elements1), (self.i2, self.elements2)],
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum InitChoice {
    Constant,
    Previous,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum TestChoice {
    Galerkin,
    Residual,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct AprioriSection {
    pub eta_star: f64,
    pub n_i: usize,
    pub max_modes: usize,
    pub init: InitChoice,
    pub test: TestChoice,
    pub correction_tol: Option<f64>,
}

impl Default for AprioriSection {
    fn default() -> Self {
        let d = AprioriConfig::default();
        AprioriSection {
            eta_star: d.eta_star,
            n_i: d.n_i,
            max_modes: d.max_modes,
            init: InitChoice::Constant,
            test: TestChoice::Galerkin,
            correction_tol: None,
        }
    }
}

impl AprioriSection {
    pub fn to_config(&self) -> AprioriConfig {
        AprioriConfig {
            eta_star: self.eta_star,
            n_i: self.n_i,
            max_modes: self.max_modes,
            init: match self.init {
                InitChoice::Constant => ParametricInit::Constant,
                InitChoice::Previous => ParametricInit::Previous,
            },
            test: match self.test {
                TestChoice::Galerkin => ParametricTest::Galerkin,
                TestChoice::Residual => ParametricTest::Residual,
            },
            correction_tol: self.correction_tol,
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Vertices,
    Half,
    All,
}

impl Level {
    pub fn plan_level(self) -> PlanLevel {
        match self {
            Level::Vertices => PlanLevel::Vertices,
            Level::Half => PlanLevel::HalfNodes,
            Level::All => PlanLevel::AllNodes,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct AposterioriSection {
    pub eta_star: f64,
    pub eta_sigma: f64,
    pub max_iterations: usize,
    pub max_modes: usize,
    pub level: Level,
}

impl Default for AposterioriSection {
    fn default() -> Self {
        let d = AposterioriConfig::default();
        AposterioriSection {
            eta_star: d.eta_star,
            eta_sigma: d.eta_sigma,
            max_iterations: d.n_i,
            max_modes: d.max_modes,
            level: Level::Half,
        }
    }
}

impl AposterioriSection {
    pub fn to_config(&self, par: pgdflow::Parallelism) -> AposterioriConfig {
        AposterioriConfig {
            eta_star: self.eta_star,
            eta_sigma: self.eta_sigma,
            n_i: self.max_iterations,
            max_modes: self.max_modes,
            par,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct CompressSection {
    /// Separated solution to compress or evaluate.
    pub input: Option<PathBuf>,
    pub tol: f64,
}

impl Default for CompressSection {
    fn default() -> Self {
        CompressSection {
            input: None,
            tol: 1e-10,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct CompareSection {
    /// Runs to compare: `apriori:<n_i>` or `aposteriori:<vertices|half|all>`.
    pub methods: Vec<String>,
}

impl Default for CompareSection {
    fn default() -> Self {
        CompareSection {
            methods: vec![
                "apriori:1".into(),
                "apriori:2".into(),
                "aposteriori:vertices".into(),
                "aposteriori:half".into(),
                "aposteriori:all".into(),
            ],
        }
    }
}

/// One run of a comparison.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MethodSpec {
    Apriori { n_i: usize },
    Aposteriori { level: Level },
}

impl MethodSpec {
    pub fn parse(s: &str) -> Result<Self, String> {
        let (m, arg) = s.split_once(':').ok_or_else(|| format!("method `{s}`: expected `name:setting`"))?;
        match m.trim() {
            "apriori" => arg
                .trim()
                .parse()
                .ok()
                .filter(|&n| n >= 1)
                .map(|n_i| MethodSpec::Apriori { n_i })
                .ok_or_else(|| format!("method `{s}`: n_i must be a positive integer")),
            "aposteriori" => match arg.trim() {
                "vertices" => Ok(MethodSpec::Aposteriori { level: Level::Vertices }),
                "half" => Ok(MethodSpec::Aposteriori { level: Level::Half }),
                "all" => Ok(MethodSpec::Aposteriori { level: Level::All }),
                other => Err(format!("method `{s}`: unknown snapshot level `{other}`")),
            },
            other => Err(format!("method `{s}`: unknown method `{other}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum SurfaceChoice {
    Left,
    Right,
    Total,
}

impl SurfaceChoice {
    pub fn surface(self) -> Surface {
        match self {
            SurfaceChoice::Left => Surface::Left,
            SurfaceChoice::Right => Surface::Right,
            SurfaceChoice::Total => Surface::Total,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisSection {
    /// Measure the runs against full-order reference solves.
    pub errors: bool,
    /// Surface whose force defines the drag.
    pub surface: SurfaceChoice,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        AnalysisSection {
            errors: true,
            surface: SurfaceChoice::Total,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub out: PathBuf,
    /// Worker threads; 0 uses all cores, 1 runs sequentially.
    pub threads: usize,
    /// Seed of randomised fixtures.
    pub seed: u64,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            out: PathBuf::from("out"),
            threads: 0,
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let cfg: RunConfig = toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(1..=4).contains(&self.mesh.k) {
            return Err(format!("mesh.k = {} must lie in 1..=4", self.mesh.k));
        }
        if self.mesh.refine == 0 {
            return Err("mesh.refine must be at least 1".into());
        }
        for (name, i) in [("mapping.i1", self.mapping.i1), ("mapping.i2", self.mapping.i2)] {
            if !i[0].is_finite() || !i[1].is_finite() || i[0] >= i[1] {
                return Err(format!("{name} = [{}, {}] must be a nonempty interval", i[0], i[1]));
            }
        }
        if self.mapping.elements1 == 0 || self.mapping.elements2 == 0 {
            return Err("parametric element counts must be at least 1".into());
        }
        if self.mapping.degree == 0 || self.mapping.gauss == 0 {
            return Err("mapping.degree and mapping.gauss must be at least 1".into());
        }
        if !(self.problem.nu > 0.0 && self.problem.ell > 0.0 && self.problem.tau_scale > 0.0) {
            return Err("problem.nu, problem.ell and problem.tau_scale must be positive".into());
        }
        self.apriori.to_config().validate().map_err(|e| e.to_string())?;
        self.aposteriori
            .to_config(pgdflow::Parallelism::Sequential)
            .validate()
            .map_err(|e| e.to_string())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c: RunConfig = toml::from_str("").unwrap();
        assert_eq!(c, RunConfig::default());
        c.validate().unwrap();
    }

    #[test]
    fn echo_round_trips() {
        let mut c = RunConfig::default();
        c.mapping.study = Study::Both;
        c.mesh.path = Some("a.mesh".into());
        let text = toml::to_string(&c).unwrap();
        let back: RunConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<RunConfig>("[mesh]\ndegree = 3\n").is_err());
    }

    #[test]
    fn method_specs() {
        assert_eq!(MethodSpec::parse("apriori:2"), Ok(MethodSpec::Apriori { n_i: 2 }));
        assert_eq!(
            MethodSpec::parse("aposteriori:half"),
            Ok(MethodSpec::Aposteriori { level: Level::Half })
        );
        assert!(MethodSpec::parse("apriori:0").is_err());
        assert!(MethodSpec::parse("svd:1").is_err());
        assert!(MethodSpec::parse("apriori").is_err());
    }

    #[test]
    fn invalid_values_are_reported() {
        let mut c = RunConfig::default();
        c.mesh.k = 5;
        assert!(c.validate().is_err());
        let mut c = RunConfig::default();
        c.mapping.i2 = [1.0, 1.0];
        assert!(c.validate().is_err());
    }
}
