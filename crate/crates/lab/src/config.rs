//! Experiment configuration files (TOML).
//!
//! ```toml
//! experiment = "sector-zero"      # optional when given on the command line
//! threads = "auto"                # or a positive integer
//!
//! [model]
//! n_internal = 8
//! seed = 1
//! alpha0 = { kind = "ginibre", sigma = 0.8825 }
//! alpha1 = { kind = "ginibre", sigma = 0.7788 }
//! # onsite = { kind = "gue", scale = 1.0 }   # Wegner orbital variant
//!
//! [params]
//! steps = 200000
//! realizations = 8
//! ```
//!
//! Every parameter has a default; the resolved values are echoed into each
//! `summary.json` and hashed into the `#` header of every CSV.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use chiral_core::linalg::{CMatrix, C64};
use chiral_core::model::{DistributionSpec, ModelConfig, OnsiteSpec};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::LabError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Lyapunov,
    SectorZero,
    FmDecay,
    Apriori,
    CombesThomas,
    ZeroEnergyCheck,
    ChartCheck,
    Bloch,
    Fermi,
    Convergence,
    SqrtWSweep,
}

impl Experiment {
    pub const ALL: [Experiment; 11] = [
        Experiment::Lyapunov,
        Experiment::SectorZero,
        Experiment::FmDecay,
        Experiment::Apriori,
        Experiment::CombesThomas,
        Experiment::ZeroEnergyCheck,
        Experiment::ChartCheck,
        Experiment::Bloch,
        Experiment::Fermi,
        Experiment::Convergence,
        Experiment::SqrtWSweep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Lyapunov => "lyapunov",
            Experiment::SectorZero => "sector-zero",
            Experiment::FmDecay => "fm-decay",
            Experiment::Apriori => "apriori",
            Experiment::CombesThomas => "combes-thomas",
            Experiment::ZeroEnergyCheck => "zero-energy-check",
            Experiment::ChartCheck => "chart-check",
            Experiment::Bloch => "bloch",
            Experiment::Fermi => "fermi",
            Experiment::Convergence => "convergence",
            Experiment::SqrtWSweep => "sqrt-w-sweep",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self, LabError> {
        Experiment::ALL.into_iter().find(|e| e.name() == s).ok_or_else(|| {
            let known: Vec<&str> = Experiment::ALL.iter().map(|e| e.name()).collect();
            LabError::config(format!("unknown experiment {s:?} (known: {})", known.join(", ")))
        })
    }
}

fn default_threshold() -> f64 {
    DistributionSpec::DEFAULT_THRESHOLD
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum LawSection {
    Ginibre {
        sigma: f64,
        #[serde(default = "default_threshold")]
        resample_threshold: f64,
    },
    DiagonalUniform {
        radius_min: f64,
        radius_max: f64,
        #[serde(default = "default_threshold")]
        resample_threshold: f64,
    },
    ShiftedGinibre {
        sigma: f64,
        base_re: Vec<Vec<f64>>,
        #[serde(default)]
        base_im: Option<Vec<Vec<f64>>>,
        #[serde(default = "default_threshold")]
        resample_threshold: f64,
    },
}

impl LawSection {
    pub fn ginibre(sigma: f64) -> Self {
        LawSection::Ginibre { sigma, resample_threshold: default_threshold() }
    }

    pub fn to_spec(&self) -> Result<DistributionSpec, LabError> {
        let mut spec = match self {
            LawSection::Ginibre { sigma, .. } => DistributionSpec::ginibre(*sigma),
            LawSection::DiagonalUniform { radius_min, radius_max, .. } => {
                DistributionSpec::diagonal_uniform(*radius_min, *radius_max)
            }
            LawSection::ShiftedGinibre { sigma, base_re, base_im, .. } => {
                let n = base_re.len();
                let im = base_im.clone().unwrap_or_else(|| vec![vec![0.0; n]; n]);
                if base_re.iter().chain(&im).any(|r| r.len() != n) || im.len() != n {
                    return Err(LabError::config("shifted-ginibre base must be square with matching re/im"));
                }
                let base = CMatrix::from_fn(n, n, |i, j| C64::new(base_re[i][j], im[i][j]));
                DistributionSpec::shifted_ginibre(base, *sigma)
            }
        };
        spec.resample_threshold = match self {
            LawSection::Ginibre { resample_threshold, .. }
            | LawSection::DiagonalUniform { resample_threshold, .. }
            | LawSection::ShiftedGinibre { resample_threshold, .. } => *resample_threshold,
        };
        Ok(spec)
    }

    pub fn ginibre_sigma(&self) -> Option<f64> {
        match self {
            LawSection::Ginibre { sigma, .. } => Some(*sigma),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum OnsiteSection {
    Gue { scale: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub n_internal: usize,
    #[serde(default)]
    pub seed: u64,
    pub alpha0: LawSection,
    pub alpha1: LawSection,
    #[serde(default)]
    pub onsite: Option<OnsiteSection>,
}

impl ModelSection {
    pub fn ginibre_pair(n_internal: usize, sigma0: f64, sigma1: f64, seed: u64) -> Self {
        Self {
            n_internal,
            seed,
            alpha0: LawSection::ginibre(sigma0),
            alpha1: LawSection::ginibre(sigma1),
            onsite: None,
        }
    }

    pub fn to_model(&self) -> Result<ModelConfig, LabError> {
        let model = ModelConfig {
            n_internal: self.n_internal,
            alpha0: self.alpha0.to_spec()?,
            alpha1: self.alpha1.to_spec()?,
            onsite: self.onsite.as_ref().map(|OnsiteSection::Gue { scale }| OnsiteSpec::Gue { scale: *scale }),
            seed: self.seed,
        };
        model.validate().map_err(|e| LabError::config(format!("model: {e}")))?;
        Ok(model)
    }

    /// The same laws at another internal dimension.
    pub fn with_n(&self, n_internal: usize) -> Result<ModelConfig, LabError> {
        Self { n_internal, ..self.clone() }.to_model()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Threads {
    Auto,
    Count(usize),
}

impl Threads {
    pub fn resolve(self) -> usize {
        match self {
            Threads::Count(n) => n,
            Threads::Auto => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
        }
    }
}

impl FromStr for Threads {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self, LabError> {
        if s == "auto" {
            return Ok(Threads::Auto);
        }
        match s.parse::<usize>() {
            Ok(n) if n > 0 => Ok(Threads::Count(n)),
            _ => Err(LabError::config(format!("threads must be \"auto\" or a positive integer, got {s:?}"))),
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ThreadsRaw {
    Count(i64),
    Word(String),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    experiment: Option<String>,
    threads: Option<ThreadsRaw>,
    output_dir: Option<String>,
    model: ModelSection,
    #[serde(default)]
    params: toml::Table,
}

fn default_steps(n: usize) -> u64 {
    if n <= 4 {
        100_000
    } else {
        10_000
    }
}

fn check(ok: bool, msg: &str) -> Result<(), LabError> {
    if ok {
        Ok(())
    } else {
        Err(LabError::config(msg.to_string()))
    }
}

fn check_steps(steps: u64) -> Result<(), LabError> {
    check(steps >= 1000 && steps % 2 == 0, "steps must be even and at least 1000")
}

fn check_s(s: f64) -> Result<(), LabError> {
    check(s > 0.0 && s < 1.0, "s must lie in (0, 1)")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LyapunovParams {
    pub lambda_grid: Vec<f64>,
    pub z_im: f64,
    /// 0 selects 10⁵ for N ≤ 4 and 10⁴ above.
    pub steps: u64,
    pub realizations: usize,
    pub k_sigma: f64,
}

impl Default for LyapunovParams {
    fn default() -> Self {
        Self { lambda_grid: vec![1.0], z_im: 0.0, steps: 0, realizations: 8, k_sigma: 3.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SectorParams {
    /// Two-site steps; 0 selects the N-dependent default.
    pub steps: u64,
    pub realizations: usize,
    pub k_sigma: f64,
}

impl Default for SectorParams {
    fn default() -> Self {
        Self { steps: 0, realizations: 8, k_sigma: 3.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FmDecayParams {
    pub lambda: f64,
    pub eta: f64,
    pub s: f64,
    pub window_len: usize,
    pub realizations: usize,
    pub fit_min: f64,
    /// Negative selects 0.9 × the largest distance.
    pub fit_max: f64,
    pub bootstrap: usize,
    /// Also estimate the typical decay and γ_N(λ) for comparison.
    pub compare_lyapunov: bool,
    pub lyapunov_steps: u64,
    pub lyapunov_realizations: usize,
}

impl Default for FmDecayParams {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            eta: 0.0,
            s: 0.5,
            window_len: 64,
            realizations: 200,
            fit_min: 10.0,
            fit_max: -1.0,
            bootstrap: 200,
            compare_lyapunov: false,
            lyapunov_steps: 100_000,
            lyapunov_realizations: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AprioriParams {
    /// (re, im) pairs.
    pub z_list: Vec<[f64; 2]>,
    pub s: f64,
    pub realizations: usize,
    pub window_len: usize,
}

impl Default for AprioriParams {
    fn default() -> Self {
        Self {
            z_list: (1..=6).map(|k| [0.0, 10f64.powi(-k)]).collect(),
            s: 0.5,
            realizations: 500,
            window_len: chiral_core::greens::APRIORI_DEFAULT_WINDOW,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CombesThomasParams {
    pub energy: f64,
    pub etas: Vec<f64>,
    pub s: f64,
    pub window_len: usize,
    pub realizations: usize,
}

impl Default for CombesThomasParams {
    fn default() -> Self {
        Self { energy: 1.0, etas: vec![0.25, 0.5, 1.0, 2.0], s: 0.5, window_len: 64, realizations: 200 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ZeroEnergyParams {
    /// Even window lengths L; windows are [1, L].
    pub window_lens: Vec<usize>,
    /// Internal dimensions; empty means the model's.
    pub n_values: Vec<usize>,
    pub samples: usize,
    /// Realization whose full Green's matrix goes to greens_dump.csv.
    pub dump_index: u64,
}

impl Default for ZeroEnergyParams {
    fn default() -> Self {
        Self { window_lens: vec![8], n_values: Vec::new(), samples: 10, dump_index: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChartParams {
    pub samples: usize,
    pub n_values: Vec<usize>,
    /// Energies cycled over the samples; must be non-zero.
    pub lambdas: Vec<f64>,
}

impl Default for ChartParams {
    fn default() -> Self {
        Self { samples: 1000, n_values: vec![1, 2, 3], lambdas: vec![-2.0, -0.5, 0.7, 1.0, 3.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BlochParams {
    pub samples: usize,
    pub n_values: Vec<usize>,
    pub k_grid: usize,
    /// Grids for the unit chain A = B = 1.
    pub unit_grids: Vec<usize>,
}

impl Default for BlochParams {
    fn default() -> Self {
        Self { samples: 1000, n_values: vec![1, 2], k_grid: 256, unit_grids: vec![256, 1024, 4096] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FermiParams {
    pub window_start: i64,
    pub window_len: usize,
    pub fermi_energy: f64,
    pub index: u64,
}

impl Default for FermiParams {
    fn default() -> Self {
        Self { window_start: 0, window_len: 128, fermi_energy: 0.0, index: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvergenceParams {
    pub z_re: f64,
    pub z_im: f64,
    pub half_widths: Vec<i64>,
    pub index: u64,
}

impl Default for ConvergenceParams {
    fn default() -> Self {
        Self { z_re: 0.0, z_im: 0.5, half_widths: vec![8, 16, 32, 64, 128], index: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SqrtWParams {
    pub w_list: Vec<usize>,
    /// Two-site steps per realization.
    pub steps: u64,
    pub realizations: usize,
    pub k_sigma: f64,
}

impl Default for SqrtWParams {
    fn default() -> Self {
        Self { w_list: vec![2, 4, 8], steps: 100_000, realizations: 8, k_sigma: 3.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Params {
    Lyapunov(LyapunovParams),
    SectorZero(SectorParams),
    FmDecay(FmDecayParams),
    Apriori(AprioriParams),
    CombesThomas(CombesThomasParams),
    ZeroEnergyCheck(ZeroEnergyParams),
    ChartCheck(ChartParams),
    Bloch(BlochParams),
    Fermi(FermiParams),
    Convergence(ConvergenceParams),
    SqrtWSweep(SqrtWParams),
}

fn parse_params<P: DeserializeOwned>(table: toml::Table) -> Result<P, LabError> {
    toml::Value::Table(table).try_into().map_err(|e| LabError::config(format!("params: {e}")))
}

impl Params {
    fn parse(experiment: Experiment, table: toml::Table) -> Result<Self, LabError> {
        Ok(match experiment {
            Experiment::Lyapunov => Params::Lyapunov(parse_params(table)?),
            Experiment::SectorZero => Params::SectorZero(parse_params(table)?),
            Experiment::FmDecay => Params::FmDecay(parse_params(table)?),
            Experiment::Apriori => Params::Apriori(parse_params(table)?),
            Experiment::CombesThomas => Params::CombesThomas(parse_params(table)?),
            Experiment::ZeroEnergyCheck => Params::ZeroEnergyCheck(parse_params(table)?),
            Experiment::ChartCheck => Params::ChartCheck(parse_params(table)?),
            Experiment::Bloch => Params::Bloch(parse_params(table)?),
            Experiment::Fermi => Params::Fermi(parse_params(table)?),
            Experiment::Convergence => Params::Convergence(parse_params(table)?),
            Experiment::SqrtWSweep => Params::SqrtWSweep(parse_params(table)?),
        })
    }

    pub fn default_for(experiment: Experiment) -> Self {
        Self::parse(experiment, toml::Table::new()).expect("defaults deserialize")
    }

    /// Fills N-dependent defaults.
    fn resolve(&mut self, model: &ModelSection) {
        match self {
            Params::Lyapunov(p) if p.steps == 0 => p.steps = default_steps(model.n_internal),
            Params::SectorZero(p) if p.steps == 0 => p.steps = default_steps(model.n_internal),
            Params::ZeroEnergyCheck(p) if p.n_values.is_empty() => p.n_values = vec![model.n_internal],
            _ => {}
        }
    }

    fn validate(&self, model: &ModelSection) -> Result<(), LabError> {
        let chiral = model.onsite.is_none();
        match self {
            Params::Lyapunov(p) => {
                check(!p.lambda_grid.is_empty(), "lambda_grid must not be empty")?;
                check(p.lambda_grid.iter().all(|l| l.is_finite()) && p.z_im.is_finite(), "energies must be finite")?;
                check_steps(p.steps)?;
                check(p.realizations >= 1, "realizations must be at least 1")?;
            }
            Params::SectorZero(p) => {
                check(chiral, "sector-zero needs a chiral model (no onsite block)")?;
                check_steps(p.steps)?;
                check(p.realizations >= 1, "realizations must be at least 1")?;
            }
            Params::FmDecay(p) => {
                check_s(p.s)?;
                check(p.eta >= 0.0 && p.lambda.is_finite(), "need finite lambda and eta >= 0")?;
                check(p.window_len >= 2 && p.realizations >= 1, "window_len >= 2 and realizations >= 1")?;
                check(p.bootstrap >= 2, "bootstrap must be at least 2")?;
                if p.compare_lyapunov {
                    check(p.eta == 0.0 && p.lambda != 0.0, "compare_lyapunov needs eta = 0 and lambda != 0")?;
                    check_steps(p.lyapunov_steps)?;
                    check(p.lyapunov_realizations >= 1, "lyapunov_realizations must be at least 1")?;
                }
            }
            Params::Apriori(p) => {
                check_s(p.s)?;
                check(!p.z_list.is_empty(), "z_list must not be empty")?;
                check(p.z_list.iter().all(|z| z[1] != 0.0), "z values need a non-zero imaginary part")?;
                check(p.realizations >= 1 && p.window_len >= 3, "realizations >= 1 and window_len >= 3")?;
            }
            Params::CombesThomas(p) => {
                check_s(p.s)?;
                check(!p.etas.is_empty() && p.etas.iter().all(|e| *e > 0.0), "etas must be positive")?;
                check(p.window_len >= 2 && p.realizations >= 1, "window_len >= 2 and realizations >= 1")?;
            }
            Params::ZeroEnergyCheck(p) => {
                check(chiral, "zero-energy-check needs a chiral model")?;
                check(!p.window_lens.is_empty(), "window_lens must not be empty")?;
                check(p.window_lens.iter().all(|l| *l >= 2 && l % 2 == 0), "window lengths must be even and >= 2")?;
                check(p.n_values.iter().all(|n| *n >= 1), "n_values must be positive")?;
                check(p.samples >= 1, "samples must be at least 1")?;
            }
            Params::ChartCheck(p) => {
                check(p.samples >= 1 && !p.n_values.is_empty() && p.n_values.iter().all(|n| *n >= 1), "bad samples/n_values")?;
                check(!p.lambdas.is_empty() && p.lambdas.iter().all(|l| *l != 0.0 && l.is_finite()), "lambdas must be finite and non-zero")?;
            }
            Params::Bloch(p) => {
                check(p.samples >= 1 && !p.n_values.is_empty() && p.n_values.iter().all(|n| *n >= 1), "bad samples/n_values")?;
                check(p.k_grid >= 2 && p.unit_grids.iter().all(|g| *g >= 2), "grids need at least 2 points")?;
            }
            Params::Fermi(p) => {
                check(p.window_len >= 4, "window_len must be at least 4")?;
                check(p.fermi_energy.is_finite(), "fermi_energy must be finite")?;
            }
            Params::Convergence(p) => {
                check(p.z_im != 0.0, "convergence needs z_im != 0")?;
                check(!p.half_widths.is_empty() && p.half_widths.iter().all(|n| *n >= 1), "half widths must be positive")?;
            }
            Params::SqrtWSweep(p) => {
                check(chiral, "sqrt-w-sweep needs a chiral model")?;
                check(!p.w_list.is_empty() && p.w_list.iter().all(|w| *w >= 1), "w_list must hold positive integers")?;
                check_steps(p.steps)?;
                check(p.realizations >= 1, "realizations must be at least 1")?;
            }
        }
        Ok(())
    }

    fn echo(&self) -> serde_json::Value {
        let v = match self {
            Params::Lyapunov(p) => serde_json::to_value(p),
            Params::SectorZero(p) => serde_json::to_value(p),
            Params::FmDecay(p) => serde_json::to_value(p),
            Params::Apriori(p) => serde_json::to_value(p),
            Params::CombesThomas(p) => serde_json::to_value(p),
            Params::ZeroEnergyCheck(p) => serde_json::to_value(p),
            Params::ChartCheck(p) => serde_json::to_value(p),
            Params::Bloch(p) => serde_json::to_value(p),
            Params::Fermi(p) => serde_json::to_value(p),
            Params::Convergence(p) => serde_json::to_value(p),
            Params::SqrtWSweep(p) => serde_json::to_value(p),
        };
        v.expect("params serialize")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub model: ModelSection,
    pub params: Params,
    pub threads: Threads,
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Builds a validated config programmatically.
    pub fn new(model: ModelSection, mut params: Params) -> Result<Self, LabError> {
        params.resolve(&model);
        let experiment = params.experiment();
        model.to_model()?;
        params.validate(&model)?;
        Ok(Self { experiment, model, params, threads: Threads::Auto, output_dir: None })
    }

    /// Parses a config file. `cli_experiment` must agree with the file's `experiment`
    /// key when both are present; `seed` overrides `model.seed`.
    pub fn parse(text: &str, cli_experiment: Option<&str>, seed: Option<u64>) -> Result<Self, LabError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| LabError::config(e.to_string()))?;
        let name = match (cli_experiment, raw.experiment.as_deref()) {
            (Some(a), Some(b)) if a != b => {
                return Err(LabError::config(format!("command line says {a:?} but the config says {b:?}")))
            }
            (Some(a), _) => a.to_string(),
            (None, Some(b)) => b.to_string(),
            (None, None) => return Err(LabError::config("no experiment given")),
        };
        let experiment: Experiment = name.parse()?;
        let threads = match raw.threads {
            None => Threads::Auto,
            Some(ThreadsRaw::Word(w)) => w.parse()?,
            Some(ThreadsRaw::Count(n)) => n.to_string().parse()?,
        };
        let mut model = raw.model;
        if let Some(s) = seed {
            model.seed = s;
        }
        let params = Params::parse(experiment, raw.params)?;
        let mut cfg = Self::new(model, params)?;
        cfg.threads = threads;
        cfg.output_dir = raw.output_dir.map(PathBuf::from);
        Ok(cfg)
    }

    /// Resolved configuration. Threads and output directory are left out because
    /// they do not affect results.
    pub fn echo(&self) -> serde_json::Value {
        serde_json::json!({
            "experiment": self.experiment.name(),
            "model": serde_json::to_value(&self.model).expect("model serializes"),
            "params": self.params.echo(),
        })
    }

    /// SHA-256 over `"blob <len>\0" + canonical JSON echo`, hex encoded.
    pub fn content_hash(&self) -> String {
        let canonical = serde_json::to_string(&self.echo()).expect("echo serializes");
        let mut h = Sha256::new();
        h.update(format!("blob {}\0", canonical.len()).as_bytes());
        h.update(canonical.as_bytes());
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

impl Params {
    pub fn experiment(&self) -> Experiment {
        match self {
            Params::Lyapunov(_) => Experiment::Lyapunov,
            Params::SectorZero(_) => Experiment::SectorZero,
            Params::FmDecay(_) => Experiment::FmDecay,
            Params::Apriori(_) => Experiment::Apriori,
            Params::CombesThomas(_) => Experiment::CombesThomas,
            Params::ZeroEnergyCheck(_) => Experiment::ZeroEnergyCheck,
            Params::ChartCheck(_) => Experiment::ChartCheck,
            Params::Bloch(_) => Experiment::Bloch,
            Params::Fermi(_) => Experiment::Fermi,
            Params::Convergence(_) => Experiment::Convergence,
            Params::SqrtWSweep(_) => Experiment::SqrtWSweep,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
[model]
n_internal = 2
seed = 5
alpha0 = { kind = "ginibre", sigma = 1.0 }
alpha1 = { kind = "ginibre", sigma = 0.5 }
"#;

    #[test]
    fn defaults_are_echoed() {
        let cfg = ExperimentConfig::parse(BASE, Some("sector-zero"), None).unwrap();
        let echo = cfg.echo();
        assert_eq!(echo["params"]["steps"], 100_000);
        assert_eq!(echo["params"]["realizations"], 8);
        assert_eq!(echo["model"]["alpha0"]["resample_threshold"], 1e-8);
    }

    #[test]
    fn seed_override_changes_hash() {
        let a = ExperimentConfig::parse(BASE, Some("lyapunov"), None).unwrap();
        let b = ExperimentConfig::parse(BASE, Some("lyapunov"), Some(6)).unwrap();
        let c = ExperimentConfig::parse(&format!("threads = 3\n{BASE}"), Some("lyapunov"), None).unwrap();
        assert_ne!(a.content_hash(), b.content_hash());
        assert_eq!(a.content_hash(), c.content_hash());
        assert_eq!(c.threads, Threads::Count(3));
        assert_eq!(a.content_hash().len(), 64);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(ExperimentConfig::parse(BASE, Some("nope"), None), Err(LabError::Config(_))));
        assert!(ExperimentConfig::parse(BASE, None, None).is_err());
        let typo = format!("{BASE}\n[params]\nstepz = 4\n");
        assert!(ExperimentConfig::parse(&typo, Some("lyapunov"), None).is_err());
        let odd = format!("{BASE}\n[params]\nsteps = 1001\n");
        assert!(ExperimentConfig::parse(&odd, Some("lyapunov"), None).is_err());
        let clash = format!("experiment = \"bloch\"\n{BASE}");
        assert!(ExperimentConfig::parse(&clash, Some("fermi"), None).is_err());
        let bad_law = BASE.replace("sigma = 0.5", "sigma = -1.0");
        assert!(ExperimentConfig::parse(&bad_law, Some("bloch"), None).is_err());
        let wegner = format!("{BASE}onsite = {{ kind = \"gue\", scale = 1.0 }}\n");
        assert!(ExperimentConfig::parse(&wegner, Some("sector-zero"), None).is_err());
        assert!(ExperimentConfig::parse(&wegner, Some("lyapunov"), None).is_ok());
    }
}
