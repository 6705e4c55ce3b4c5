//! TOML experiment configuration.
//!
//! ```toml
//! output_dir = "out/fig3_top"
//! emit_plots = true
//!
//! [de]
//! kappa1 = -1.0
//! kappa0 = 8.0
//!
//! [ansatz]
//! depth = 2
//!
//! [search]
//! p_c = 4.0
//! seed = 1
//!
//! [oracle]
//! f0 = -1.0
//! ```

use std::path::{Path, PathBuf};

use quva_core::ansatz::{AnsatzLayout, AnsatzSpec};
use quva_core::expectation::{MeasurementConfig, MixedInjection};
use quva_core::gpr::{HyperparameterMode, Kernel, SearchConfig};
use quva_core::oracle::{OdeSettings, PotentialScaling, ShootingSettings};
use quva_core::pde::{DEProblem, PotentialSpec};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "yes")]
    pub emit_plots: bool,
    pub de: DeSection,
    #[serde(default)]
    pub potential: PotentialSection,
    pub ansatz: AnsatzSection,
    pub search: SearchSection,
    #[serde(default)]
    pub measurement: MeasurementSection,
    #[serde(default)]
    pub oracle: OracleSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeSection {
    #[serde(default = "one")]
    pub kappa2: f64,
    pub kappa1: f64,
    pub kappa0: f64,
    #[serde(default)]
    pub v_max: f64,
    #[serde(default)]
    pub kappa_n: f64,
    #[serde(default = "three")]
    pub n_qubits: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PotentialShape {
    #[default]
    Harmonic,
    Custom,
}

/// `harmonic` scales by `de.v_max`; `custom` takes raw diagonal `values`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct PotentialSection {
    #[serde(default)]
    pub kind: PotentialShape,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnsatzSection {
    pub depth: usize,
    #[serde(default = "six")]
    pub layout: AnsatzLayout,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum HyperparameterChoice {
    #[default]
    MaximizeEvidence,
    Default,
    Fixed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSection {
    pub p_c: f64,
    #[serde(default = "one_u64")]
    pub seed: u64,
    #[serde(default = "six_hundred")]
    pub n_random_init: usize,
    #[serde(default = "six_hundred")]
    pub n_guided: usize,
    #[serde(default = "five_hundred")]
    pub candidate_pool_size: usize,
    #[serde(default = "twenty_five")]
    pub refit_every: usize,
    #[serde(default = "two_fifty_six")]
    pub max_training_points: usize,
    #[serde(default)]
    pub hyperparameters: HyperparameterChoice,
    /// Required when `hyperparameters = "fixed"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<Kernel>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ModeChoice {
    #[default]
    Exact,
    Shots,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementSection {
    #[serde(default)]
    pub mode: ModeChoice,
    #[serde(default = "ten_thousand")]
    pub shots: u64,
    /// Shot-sampling seed; defaults to the search seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shot_seed: Option<u64>,
    #[serde(default)]
    pub injection: MixedInjection,
}

impl Default for MeasurementSection {
    fn default() -> Self {
        Self { mode: ModeChoice::Exact, shots: ten_thousand(), shot_seed: None, injection: MixedInjection::Direct }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSection {
    #[serde(default = "one")]
    pub f0: f64,
    #[serde(default)]
    pub potential_scaling: PotentialScaling,
}

impl Default for OracleSection {
    fn default() -> Self {
        Self { f0: 1.0, potential_scaling: PotentialScaling::default() }
    }
}

/// Settings for `correlation <config>`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrelationConfig {
    #[serde(default = "default_correlation_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "yes")]
    pub emit_plots: bool,
    #[serde(default = "three")]
    pub n_qubits: usize,
    #[serde(default = "six")]
    pub layout: AnsatzLayout,
    #[serde(default = "default_depths")]
    pub depths: Vec<usize>,
    #[serde(default = "five_hundred")]
    pub n_samples: usize,
    #[serde(default = "one_u64")]
    pub seed: u64,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out/run")
}
fn default_correlation_dir() -> PathBuf {
    PathBuf::from("out/correlation")
}
fn default_depths() -> Vec<usize> {
    vec![0, 1, 2, 3]
}
fn yes() -> bool {
    true
}
fn one() -> f64 {
    1.0
}
fn one_u64() -> u64 {
    1
}
fn three() -> usize {
    3
}
fn six() -> AnsatzLayout {
    AnsatzLayout::SixParam
}
fn twenty_five() -> usize {
    25
}
fn two_fifty_six() -> usize {
    256
}
fn five_hundred() -> usize {
    500
}
fn six_hundred() -> usize {
    600
}
fn ten_thousand() -> u64 {
    10_000
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn parse<T: for<'de> Deserialize<'de>>(text: &str, origin: &str) -> Result<T, CliError> {
    toml::from_str(text).map_err(|e| CliError::Config(format!("{origin}: {e}")))
}

/// Resolved inputs for one search run.
#[derive(Clone, Debug)]
pub struct RunPlan {
    pub problem: DEProblem,
    pub potential: PotentialSpec,
    pub ansatz: AnsatzSpec,
    pub search: SearchConfig,
    pub measurement: MeasurementConfig,
    pub f0: f64,
    pub shooting: ShootingSettings,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        Self::from_toml(&read(path)?, &path.display().to_string())
    }

    pub fn from_toml(text: &str, origin: &str) -> Result<Self, CliError> {
        let cfg: Self = parse(text, origin)?;
        cfg.plan()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn apply_seed(&mut self, seed: u64) {
        self.search.seed = seed;
    }

    pub fn apply_shots(&mut self, shots: u64) {
        self.measurement.mode = ModeChoice::Shots;
        self.measurement.shots = shots;
    }

    /// Builds and validates the library inputs, naming the offending field on
    /// failure.
    pub fn plan(&self) -> Result<RunPlan, CliError> {
        let field = |name: &str, e: quva_core::QuvaError| CliError::Config(format!("{name}: {e}"));
        let de = &self.de;
        let problem = DEProblem {
            kappa2: de.kappa2,
            kappa1: de.kappa1,
            kappa0: de.kappa0,
            v_max: de.v_max,
            kappa_n: de.kappa_n,
            n_qubits: de.n_qubits,
            depth: self.ansatz.depth,
        };
        problem.validate().map_err(|e| field("de", e))?;

        let potential = match (self.potential.kind, &self.potential.values) {
            (PotentialShape::Harmonic, None) => PotentialSpec::harmonic(de.v_max),
            (PotentialShape::Harmonic, Some(_)) => {
                return Err(CliError::Config("potential.values: only allowed with kind = \"custom\"".into()))
            }
            (PotentialShape::Custom, Some(values)) => PotentialSpec::custom(values.clone()),
            (PotentialShape::Custom, None) => {
                return Err(CliError::Config("potential.values: required with kind = \"custom\"".into()))
            }
        };
        potential.diag(de.n_qubits).map_err(|e| field("potential.values", e))?;

        let ansatz = AnsatzSpec::new(de.n_qubits, self.ansatz.depth, self.ansatz.layout).map_err(|e| field("ansatz", e))?;

        let s = &self.search;
        let hyperparameters = match (s.hyperparameters, s.kernel) {
            (HyperparameterChoice::MaximizeEvidence, _) => HyperparameterMode::MaximizeEvidence,
            (HyperparameterChoice::Default, _) => HyperparameterMode::Default,
            (HyperparameterChoice::Fixed, Some(k)) => HyperparameterMode::Fixed(k),
            (HyperparameterChoice::Fixed, None) => {
                return Err(CliError::Config("search.kernel: required with hyperparameters = \"fixed\"".into()))
            }
        };
        let search = SearchConfig {
            n_random_init: s.n_random_init,
            n_guided: s.n_guided,
            p_c: s.p_c,
            candidate_pool_size: s.candidate_pool_size,
            seed: s.seed,
            refit_every: s.refit_every,
            max_training_points: s.max_training_points,
            hyperparameters,
        };
        search.validate().map_err(|e| field("search", e))?;

        let m = &self.measurement;
        let measurement = match m.mode {
            ModeChoice::Exact => MeasurementConfig::exact(),
            ModeChoice::Shots => MeasurementConfig::shots(m.shots, m.shot_seed.unwrap_or(s.seed)),
        }
        .with_injection(m.injection);
        measurement.validate().map_err(|e| field("measurement.shots", e))?;

        if !self.oracle.f0.is_finite() || self.oracle.f0 == 0.0 {
            return Err(CliError::Config("oracle.f0: must be finite and nonzero".into()));
        }
        let shooting = ShootingSettings {
            ode: OdeSettings { scaling: self.oracle.potential_scaling, ..OdeSettings::default() },
            ..ShootingSettings::default()
        };
        Ok(RunPlan { problem, potential, ansatz, search, measurement, f0: self.oracle.f0, shooting })
    }
}

impl CorrelationConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let cfg: Self = parse(&read(path)?, &path.display().to_string())?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.depths.is_empty() {
            return Err(CliError::Config("depths: at least one depth is required".into()));
        }
        if self.n_samples < 100 {
            return Err(CliError::Config(format!("n_samples: at least 100 required, got {}", self.n_samples)));
        }
        AnsatzSpec::new(self.n_qubits, 0, self.layout).map_err(|e| CliError::Config(format!("n_qubits: {e}")))?;
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}
