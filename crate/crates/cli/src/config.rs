//! Experiment configuration, read from TOML.
//!
//! ```toml
//! estimator = "two_step_moments"   # or "full_povm"
//! noiseless = false
//!
//! [state]
//! kind = "coherent"                # coherent | fock | thermal | explicit
//! mean = 1.0                       # coherent / thermal
//! # photons = 2                    # fock
//! # probs = [0.5, 0.5]             # explicit
//!
//! [design]
//! efficiencies = [0.01, 0.02, 0.03, 0.04, 0.05]
//! shots_per_channel = 1000000
//! seed = 1
//!
//! [solver]                         # every key optional
//! maxlik_tol = 1e-9
//!
//! [sweep]                          # relative offsets, used by `sweep`
//! n1_offsets = [-0.05, -0.025, 0.0, 0.025, 0.05]
//! n2_offsets = [-0.05, -0.025, 0.0, 0.025, 0.05]
//! ```

use std::path::{Path, PathBuf};

use photon_maxent::states::DEFAULT_TAIL_TOL;
use photon_maxent::{
    Efficiency, ExperimentDesign, MaxEntOptions, MaxLikOptions, PhotonDistribution,
};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("reading config {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("parsing config {path}: {source}")]
    Parse {
        path: PathBuf,
        source: toml::de::Error,
    },
    #[error("invalid config: {0}")]
    Invalid(String),
}

impl From<photon_maxent::Error> for ConfigError {
    fn from(e: photon_maxent::Error) -> Self {
        Self::Invalid(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub state: StateSpec,
    pub design: DesignConfig,
    #[serde(default)]
    pub estimator: Estimator,
    #[serde(default)]
    pub noiseless: bool,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    /// Not echoed into reports, so output location never changes content.
    #[serde(default = "default_output_dir", skip_serializing)]
    pub output_dir: PathBuf,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StateSpec {
    Coherent { mean: f64 },
    Fock { photons: usize },
    Thermal { mean: f64 },
    Explicit { probs: Vec<f64> },
}

impl StateSpec {
    pub fn distribution(&self, tail_tol: f64) -> Result<PhotonDistribution, ConfigError> {
        Ok(match self {
            Self::Coherent { mean } => PhotonDistribution::coherent(*mean, tail_tol)?,
            Self::Fock { photons } => PhotonDistribution::fock(*photons),
            Self::Thermal { mean } => PhotonDistribution::thermal(*mean, tail_tol)?,
            Self::Explicit { probs } => PhotonDistribution::from_probs(probs.clone(), 0.0)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignConfig {
    pub efficiencies: Vec<f64>,
    pub shots_per_channel: u64,
    pub seed: u64,
}

impl DesignConfig {
    /// `count` efficiencies evenly spaced over `[lo, hi]`.
    pub fn evenly_spaced(lo: f64, hi: f64, count: usize, shots: u64, seed: u64) -> Self {
        let efficiencies = (0..count)
            .map(|i| {
                if count == 1 {
                    lo
                } else {
                    lo + (hi - lo) * i as f64 / (count - 1) as f64
                }
            })
            .collect();
        Self {
            efficiencies,
            shots_per_channel: shots,
            seed,
        }
    }

    pub fn build(&self) -> Result<ExperimentDesign, ConfigError> {
        let effs = self
            .efficiencies
            .iter()
            .map(|&e| Efficiency::new(e))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ExperimentDesign::new(
            effs,
            self.shots_per_channel,
            self.seed,
        )?)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    /// Moments by maximum likelihood, then two-moment maximum entropy.
    #[default]
    TwoStepMoments,
    /// Maximum entropy directly on the measured off frequencies.
    FullPovm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub maxlik_tol: f64,
    pub maxlik_max_iter: usize,
    pub maxent_tol: f64,
    pub maxent_max_iter: usize,
    pub boundary_tol: f64,
    pub tail_tol: f64,
    pub max_cutoff: usize,
    /// Fock cutoff of the POVM-level estimator.
    pub povm_cutoff: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let ml = MaxLikOptions::default();
        let me = MaxEntOptions::default();
        Self {
            maxlik_tol: ml.tol,
            maxlik_max_iter: ml.max_iter,
            maxent_tol: me.tol,
            maxent_max_iter: me.max_iter,
            boundary_tol: me.boundary_tol,
            tail_tol: DEFAULT_TAIL_TOL,
            max_cutoff: me.max_cutoff,
            povm_cutoff: 30,
        }
    }
}

impl SolverConfig {
    pub fn maxlik(&self) -> MaxLikOptions {
        MaxLikOptions {
            tol: self.maxlik_tol,
            max_iter: self.maxlik_max_iter,
        }
    }

    pub fn maxent(&self) -> MaxEntOptions {
        MaxEntOptions {
            tol: self.maxent_tol,
            max_iter: self.maxent_max_iter,
            boundary_tol: self.boundary_tol,
            tail_tol: self.tail_tol,
            max_cutoff: self.max_cutoff,
        }
    }
}

pub const DEFAULT_OFFSETS: [f64; 5] = [-0.05, -0.025, 0.0, 0.025, 0.05];

/// Relative offsets applied to the true `(N1, N2)` by the robustness sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub n1_offsets: Vec<f64>,
    pub n2_offsets: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            n1_offsets: DEFAULT_OFFSETS.to_vec(),
            n2_offsets: DEFAULT_OFFSETS.to_vec(),
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        for &o in self.n1_offsets.iter().chain(&self.n2_offsets) {
            if !(-0.5..=0.5).contains(&o) {
                return Err(ConfigError::Invalid(format!(
                    "sweep offset {o} outside [-0.5, 0.5]"
                )));
            }
        }
        if self.n1_offsets.is_empty() || self.n2_offsets.is_empty() {
            return Err(ConfigError::Invalid("empty sweep axis".into()));
        }
        Ok(())
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_owned(),
            source,
        })?;
        let config: Self = toml::from_str(&text).map_err(|source| ConfigError::Parse {
            path: path.to_owned(),
            source,
        })?;
        config.validate()?;
        Ok(config)
    }

    /// Coherent `mean`, five efficiencies over 1..5 %, 1e6 shots.
    pub fn reference(state: StateSpec, seed: u64) -> Self {
        Self {
            state,
            design: DesignConfig::evenly_spaced(0.01, 0.05, 5, 1_000_000, seed),
            estimator: Estimator::default(),
            noiseless: false,
            solver: SolverConfig::default(),
            sweep: SweepConfig::default(),
            output_dir: default_output_dir(),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.state.distribution(self.solver.tail_tol)?;
        self.design.build()?;
        self.sweep.validate()
    }
}
