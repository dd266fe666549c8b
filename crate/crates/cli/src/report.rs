//! Serialized results. Reports and grids are pretty-printed JSON tagged by
//! `kind`; wall-clock timings go to a separate `timings.json` so that the
//! result documents themselves are reproducible byte for byte.

use std::fs;
use std::path::Path;

use photon_maxent::{MaxEntState, MomentEstimate, ObservationLevel};
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, StateSpec};

pub const REPORT_FILE: &str = "report.json";
pub const GRID_FILE: &str = "grid.json";
pub const TIMINGS_FILE: &str = "timings.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Success,
    Unphysical,
    NotConverged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelReport {
    pub eta: f64,
    pub shots: u64,
    /// Absent in noiseless mode, where `frequency` is set directly.
    pub off_count: Option<u64>,
    pub frequency: f64,
    pub exact_off_probability: f64,
    /// `|p_exact - p_model|` at the true moments.
    pub model_bias: f64,
    /// Cubic expansion term at the true moments.
    pub third_order_term: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub n1: f64,
    pub n2: f64,
    pub loglik: f64,
    pub converged: bool,
    pub on_boundary: bool,
    pub iterations: usize,
    pub gradient_norm: f64,
    pub physical: bool,
    pub mandel_q: f64,
}

impl From<&MomentEstimate> for MomentReport {
    fn from(e: &MomentEstimate) -> Self {
        Self {
            n1: e.n1,
            n2: e.n2,
            loglik: e.loglik,
            converged: e.converged,
            on_boundary: e.on_boundary,
            iterations: e.iterations,
            gradient_norm: e.gradient_norm,
            physical: e.is_physical(),
            mandel_q: e.mandel_q(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxEntReport {
    pub observation_level: String,
    pub lambdas: Vec<f64>,
    pub point_mass: Option<usize>,
    pub cutoff: usize,
    pub log_partition: f64,
    pub targets: Vec<f64>,
    pub residuals: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub tail_mass: Option<f64>,
    pub truncation_dependent: bool,
}

impl From<&MaxEntState> for MaxEntReport {
    fn from(s: &MaxEntState) -> Self {
        let observation_level = match &s.level {
            ObservationLevel::Moments { order } => format!("moments({order})"),
            ObservationLevel::Povm { efficiencies } => format!("povm({})", efficiencies.len()),
        };
        Self {
            observation_level,
            lambdas: s.lambdas.clone(),
            point_mass: s.point_mass,
            cutoff: s.cutoff,
            log_partition: s.log_partition,
            targets: s.targets.clone(),
            residuals: s.residuals.clone(),
            converged: s.converged,
            iterations: s.iterations,
            tail_mass: s.tail_mass.filter(|t| t.is_finite()),
            truncation_dependent: s.truncation_dependent,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub status: Status,
    pub message: Option<String>,
    pub config: ExperimentConfig,
    pub seed: u64,
    pub rng_algorithm: String,
    pub channels: Vec<ChannelReport>,
    pub moment_estimate: Option<MomentReport>,
    pub maxent: Option<MaxEntReport>,
    pub true_distribution: Vec<f64>,
    pub inferred_distribution: Option<Vec<f64>>,
    pub fidelity: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellStatus {
    Solved,
    /// `N2 < N1^2`; fidelity forced to 0.
    Unphysical,
    /// `N2 >= N1^2`, but the variance is below `f (1 - f)` (`f` the
    /// fractional part of `N1`), which no distribution on the integers
    /// reaches; masked like `Unphysical`.
    LatticeInfeasible,
    /// Physical but the maximum-entropy solve failed; fidelity 0.
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub n1_offset: f64,
    pub n2_offset: f64,
    pub n1: f64,
    pub n2: f64,
    /// Some photon-number distribution has these moments; false is the mask.
    pub physical: bool,
    pub status: CellStatus,
    pub fidelity: f64,
    pub message: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessGrid {
    pub state: StateSpec,
    pub base_n1: f64,
    pub base_n2: f64,
    pub n1_offsets: Vec<f64>,
    pub n2_offsets: Vec<f64>,
    /// Row-major: `n1_offsets` index major, `n2_offsets` index minor.
    pub cells: Vec<GridCell>,
}

impl RobustnessGrid {
    pub fn cell(&self, i: usize, j: usize) -> &GridCell {
        &self.cells[i * self.n2_offsets.len() + j]
    }
}

/// Anything the `figures` subcommand can read back.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
#[allow(clippy::large_enum_variant)]
pub enum Stored {
    ExperimentReport(ExperimentReport),
    RobustnessGrid(RobustnessGrid),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub stages: Vec<(String, f64)>,
}

impl Timings {
    pub fn record(&mut self, stage: &str, seconds: f64) {
        self.stages.push((stage.to_owned(), seconds));
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> std::io::Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, to_json(value))
}

pub fn read_stored(path: &Path) -> anyhow::Result<Stored> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}
