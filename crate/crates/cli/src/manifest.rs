use mtggm::{FitReport, ProblemSpec};
use serde::{Deserialize, Serialize};

use crate::error::ErrorRecord;

/// Version of the JSON layouts in `schema/`.
pub const SCHEMA_VERSION: &str = "1";
pub const FIT_REPORT_FILE: &str = "fit_report.json";
pub const MANIFEST_FILE: &str = "run_manifest.json";

pub fn precision_file_name(task: usize) -> String {
    format!("task_{task}_precision.csv")
}

/// Provenance of one run: what went in, with which settings, and what came
/// out. Contains no timestamps or absolute output paths, so identical runs
/// produce identical manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: String,
    pub tool: ToolInfo,
    pub command: String,
    pub status: RunStatus,
    pub spec: ProblemSpec,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub inputs: Vec<InputFingerprint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dimensions: Option<Dimensions>,
    /// File names relative to the output directory.
    pub artifacts: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<ReportSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synth: Option<SynthSummary>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<FailureNote>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorRecord>,
}

impl RunManifest {
    pub fn new(command: &str, spec: ProblemSpec, seed: u64) -> Self {
        Self {
            schema_version: SCHEMA_VERSION.to_string(),
            tool: ToolInfo::current(),
            command: command.to_string(),
            status: RunStatus::Ok,
            spec,
            seed,
            inputs: Vec::new(),
            dimensions: None,
            artifacts: Vec::new(),
            report: None,
            synth: None,
            failures: Vec::new(),
            error: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolInfo {
    pub name: String,
    pub version: String,
}

impl ToolInfo {
    pub fn current() -> Self {
        Self {
            name: "mtggm".to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Ok,
    /// Some artifacts were written, but the run did not finish cleanly.
    Partial,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputFingerprint {
    pub path: String,
    pub sha256: String,
    pub role: crate::matrix_csv::MatrixRole,
    pub rows: usize,
    pub columns: usize,
    pub sample_count: f64,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub symmetrized: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dimensions {
    pub variables: usize,
    pub tasks: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub sweeps_run: usize,
    pub converged: bool,
    pub final_objective: Option<f64>,
    pub screened_blocks: usize,
    pub newton_fallbacks: usize,
    pub inverse_recoveries: usize,
}

impl From<&FitReport> for ReportSummary {
    fn from(r: &FitReport) -> Self {
        Self {
            sweeps_run: r.sweeps_run,
            converged: r.converged,
            final_objective: r.objective_trace.last().copied(),
            screened_blocks: r.screened_blocks.len(),
            newton_fallbacks: r.newton_fallbacks,
            inverse_recoveries: r.inverse_recoveries,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSummary {
    pub variables: usize,
    pub tasks: usize,
    pub density: f64,
    pub samples: usize,
    pub repetitions: usize,
    pub center: bool,
    /// Explicit grid values, or absent when the grid is relative to each
    /// repetition's full-screening level.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_min_ratio: Option<f64>,
    /// Mean AUC over repetitions that produced one.
    pub mean_auc: Option<f64>,
}

/// A recoverable failure inside a run that otherwise continued.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureNote {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repetition: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    pub message: String,
}
