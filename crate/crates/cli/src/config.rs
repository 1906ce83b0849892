//! Run configuration: an optional TOML file overlaid by command-line flags.
//!
//! ```toml
//! seed = 7
//! out = "runs/demo"
//!
//! [problem]
//! rho = 0.5
//! p = "inf"
//! penalize_diagonal = false
//! max_sweeps = 10
//! tol = 1e-6
//! newton_iters = 10
//!
//! [data]
//! inputs = ["task1.csv", "task2.csv"]
//! kind = "samples"
//! center = true
//!
//! [synth]
//! variables = 50
//! tasks = 5
//! density = 0.1
//! samples = 50
//! repetitions = 50
//!
//! [grid]
//! size = 20
//! min_ratio = 0.01
//! ```
//!
//! Relative paths in the file are resolved against the file's directory.

use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use mtggm::{NormOrder, ProblemSpec};
use serde::Deserialize;

use crate::error::{HarnessError, Result};
use crate::matrix_csv::MatrixRole;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub problem: ProblemSection,
    #[serde(default)]
    pub data: DataSection,
    #[serde(default)]
    pub synth: SynthSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub eval: EvalSection,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub rho: Option<f64>,
    pub p: Option<NormOrder>,
    pub penalize_diagonal: Option<bool>,
    pub max_sweeps: Option<usize>,
    pub tol: Option<f64>,
    pub newton_iters: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    pub inputs: Option<Vec<PathBuf>>,
    pub kind: Option<MatrixRole>,
    pub center: Option<bool>,
    /// `T⁽ᵏ⁾` for covariance inputs.
    pub sample_counts: Option<Vec<f64>>,
    /// Ground-truth precision matrices, one per task, for scoring sweeps.
    pub truth: Option<Vec<PathBuf>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSection {
    pub variables: Option<usize>,
    pub tasks: Option<usize>,
    pub density: Option<f64>,
    pub samples: Option<usize>,
    pub repetitions: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    /// Explicit ρ values; overrides `size` and `min_ratio`.
    pub values: Option<Vec<f64>>,
    pub size: Option<usize>,
    pub min_ratio: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalSection {
    pub estimates: Option<Vec<PathBuf>>,
    pub truth: Option<Vec<PathBuf>>,
    pub threshold: Option<f64>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        let mut cfg: ConfigFile =
            toml::from_str(&text).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        let fix_all = |v: &mut Option<Vec<PathBuf>>| v.iter_mut().flatten().for_each(fix);
        self.out.iter_mut().for_each(fix);
        fix_all(&mut self.data.inputs);
        fix_all(&mut self.data.truth);
        fix_all(&mut self.eval.estimates);
        fix_all(&mut self.eval.truth);
    }
}

/// Flags shared by every subcommand; each mirrors a config field.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// TOML configuration file; flags given here override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory for this run.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Regularization level ρ.
    #[arg(long)]
    pub rho: Option<f64>,
    /// Norm across tasks: 2 or inf.
    #[arg(long = "p")]
    pub p: Option<NormOrder>,
    #[arg(long)]
    pub penalize_diagonal: bool,
    #[arg(long)]
    pub max_sweeps: Option<usize>,
    /// Relative objective change that ends the solve.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub newton_iters: Option<usize>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct DataArgs {
    /// One file per task.
    #[arg(long = "input", num_args = 1..)]
    pub inputs: Vec<PathBuf>,
    #[arg(long, value_enum)]
    pub input_kind: Option<MatrixRole>,
    /// Use raw second moments instead of centering sample inputs.
    #[arg(long)]
    pub no_center: bool,
    /// Sample count per covariance input (one value, or one per task).
    #[arg(long = "sample-count", num_args = 1..)]
    pub sample_counts: Vec<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct GridArgs {
    /// Explicit ρ grid.
    #[arg(long = "rho-grid", num_args = 1.., value_delimiter = ',')]
    pub rho_grid: Vec<f64>,
    /// Number of log-spaced ρ values when no explicit grid is given.
    #[arg(long)]
    pub grid_size: Option<usize>,
    /// Smallest grid ρ as a fraction of the full-screening level.
    #[arg(long)]
    pub grid_min_ratio: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub variables: Option<usize>,
    #[arg(long)]
    pub tasks: Option<usize>,
    #[arg(long)]
    pub density: Option<f64>,
    /// Samples per task.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub repetitions: Option<usize>,
    #[arg(long)]
    pub no_center: bool,
}

#[derive(Debug, Clone, Default, Args)]
pub struct EvalArgs {
    /// Estimated precision matrices, one per task.
    #[arg(long = "estimate", num_args = 1..)]
    pub estimates: Vec<PathBuf>,
    /// Ground-truth precision matrices, one per task.
    #[arg(long = "truth", num_args = 1..)]
    pub truth: Vec<PathBuf>,
    /// Edge-call threshold; defaults to 1e-6 of the largest estimate entry.
    #[arg(long)]
    pub threshold: Option<f64>,
}

/// How the ρ values of a sweep are chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum GridChoice {
    Explicit(Vec<f64>),
    /// `size` log-spaced values from `min_ratio·ρ_max` to `ρ_max`, where
    /// `ρ_max` is the level at which every block is screened.
    Relative {
        size: usize,
        min_ratio: f64,
    },
}

impl GridChoice {
    pub const DEFAULT_SIZE: usize = 20;
    pub const DEFAULT_MIN_RATIO: f64 = 0.01;

    pub fn values(&self, rho_max: f64) -> Vec<f64> {
        match self {
            Self::Explicit(v) => v.clone(),
            Self::Relative { size, min_ratio } => mtggm::synth::log_grid(min_ratio * rho_max, rho_max, *size),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub inputs: Vec<PathBuf>,
    pub kind: MatrixRole,
    pub center: bool,
    pub sample_counts: Option<Vec<f64>>,
    pub spec: ProblemSpec,
    pub seed: u64,
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub fit: FitConfig,
    pub grid: GridChoice,
    pub truth: Option<Vec<PathBuf>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub variables: usize,
    pub tasks: usize,
    pub density: f64,
    pub samples: usize,
    pub repetitions: usize,
    pub center: bool,
    pub grid: GridChoice,
    /// Template; its `rho` is replaced by each grid value.
    pub spec: ProblemSpec,
    pub seed: u64,
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub estimates: Vec<PathBuf>,
    pub truth: Vec<PathBuf>,
    pub threshold: Option<f64>,
    pub out: Option<PathBuf>,
}

fn load_file(common: &CommonArgs) -> Result<ConfigFile> {
    common
        .config
        .as_deref()
        .map(ConfigFile::load)
        .transpose()
        .map(Option::unwrap_or_default)
}

fn required<T>(value: Option<T>, name: &str) -> Result<T> {
    value.ok_or_else(|| HarnessError::Config(format!("missing `{name}` (flag or config field)")))
}

fn spec_from(common: &CommonArgs, file: &ProblemSection, rho: f64) -> Result<ProblemSpec> {
    let norm = common.p.or(file.p).unwrap_or(NormOrder::LInf);
    let mut spec = ProblemSpec::new(rho, norm)
        .with_penalized_diagonal(common.penalize_diagonal || file.penalize_diagonal.unwrap_or(false));
    if let Some(v) = common.max_sweeps.or(file.max_sweeps) {
        spec = spec.with_max_sweeps(v);
    }
    if let Some(v) = common.tol.or(file.tol) {
        spec = spec.with_objective_tol(v);
    }
    if let Some(v) = common.newton_iters.or(file.newton_iters) {
        spec = spec.with_newton_iters(v);
    }
    spec.validate()?;
    Ok(spec)
}

fn nonempty(flags: &[PathBuf], file: &Option<Vec<PathBuf>>) -> Option<Vec<PathBuf>> {
    if flags.is_empty() {
        file.clone().filter(|v| !v.is_empty())
    } else {
        Some(flags.to_vec())
    }
}

fn grid_from(args: &GridArgs, file: &GridSection) -> Result<GridChoice> {
    let explicit = if args.rho_grid.is_empty() {
        file.values.clone()
    } else {
        Some(args.rho_grid.clone())
    };
    if let Some(values) = explicit {
        if values.is_empty() || values.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(HarnessError::Config("rho grid values must be positive".into()));
        }
        return Ok(GridChoice::Explicit(values));
    }
    let size = args.grid_size.or(file.size).unwrap_or(GridChoice::DEFAULT_SIZE);
    let min_ratio = args
        .grid_min_ratio
        .or(file.min_ratio)
        .unwrap_or(GridChoice::DEFAULT_MIN_RATIO);
    if size == 0 || !(min_ratio > 0.0 && min_ratio <= 1.0) {
        return Err(HarnessError::Config(
            "grid size must be ≥ 1 and min_ratio in (0, 1]".into(),
        ));
    }
    Ok(GridChoice::Relative { size, min_ratio })
}

fn fit_parts(common: &CommonArgs, data: &DataArgs, file: &ConfigFile, rho: f64) -> Result<FitConfig> {
    let inputs = required(nonempty(&data.inputs, &file.data.inputs), "input")?;
    let sample_counts = if data.sample_counts.is_empty() {
        file.data.sample_counts.clone()
    } else {
        Some(data.sample_counts.clone())
    };
    Ok(FitConfig {
        kind: data.input_kind.or(file.data.kind).unwrap_or(MatrixRole::Samples),
        center: !data.no_center && file.data.center.unwrap_or(true),
        sample_counts,
        spec: spec_from(common, &file.problem, rho)?,
        seed: common.seed.or(file.seed).unwrap_or(0),
        out: required(common.out.clone().or(file.out.clone()), "out")?,
        inputs,
    })
}

impl FitConfig {
    pub fn resolve(common: &CommonArgs, data: &DataArgs) -> Result<Self> {
        let file = load_file(common)?;
        let rho = required(common.rho.or(file.problem.rho), "rho")?;
        fit_parts(common, data, &file, rho)
    }
}

impl SweepConfig {
    pub fn resolve(common: &CommonArgs, data: &DataArgs, grid: &GridArgs, truth: &[PathBuf]) -> Result<Self> {
        let file = load_file(common)?;
        // ρ comes from the grid; the spec's own value is a placeholder
        let fit = fit_parts(common, data, &file, common.rho.or(file.problem.rho).unwrap_or(1.0))?;
        Ok(Self {
            fit,
            grid: grid_from(grid, &file.grid)?,
            truth: nonempty(truth, &file.data.truth),
        })
    }
}

impl SynthConfig {
    pub fn resolve(common: &CommonArgs, synth: &SynthArgs, grid: &GridArgs) -> Result<Self> {
        let file = load_file(common)?;
        let s = &file.synth;
        let cfg = Self {
            variables: synth.variables.or(s.variables).unwrap_or(50),
            tasks: synth.tasks.or(s.tasks).unwrap_or(5),
            density: synth.density.or(s.density).unwrap_or(0.1),
            samples: synth.samples.or(s.samples).unwrap_or(50),
            repetitions: synth.repetitions.or(s.repetitions).unwrap_or(50),
            center: !synth.no_center && file.data.center.unwrap_or(true),
            grid: grid_from(grid, &file.grid)?,
            spec: spec_from(common, &file.problem, common.rho.or(file.problem.rho).unwrap_or(1.0))?,
            seed: common.seed.or(file.seed).unwrap_or(0),
            out: required(common.out.clone().or(file.out.clone()), "out")?,
        };
        if cfg.variables < 2 || cfg.tasks < 1 || cfg.samples < 2 || cfg.repetitions < 1 {
            return Err(HarnessError::Config(
                "synth needs variables ≥ 2, tasks ≥ 1, samples ≥ 2 and repetitions ≥ 1".into(),
            ));
        }
        Ok(cfg)
    }
}

impl EvalConfig {
    pub fn resolve(common: &CommonArgs, args: &EvalArgs) -> Result<Self> {
        let file = load_file(common)?;
        let cfg = Self {
            estimates: required(nonempty(&args.estimates, &file.eval.estimates), "estimate")?,
            truth: required(nonempty(&args.truth, &file.eval.truth), "truth")?,
            threshold: args.threshold.or(file.eval.threshold),
            out: common.out.clone().or(file.out.clone()),
        };
        if cfg.estimates.len() != cfg.truth.len() {
            return Err(HarnessError::Config(format!(
                "{} estimates for {} truth matrices",
                cfg.estimates.len(),
                cfg.truth.len()
            )));
        }
        Ok(cfg)
    }
}
