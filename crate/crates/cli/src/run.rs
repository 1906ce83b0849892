//! The four subcommands as library calls. Each writes into its own output
//! directory and returns the manifest it wrote.

use std::fs;
use std::path::{Path, PathBuf};

use mtggm::bcd::full_screening_rho;
use mtggm::synth::{
    default_threshold, generate_ground_truth, kl_divergence, roc_sweep_with, sample_dataset, support_metrics,
    GroundTruth, RocSweep,
};
use mtggm::{solve, FitReport, PrecisionSet, ProblemSpec, SolveOptions, SymmetricMatrix, TaskSuite};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{EvalConfig, FitConfig, GridChoice, SweepConfig, SynthConfig};
use crate::error::{HarnessError, Result};
use crate::manifest::{
    precision_file_name, Dimensions, FailureNote, InputFingerprint, ReportSummary, RunManifest, RunStatus,
    SynthSummary, FIT_REPORT_FILE, MANIFEST_FILE,
};
use crate::matrix_csv::{format_value, load_matrix_csv, sample_covariance, write_matrix_csv, MatrixRole};

pub const SWEEP_FILE: &str = "sweep.csv";
pub const SWEEP_HEADER: &str = "repetition,rho,sensitivity,specificity,kl_mean";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const AUC_FILE: &str = "auc.csv";
pub const PATH_FILE: &str = "path.csv";
pub const EVAL_FILE: &str = "eval.json";

/// Loads one file per task and turns it into a task suite, recording
/// fingerprints in `manifest`.
pub fn load_suite(cfg: &FitConfig, manifest: &mut RunManifest) -> Result<TaskSuite> {
    let k = cfg.inputs.len();
    if let Some(counts) = &cfg.sample_counts {
        if counts.len() != 1 && counts.len() != k {
            return Err(HarnessError::Config(format!(
                "{} sample counts for {k} inputs",
                counts.len()
            )));
        }
    }
    let mut covs = Vec::with_capacity(k);
    let mut counts = Vec::with_capacity(k);
    for (i, path) in cfg.inputs.iter().enumerate() {
        let file = load_matrix_csv(path, cfg.kind)?;
        let (cov, t) = match cfg.kind {
            MatrixRole::Samples => {
                let (cov, t) = sample_covariance(&file, cfg.center)?;
                (cov, t as f64)
            }
            MatrixRole::Covariance => {
                let t = cfg
                    .sample_counts
                    .as_ref()
                    .map_or(1.0, |c| if c.len() == 1 { c[0] } else { c[i] });
                let cov = SymmetricMatrix::from_upper(file.data.clone()).map_err(|e| HarnessError::Invalid {
                    path: path.clone(),
                    message: e.to_string(),
                })?;
                (cov, t)
            }
        };
        if file.symmetrized {
            eprintln!(
                "warning: {}: symmetrized a slightly asymmetric covariance",
                path.display()
            );
        }
        manifest.inputs.push(InputFingerprint {
            path: path.display().to_string(),
            sha256: file.sha256.clone(),
            role: cfg.kind,
            rows: file.data.nrows(),
            columns: file.data.ncols(),
            sample_count: t,
            symmetrized: file.symmetrized,
        });
        covs.push(cov);
        counts.push(t);
    }
    let suite = TaskSuite::from_parts(covs, &counts)?;
    manifest.dimensions = Some(Dimensions {
        variables: suite.order(),
        tasks: suite.task_count(),
    });
    Ok(suite)
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("artifacts serialize");
    text.push('\n');
    fs::write(path, text).map_err(|e| HarnessError::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| HarnessError::io(path, e))
}

/// Writes `task_<k>_precision.csv` for k = 1..K, the fit report and the
/// manifest (which gains the artifact list). Returns the written paths.
pub fn write_results(
    precs: Option<&PrecisionSet>,
    report: &FitReport,
    manifest: &mut RunManifest,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    create_dir(out_dir)?;
    let mut names = Vec::new();
    if let Some(precs) = precs {
        for (k, m) in precs.matrices().iter().enumerate() {
            let name = precision_file_name(k + 1);
            write_matrix_csv(&out_dir.join(&name), m.as_matrix())?;
            names.push(name);
        }
    }
    write_json(&out_dir.join(FIT_REPORT_FILE), report)?;
    names.push(FIT_REPORT_FILE.to_string());
    names.push(MANIFEST_FILE.to_string());
    manifest.artifacts = names.clone();
    manifest.report = Some(ReportSummary::from(report));
    write_json(&out_dir.join(MANIFEST_FILE), manifest)?;
    Ok(names.into_iter().map(|n| out_dir.join(n)).collect())
}

/// Records a failure in a manifest and writes it, ignoring secondary I/O
/// errors so the original error reaches the caller.
fn write_failure(manifest: &mut RunManifest, out_dir: &Path, error: &HarnessError) {
    manifest.status = if manifest.artifacts.is_empty() {
        RunStatus::Failed
    } else {
        RunStatus::Partial
    };
    manifest.error = Some(error.record());
    if create_dir(out_dir).is_ok() {
        manifest.artifacts.push(MANIFEST_FILE.to_string());
        manifest.artifacts.dedup();
        let _ = write_json(&out_dir.join(MANIFEST_FILE), manifest);
    }
}

pub struct FitOutcome {
    pub precisions: PrecisionSet,
    pub report: FitReport,
    pub manifest: RunManifest,
    pub artifacts: Vec<PathBuf>,
}

pub fn run_fit(cfg: &FitConfig) -> Result<FitOutcome> {
    let mut manifest = RunManifest::new("fit", cfg.spec, cfg.seed);
    let suite = match load_suite(cfg, &mut manifest) {
        Ok(s) => s,
        Err(e) => {
            write_failure(&mut manifest, &cfg.out, &e);
            return Err(e);
        }
    };
    match solve(&suite, &cfg.spec) {
        Ok((precisions, report)) => {
            let artifacts = write_results(Some(&precisions), &report, &mut manifest, &cfg.out)?;
            Ok(FitOutcome {
                precisions,
                report,
                manifest,
                artifacts,
            })
        }
        Err(failure) => {
            let error = HarnessError::Model(failure.error);
            // keep the partial diagnostics next to the error record
            write_results(None, &failure.report, &mut manifest, &cfg.out)?;
            write_failure(&mut manifest, &cfg.out, &error);
            Err(error)
        }
    }
}

/// One row of the long-format sweep table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub repetition: usize,
    pub rho: f64,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub kl_mean: Option<f64>,
}

fn cell(v: Option<f64>) -> String {
    v.map(format_value).unwrap_or_default()
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = format!("{SWEEP_HEADER}\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.repetition,
            format_value(r.rho),
            cell(r.sensitivity),
            cell(r.specificity),
            cell(r.kl_mean)
        ));
    }
    out
}

fn load_precisions(paths: &[PathBuf]) -> Result<Vec<SymmetricMatrix>> {
    paths
        .iter()
        .map(|p| {
            let file = load_matrix_csv(p, MatrixRole::Covariance)?;
            SymmetricMatrix::from_upper(file.data).map_err(|e| HarnessError::Invalid {
                path: p.clone(),
                message: e.to_string(),
            })
        })
        .collect()
}

/// Solves over a ρ grid on loaded data. Writes `sweep.csv` (metrics are
/// filled when ground truth is supplied), `path.csv` with the objective and
/// edge count per ρ, and the manifest.
pub fn run_sweep(cfg: &SweepConfig) -> Result<RunManifest> {
    let fit = &cfg.fit;
    let mut manifest = RunManifest::new("sweep", fit.spec, fit.seed);
    let loaded = load_suite(fit, &mut manifest).and_then(|suite| {
        let truth = match &cfg.truth {
            Some(paths) => Some(GroundTruth::from_models(load_precisions(paths)?)?),
            None => None,
        };
        Ok((suite, truth))
    });
    let (suite, truth) = match loaded {
        Ok(v) => v,
        Err(e) => {
            write_failure(&mut manifest, &fit.out, &e);
            return Err(e);
        }
    };
    let grid = cfg.grid.values(full_screening_rho(&suite, &fit.spec));
    let mut rows = Vec::new();
    let mut path = String::from("rho,objective,edges,sweeps_run,converged\n");
    for &rho in &grid {
        let spec = ProblemSpec { rho, ..fit.spec };
        match solve(&suite, &spec) {
            Ok((precs, report)) => {
                let mats = precs.matrices();
                let threshold = default_threshold(mats);
                let n = suite.order();
                let edges = (0..n)
                    .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
                    .filter(|&(i, j)| mats.iter().any(|m| m.get(i, j).abs() > threshold))
                    .count();
                let mut row = SweepRow {
                    repetition: 0,
                    rho,
                    sensitivity: None,
                    specificity: None,
                    kl_mean: None,
                };
                if let Some(truth) = &truth {
                    let m = support_metrics(truth, mats, threshold)?;
                    let kl: f64 = truth
                        .models
                        .iter()
                        .zip(mats)
                        .map(|(t, e)| kl_divergence(t, e))
                        .sum::<mtggm::Result<f64>>()?;
                    row.sensitivity = Some(m.sensitivity);
                    row.specificity = Some(m.specificity);
                    row.kl_mean = Some(kl / mats.len() as f64);
                }
                rows.push(row);
                path.push_str(&format!(
                    "{},{},{},{},{}\n",
                    format_value(rho),
                    report
                        .objective_trace
                        .last()
                        .map(|&v| format_value(v))
                        .unwrap_or_default(),
                    edges,
                    report.sweeps_run,
                    report.converged
                ));
            }
            Err(e) => manifest.failures.push(FailureNote {
                repetition: None,
                rho: Some(rho),
                message: e.to_string(),
            }),
        }
    }
    create_dir(&fit.out)?;
    write_text(&fit.out.join(SWEEP_FILE), &sweep_csv(&rows))?;
    write_text(&fit.out.join(PATH_FILE), &path)?;
    manifest.artifacts = vec![SWEEP_FILE.into(), PATH_FILE.into(), MANIFEST_FILE.into()];
    if !manifest.failures.is_empty() {
        manifest.status = RunStatus::Partial;
    }
    write_json(&fit.out.join(MANIFEST_FILE), &manifest)?;
    Ok(manifest)
}

/// `(truth seed, data seed)` for each repetition, drawn from one stream
/// seeded by the run seed.
pub fn repetition_seeds(seed: u64, repetitions: usize) -> Vec<(u64, u64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..repetitions).map(|_| (rng.next_u64(), rng.next_u64())).collect()
}

/// One repetition of the synthetic protocol: draw a ground truth and data,
/// then sweep the grid (relative grids scale with this repetition's
/// full-screening level). Returns the grid used and the sweep.
pub fn synth_repetition(
    cfg: &SynthConfig,
    truth_seed: u64,
    data_seed: u64,
    options: SolveOptions,
) -> mtggm::Result<(Vec<f64>, RocSweep)> {
    let truth = generate_ground_truth(cfg.variables, cfg.tasks, cfg.density, truth_seed)?;
    let data = sample_dataset(&truth, &vec![cfg.samples; cfg.tasks], data_seed)?;
    let covs = data
        .iter()
        .map(|d| mtggm::synth::sample_covariance(d, cfg.center))
        .collect::<mtggm::Result<Vec<_>>>()?;
    let suite = TaskSuite::from_parts(covs, &vec![cfg.samples as f64; cfg.tasks])?;
    let grid = cfg.grid.values(full_screening_rho(&suite, &cfg.spec));
    let sweep = roc_sweep_with(&suite, &truth, &cfg.spec, &grid, options)?;
    Ok((grid, sweep))
}

/// The synthetic protocol: per repetition, draw a ground truth and data,
/// sweep ρ and score every estimate. Failures are logged and skipped.
///
/// Writes `sweep.csv` (one row per repetition and ρ), `summary.csv` (means
/// per grid position), `auc.csv` and the manifest.
pub fn run_synth_experiment(cfg: &SynthConfig) -> Result<RunManifest> {
    let mut manifest = RunManifest::new("synth", cfg.spec, cfg.seed);
    manifest.dimensions = Some(Dimensions {
        variables: cfg.variables,
        tasks: cfg.tasks,
    });
    let mut rows = Vec::new();
    let mut aucs = Vec::new();
    // (ρ sum, sensitivity sum, specificity sum, KL sum, count) per grid slot
    let mut slots: Vec<[f64; 5]> = Vec::new();

    for (rep, (truth_seed, data_seed)) in repetition_seeds(cfg.seed, cfg.repetitions).into_iter().enumerate() {
        let (grid, sweep) = match synth_repetition(cfg, truth_seed, data_seed, SolveOptions::default()) {
            Ok(s) => s,
            Err(e) => {
                manifest.failures.push(FailureNote {
                    repetition: Some(rep),
                    rho: None,
                    message: e.to_string(),
                });
                continue;
            }
        };
        for (rho, message) in sweep.failures {
            manifest.failures.push(FailureNote {
                repetition: Some(rep),
                rho: Some(rho),
                message,
            });
        }
        if slots.len() < grid.len() {
            slots.resize(grid.len(), [0.0; 5]);
        }
        for p in &sweep.points {
            rows.push(SweepRow {
                repetition: rep,
                rho: p.rho,
                sensitivity: Some(p.metrics.sensitivity),
                specificity: Some(p.metrics.specificity),
                kl_mean: Some(p.kl_mean),
            });
            if let Some(slot) = grid.iter().position(|&g| g == p.rho) {
                let s = &mut slots[slot];
                s[0] += p.rho;
                s[1] += p.metrics.sensitivity;
                s[2] += p.metrics.specificity;
                s[3] += p.kl_mean;
                s[4] += 1.0;
            }
        }
        aucs.push((rep, sweep.auc));
    }

    let mut summary = String::from("grid_index,rho_mean,sensitivity,specificity,kl_mean,runs\n");
    for (i, s) in slots.iter().enumerate().filter(|(_, s)| s[4] > 0.0) {
        let n = s[4];
        summary.push_str(&format!(
            "{i},{},{},{},{},{}\n",
            format_value(s[0] / n),
            format_value(s[1] / n),
            format_value(s[2] / n),
            format_value(s[3] / n),
            n as usize
        ));
    }
    let mut auc_csv = String::from("repetition,auc\n");
    for (rep, auc) in &aucs {
        auc_csv.push_str(&format!("{rep},{}\n", cell(*auc)));
    }
    let defined: Vec<f64> = aucs.iter().filter_map(|a| a.1).collect();

    create_dir(&cfg.out)?;
    write_text(&cfg.out.join(SWEEP_FILE), &sweep_csv(&rows))?;
    write_text(&cfg.out.join(SUMMARY_FILE), &summary)?;
    write_text(&cfg.out.join(AUC_FILE), &auc_csv)?;
    let (grid, grid_size, grid_min_ratio) = match &cfg.grid {
        GridChoice::Explicit(v) => (Some(v.clone()), None, None),
        GridChoice::Relative { size, min_ratio } => (None, Some(*size), Some(*min_ratio)),
    };
    manifest.synth = Some(SynthSummary {
        variables: cfg.variables,
        tasks: cfg.tasks,
        density: cfg.density,
        samples: cfg.samples,
        repetitions: cfg.repetitions,
        center: cfg.center,
        grid,
        grid_size,
        grid_min_ratio,
        mean_auc: (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64),
    });
    manifest.artifacts = vec![
        SWEEP_FILE.into(),
        SUMMARY_FILE.into(),
        AUC_FILE.into(),
        MANIFEST_FILE.into(),
    ];
    if !manifest.failures.is_empty() {
        manifest.status = RunStatus::Partial;
    }
    write_json(&cfg.out.join(MANIFEST_FILE), &manifest)?;
    Ok(manifest)
}

/// Support and distribution metrics of saved estimates against a truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub threshold: f64,
    pub sensitivity: f64,
    pub specificity: f64,
    /// KL divergence from truth per task.
    pub kl: Vec<f64>,
    pub kl_mean: f64,
    pub true_edges: usize,
}

pub fn run_eval(cfg: &EvalConfig) -> Result<EvalReport> {
    let estimates = load_precisions(&cfg.estimates)?;
    let truth = GroundTruth::from_models(load_precisions(&cfg.truth)?)?;
    let threshold = cfg.threshold.unwrap_or_else(|| default_threshold(&estimates));
    let metrics = support_metrics(&truth, &estimates, threshold)?;
    let kl = truth
        .models
        .iter()
        .zip(&estimates)
        .map(|(t, e)| kl_divergence(t, e))
        .collect::<mtggm::Result<Vec<f64>>>()?;
    let report = EvalReport {
        threshold,
        sensitivity: metrics.sensitivity,
        specificity: metrics.specificity,
        kl_mean: kl.iter().sum::<f64>() / kl.len() as f64,
        kl,
        true_edges: truth.edges().len(),
    };
    if let Some(out) = &cfg.out {
        create_dir(out)?;
        write_json(&out.join(EVAL_FILE), &report)?;
    }
    Ok(report)
}
