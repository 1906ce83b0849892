//! Acceptance gate. Runs every criterion, prints one PASS/FAIL line for
//! each and exits nonzero if any failed.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use common::*;
use mtggm::bcd::{full_screening_rho, screen_blocks};
use mtggm::subproblem::{
    solve_lp_separable_quadratic, solve_quadratic_knapsack, solve_trust_region_dual, SeparableQuadratic,
};
use mtggm::synth::{generate_ground_truth, sample_dataset};
use mtggm::{eigenvalue_bounds, solve_with, FitReport, NormOrder, ProblemSpec, SolveOptions, TaskSuite};
use mtggm_cli::config::{CommonArgs, GridArgs, SynthArgs, SynthConfig};
use mtggm_cli::matrix_csv::write_matrix_csv;
use mtggm_cli::run::{repetition_seeds, synth_repetition};
use rand::Rng;

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: String) -> Verdict {
    Verdict { passed, detail }
}

const NORMS: [NormOrder; 2] = [NormOrder::L2, NormOrder::LInf];
const MODES: [(NormOrder, bool); 4] = [
    (NormOrder::L2, false),
    (NormOrder::L2, true),
    (NormOrder::LInf, false),
    (NormOrder::LInf, true),
];

type Subproblem = (Vec<f64>, Vec<f64>, f64);

fn subproblem_instances() -> Vec<(NormOrder, Subproblem)> {
    let mut r = rng(1001);
    NORMS
        .iter()
        .flat_map(|&norm| (0..1000).map(|_| (norm, random_subproblem(&mut r))).collect::<Vec<_>>())
        .collect()
}

fn oracle_equivalence(instances: &[(NormOrder, Subproblem)]) -> Verdict {
    let (mut worst_f, mut worst_x) = (0.0_f64, 0.0_f64);
    let mut errors = 0;
    for (norm, (q, c, rho)) in instances {
        let prob = SeparableQuadratic::new(q.clone(), c.clone(), *rho).unwrap();
        let Ok(sol) = solve_lp_separable_quadratic(&prob, *norm, 10) else {
            errors += 1;
            continue;
        };
        let (xo, fo) = subproblem_oracle(q, c, *rho, *norm);
        let f = quadratic_objective(q, c, *rho, *norm, &sol.x);
        worst_f = worst_f.max((f - fo).abs());
        worst_x = worst_x.max(sol.x.iter().zip(&xo).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
    }
    verdict(
        errors == 0 && worst_f < 1e-6 && worst_x < 1e-5,
        format!(
            "{} instances, max |Δf| {worst_f:.1e}, max |Δx|∞ {worst_x:.1e}, errors {errors}",
            instances.len()
        ),
    )
}

fn unit_weight_closed_form() -> Verdict {
    let mut r = rng(1002);
    let (mut worst, mut interior, mut interior_ok) = (0.0_f64, 0, true);
    for _ in 0..1000 {
        let (_, c, rho) = random_subproblem(&mut r);
        let q = vec![1.0; c.len()];
        let c_norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
        let expected = (c_norm / rho - 1.0).max(0.0);
        if expected == 0.0 {
            // λ* = 0 is the interior branch, which maps to x = 0
            interior += 1;
            let prob = SeparableQuadratic::new(q, c, rho).unwrap();
            interior_ok &= solve_lp_separable_quadratic(&prob, NormOrder::L2, 10)
                .unwrap()
                .x
                .iter()
                .all(|&x| x == 0.0);
            continue;
        }
        let lambda = solve_trust_region_dual(&q, &c, rho, 10).unwrap().lambda;
        worst = worst.max((lambda - expected).abs() / expected);
    }
    verdict(
        worst < 1e-8 && interior_ok,
        format!("max relative λ error {worst:.1e}, {interior} interior instances with x = 0: {interior_ok}"),
    )
}

fn knapsack_certificates(instances: &[(NormOrder, Subproblem)]) -> Verdict {
    let (mut checked, mut worst_sum, mut worst_g) = (0, 0.0_f64, 0.0_f64);
    for (_, (q, c, rho)) in instances {
        let support: Vec<usize> = (0..c.len()).filter(|&k| c[k] != 0.0).collect();
        let a: Vec<f64> = support.iter().map(|&k| c[k].abs()).collect();
        let qs: Vec<f64> = support.iter().map(|&k| q[k]).collect();
        if a.iter().sum::<f64>() <= *rho {
            continue;
        }
        let sol = solve_quadratic_knapsack(&qs, &a, *rho).unwrap();
        checked += 1;
        worst_sum = worst_sum.max((sol.g.iter().sum::<f64>() - rho).abs() / rho);
        for ((g, a), q) in sol.g.iter().zip(&a).zip(&qs) {
            worst_g = worst_g.max((g - (a - sol.nu * q).max(0.0)).abs());
        }
    }
    verdict(
        worst_sum < 1e-10 && worst_g == 0.0,
        format!("{checked} knapsacks, max |Σg − ρ|/ρ {worst_sum:.1e}, max |g − max(0, |c| − νq)| {worst_g:.1e}"),
    )
}

struct TracedSolve {
    suite: TaskSuite,
    spec: ProblemSpec,
    report: FitReport,
    eigenvalues: Vec<Vec<f64>>,
}

/// Checks the per-update invariants: every iterate is definite and the
/// objective never drops by more than the slack. Returns the worst drop.
fn update_invariants(report: &FitReport) -> (bool, f64) {
    let mut previous = report.initial_objective;
    let mut worst = 0.0_f64;
    let mut definite = !report.update_min_eig_trace.is_empty();
    for (&f, &eig) in report.update_objective_trace.iter().zip(&report.update_min_eig_trace) {
        worst = worst.max(previous - f);
        definite &= eig > 0.0;
        previous = f;
    }
    (definite, worst)
}

fn traced_solves() -> Vec<TracedSolve> {
    let mut r = rng(1004);
    let mut out = Vec::new();
    for seed in 0..100 {
        let n = r.random_range(2..=10);
        let k = r.random_range(1..=4);
        let counts = (0..k).map(|_| r.random_range(n + 2..=80)).collect();
        let inst = synthetic_instance(n, k, 0.3, counts, 4000 + seed);
        let (norm, pen) = MODES[seed as usize % 4];
        let base = ProblemSpec::new(1.0, norm)
            .with_penalized_diagonal(pen)
            .with_max_sweeps(100);
        let spec = ProblemSpec {
            rho: full_screening_rho(&inst.suite, &base) * r.random_range(0.05..0.9),
            ..base
        };
        let options = SolveOptions {
            trace_updates: true,
            ..Default::default()
        };
        let (precs, report) = solve_with(&inst.suite, &spec, options).expect("solve succeeds");
        let eigenvalues = precs.matrices().iter().map(|m| m.eigenvalues()).collect();
        out.push(TracedSolve {
            suite: inst.suite,
            spec,
            report,
            eigenvalues,
        });
    }
    out
}

fn definiteness_and_ascent(solves: &[TracedSolve]) -> Verdict {
    let (mut all_definite, mut worst) = (true, 0.0_f64);
    let updates: usize = solves.iter().map(|s| s.report.update_objective_trace.len()).sum();
    for s in solves {
        let (definite, drop) = update_invariants(&s.report);
        all_definite &= definite;
        worst = worst.max(drop);
    }
    verdict(
        all_definite && worst <= 1e-9,
        format!(
            "{} solves, {updates} updates, all definite: {all_definite}, worst drop {worst:.1e}",
            solves.len()
        ),
    )
}

fn eigenvalue_bounds_hold(solves: &[TracedSolve]) -> Verdict {
    let (mut converged, mut violations) = (0, 0);
    let (mut lower_margin, mut upper_margin) = (f64::INFINITY, f64::INFINITY);
    for s in solves.iter().filter(|s| s.report.converged) {
        converged += 1;
        let bounds = eigenvalue_bounds(&s.suite, &s.spec);
        for (eigs, lower) in s.eigenvalues.iter().zip(&bounds.lower) {
            for &e in eigs {
                lower_margin = lower_margin.min(e - lower);
                upper_margin = upper_margin.min(bounds.upper - e);
                if e < lower - 1e-8 || e > bounds.upper + 1e-8 {
                    violations += 1;
                }
            }
        }
    }
    verdict(
        converged > 0 && violations == 0,
        format!(
            "{converged} converged solves, {violations} violations, min margins {lower_margin:.2e} (lower) {upper_margin:.2e} (upper)"
        ),
    )
}

fn reference_equivalence() -> Verdict {
    let mut r = rng(1006);
    let (mut worst, mut unconverged) = (0.0_f64, 0);
    for seed in 0..20 {
        let n = r.random_range(2..=8);
        let k = r.random_range(1..=3);
        let counts = (0..k).map(|_| r.random_range(n + 2..=60)).collect();
        let inst = synthetic_instance(n, k, 0.3, counts, 6000 + seed);
        let (norm, pen) = MODES[seed as usize % 4];
        let base = ProblemSpec::new(1.0, norm)
            .with_penalized_diagonal(pen)
            .with_max_sweeps(1000);
        let spec = ProblemSpec {
            rho: full_screening_rho(&inst.suite, &base) * r.random_range(0.05..0.9),
            ..base
        };
        // the reference is computed first and knows nothing of the solver
        let (reference, _) = reference_solve(&inst.suite, &spec, 100_000);
        let (_, report) = solve_with(&inst.suite, &spec, SolveOptions::default()).expect("solve succeeds");
        if !report.converged {
            unconverged += 1;
        }
        let value = *report.objective_trace.last().unwrap();
        worst = worst.max((value - reference).abs() / reference.abs());
    }
    verdict(
        worst < 1e-4 && unconverged == 0,
        format!("20 instances, max relative gap {worst:.1e}, unconverged {unconverged}"),
    )
}

fn single_task_norms_agree() -> Verdict {
    let mut r = rng(1007);
    let mut worst = 0.0_f64;
    for seed in 0..50 {
        let n = r.random_range(2..=10);
        let inst = synthetic_instance(n, 1, 0.3, vec![r.random_range(n + 2..=80)], 7000 + seed);
        let pen = seed % 2 == 1;
        let base = ProblemSpec::new(1.0, NormOrder::L2).with_penalized_diagonal(pen);
        let rho = full_screening_rho(&inst.suite, &base) * r.random_range(0.05..0.9);
        let fit = |norm| {
            let spec = ProblemSpec { rho, norm, ..base }
                .with_max_sweeps(1000)
                .with_objective_tol(1e-12);
            solve_with(&inst.suite, &spec, SolveOptions::default())
                .expect("solve succeeds")
                .0
        };
        let (a, b) = (fit(NormOrder::L2), fit(NormOrder::LInf));
        worst = worst.max((a.matrices()[0].as_matrix() - b.matrices()[0].as_matrix()).abs().max());
    }
    verdict(worst < 1e-6, format!("50 instances, max elementwise gap {worst:.1e}"))
}

fn screening_is_exact() -> Verdict {
    let mut r = rng(1008);
    let (mut found, mut worst) = (0, 0.0_f64);
    for seed in 0..400 {
        if found == 20 {
            break;
        }
        let n = r.random_range(3..=8);
        let k = r.random_range(1..=3);
        let counts = (0..k).map(|_| r.random_range(n + 2..=60)).collect();
        let inst = synthetic_instance(n, k, 0.3, counts, 8000 + seed);
        let (norm, pen) = MODES[seed as usize % 4];
        let base = ProblemSpec::new(1.0, norm)
            .with_penalized_diagonal(pen)
            .with_max_sweeps(2000)
            .with_objective_tol(1e-13);
        let spec = ProblemSpec {
            rho: full_screening_rho(&inst.suite, &base) * r.random_range(0.3..0.95),
            ..base
        };
        let screened = screen_blocks(&inst.suite, &spec);
        if screened.is_empty() || screened.len() == n {
            continue;
        }
        found += 1;
        let objective = |screening| {
            let (_, report) = solve_with(
                &inst.suite,
                &spec,
                SolveOptions {
                    screening,
                    ..Default::default()
                },
            )
            .expect("solve succeeds");
            *report.objective_trace.last().unwrap()
        };
        let (on, off) = (objective(true), objective(false));
        worst = worst.max((on - off).abs() / off.abs());
    }
    verdict(
        found == 20 && worst < 1e-8,
        format!("{found} instances with partial screening, max relative change {worst:.1e}"),
    )
}

fn synthetic_protocol() -> Verdict {
    let out = tempfile::tempdir().unwrap();
    let common = CommonArgs {
        out: Some(out.path().to_path_buf()),
        ..Default::default()
    };
    let synth = SynthArgs {
        variables: Some(20),
        tasks: Some(3),
        density: Some(0.1),
        samples: Some(200),
        repetitions: Some(10),
        no_center: false,
    };
    let grid = GridArgs {
        grid_size: Some(20),
        ..Default::default()
    };
    let cfg = SynthConfig::resolve(&common, &synth, &grid).unwrap();
    let options = SolveOptions {
        trace_updates: true,
        ..Default::default()
    };

    let mut aucs = Vec::new();
    let mut kl_by_slot = vec![Vec::new(); 20];
    let (mut invariants_hold, mut worst_drop, mut failures) = (true, 0.0_f64, 0);
    for (truth_seed, data_seed) in repetition_seeds(cfg.seed, cfg.repetitions) {
        let (grid, sweep) = synth_repetition(&cfg, truth_seed, data_seed, options).expect("repetition runs");
        failures += sweep.failures.len();
        aucs.push(sweep.auc.unwrap_or(f64::NAN));
        for p in &sweep.points {
            let (definite, drop) = update_invariants(&p.report);
            invariants_hold &= definite && drop <= 1e-9;
            worst_drop = worst_drop.max(drop);
            let slot = grid.iter().position(|&g| g == p.rho).unwrap();
            kl_by_slot[slot].push(p.kl_mean);
        }
    }
    let mean_auc = aucs.iter().sum::<f64>() / aucs.len() as f64;
    let min_auc = aucs.iter().copied().fold(f64::INFINITY, f64::min);
    let mean_kl: Vec<f64> = kl_by_slot
        .iter()
        .map(|v| v.iter().sum::<f64>() / v.len() as f64)
        .collect();
    let kl_at_largest = *mean_kl.last().unwrap();
    let kl_min = mean_kl.iter().copied().fold(f64::INFINITY, f64::min);
    verdict(
        mean_auc > 0.5 && kl_min < kl_at_largest && invariants_hold && failures == 0,
        format!(
            "mean AUC {mean_auc:.3} (min {min_auc:.3}), min mean KL {kl_min:.3} vs {kl_at_largest:.3} at largest ρ, \
             invariants hold: {invariants_hold} (worst drop {worst_drop:.1e}), failed solves {failures}"
        ),
    )
}

fn run_binary(args: &[&str], cwd: &Path) -> bool {
    Command::new(env!("CARGO_BIN_EXE_mtggm"))
        .args(args)
        .current_dir(cwd)
        .output()
        .is_ok_and(|o| o.status.success())
}

/// Names and bytes of every file in a directory, sorted by name.
fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .map(|entries| {
            entries
                .map(|e| {
                    let e = e.unwrap();
                    (e.file_name().into_string().unwrap(), fs::read(e.path()).unwrap())
                })
                .collect()
        })
        .unwrap_or_default();
    files.sort();
    files
}

fn determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let truth = generate_ground_truth(8, 3, 0.2, 10).unwrap();
    let data = sample_dataset(&truth, &[40, 50, 60], 11).unwrap();
    for (k, d) in data.iter().enumerate() {
        write_matrix_csv(&dir.path().join(format!("task{k}.csv")), d).unwrap();
    }
    let inputs = ["task0.csv", "task1.csv", "task2.csv"];
    let mut notes = Vec::new();
    let mut identical = true;
    for (label, args) in [
        (
            "fit",
            vec![
                "fit", "--input", inputs[0], inputs[1], inputs[2], "--rho", "5", "--p", "2", "--seed", "3",
            ],
        ),
        (
            "synth",
            vec![
                "synth",
                "--variables",
                "10",
                "--tasks",
                "2",
                "--repetitions",
                "2",
                "--grid-size",
                "5",
                "--seed",
                "9",
            ],
        ),
    ] {
        let runs: Vec<Vec<(String, Vec<u8>)>> = ["a", "b"]
            .iter()
            .map(|run| {
                let out = format!("{label}_{run}");
                let mut full = args.clone();
                full.extend(["--out", &out]);
                assert!(run_binary(&full, dir.path()), "{label} run failed");
                snapshot(&dir.path().join(&out))
            })
            .collect();
        let same = !runs[0].is_empty() && runs[0] == runs[1];
        identical &= same;
        notes.push(format!("{label}: {} files identical: {same}", runs[0].len()));
    }
    verdict(identical, notes.join(", "))
}

fn main() {
    let mut failed = 0;
    let mut report = |id: u32, name: &str, limit: Option<Duration>, check: &mut dyn FnMut() -> Verdict| {
        let start = Instant::now();
        let v = check();
        let elapsed = start.elapsed();
        let in_time = limit.is_none_or(|l| elapsed < l);
        let passed = v.passed && in_time;
        failed += usize::from(!passed);
        let budget = limit.map_or(String::new(), |l| format!(" of {}s", l.as_secs()));
        println!(
            "criterion {id:>2} {name}: {} ({}; {:.1}s{budget})",
            if passed { "PASS" } else { "FAIL" },
            v.detail,
            elapsed.as_secs_f64()
        );
    };

    let secs = |s| Some(Duration::from_secs(s));
    let instances = subproblem_instances();
    report(1, "subproblem oracle equivalence", secs(30), &mut || {
        oracle_equivalence(&instances)
    });
    report(2, "unit-weight closed form", secs(5), &mut unit_weight_closed_form);
    report(3, "knapsack certificates", None, &mut || {
        knapsack_certificates(&instances)
    });
    let start = Instant::now();
    let solves = traced_solves();
    let solve_time = start.elapsed();
    report(4, "definiteness and ascent", secs(120), &mut || {
        let mut v = definiteness_and_ascent(&solves);
        v.detail
            .push_str(&format!(", solving took {:.1}s", solve_time.as_secs_f64()));
        v.passed &= solve_time < Duration::from_secs(120);
        v
    });
    report(5, "eigenvalue bounds", None, &mut || eigenvalue_bounds_hold(&solves));
    report(6, "reference equivalence", secs(300), &mut reference_equivalence);
    report(7, "single-task norm agreement", None, &mut single_task_norms_agree);
    report(8, "screening exactness", None, &mut screening_is_exact);
    report(9, "synthetic protocol", secs(600), &mut synthetic_protocol);
    report(10, "determinism", None, &mut determinism);

    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
