//! Independent oracles and instance generators shared by the integration
//! tests. Nothing here calls into the solver code paths it is used to check.

#![allow(dead_code)]

use mtggm::synth::{generate_ground_truth, sample_covariance, sample_dataset};
use mtggm::{NormOrder, ProblemSpec, SymmetricMatrix, TaskSuite};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `½ xᵀdiag(q)x − cᵀx + ρ‖x‖_p`, written out longhand.
pub fn quadratic_objective(q: &[f64], c: &[f64], rho: f64, norm: NormOrder, x: &[f64]) -> f64 {
    let mut smooth = 0.0;
    for k in 0..q.len() {
        smooth += 0.5 * q[k] * x[k] * x[k] - c[k] * x[k];
    }
    let reg = match norm {
        NormOrder::L2 => x.iter().map(|v| v * v).sum::<f64>().sqrt(),
        NormOrder::LInf => x.iter().fold(0.0_f64, |m, v| m.max(v.abs())),
    };
    smooth + rho * reg
}

/// Golden-section minimization of a unimodal function on `[lo, hi]`.
pub fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, iters: usize) -> f64 {
    let inv_phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - inv_phi * (hi - lo);
    let mut b = lo + inv_phi * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    for _ in 0..iters {
        if fa <= fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - inv_phi * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + inv_phi * (hi - lo);
            fb = f(b);
        }
    }
    0.5 * (lo + hi)
}

/// Brute-force minimizer of the separable regularized quadratic.
///
/// For p = ∞ the minimum over the box `‖x‖_∞ ≤ t` is the clipped
/// unconstrained point, so a 1-D search over `t` suffices. For p = 2 the
/// minimizer lies on the ridge path `x(μ) = c/(q + μ)`, searched over
/// `ln μ`. Both 1-D profiles are unimodal; the origin is compared as well.
pub fn subproblem_oracle(q: &[f64], c: &[f64], rho: f64, norm: NormOrder) -> (Vec<f64>, f64) {
    let obj = |x: &[f64]| quadratic_objective(q, c, rho, norm, x);
    let candidate: Vec<f64> = match norm {
        NormOrder::LInf => {
            let at = |t: f64| -> Vec<f64> { q.iter().zip(c).map(|(q, c)| (c / q).clamp(-t, t)).collect() };
            let t_max = q.iter().zip(c).map(|(q, c)| (c / q).abs()).fold(0.0, f64::max);
            let t = golden_section(|t| obj(&at(t)), 0.0, t_max, 200);
            at(t)
        }
        NormOrder::L2 => {
            let at = |s: f64| -> Vec<f64> {
                let mu = s.exp();
                q.iter().zip(c).map(|(q, c)| c / (q + mu)).collect()
            };
            let s = golden_section(|s| obj(&at(s)), -40.0, 40.0, 300);
            at(s)
        }
    };
    let zero = vec![0.0; q.len()];
    if obj(&zero) <= obj(&candidate) {
        let v = obj(&zero);
        (zero, v)
    } else {
        let v = obj(&candidate);
        (candidate, v)
    }
}

/// Random subproblem instance from the acceptance distribution:
/// K ∈ {1..6}, q ∈ (0, 5], c ∈ [−5, 5], ρ ∈ (0, 2‖c‖₁).
pub fn random_subproblem(rng: &mut impl Rng) -> (Vec<f64>, Vec<f64>, f64) {
    let k = rng.random_range(1..=6);
    let q: Vec<f64> = (0..k).map(|_| 5.0 - rng.random_range(0.0..5.0)).collect();
    let c: Vec<f64> = (0..k).map(|_| rng.random_range(-5.0..=5.0)).collect();
    let l1: f64 = c.iter().map(|v| v.abs()).sum();
    let rho = (2.0 * l1 - rng.random_range(0.0..2.0 * l1)).max(1e-12);
    (q, c, rho)
}

/// A multi-task instance drawn from a synthetic ground truth, with sample
/// covariances from zero-mean draws.
pub struct Instance {
    pub suite: TaskSuite,
    pub counts: Vec<usize>,
}

pub fn synthetic_instance(n: usize, k: usize, density: f64, counts: Vec<usize>, seed: u64) -> Instance {
    let truth = generate_ground_truth(n, k, density, seed).unwrap();
    let data = sample_dataset(&truth, &counts, seed.wrapping_add(0x9e37)).unwrap();
    let covs: Vec<SymmetricMatrix> = data.iter().map(|d| sample_covariance(d, false).unwrap()).collect();
    let t: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    Instance {
        suite: TaskSuite::from_parts(covs, &t).unwrap(),
        counts,
    }
}

/// Largest `‖(T⁽ᵏ⁾ Σ̂⁽ᵏ⁾ᵢⱼ)ₖ‖_p̄` over off-diagonal positions, computed directly.
pub fn max_dual_coupling(suite: &TaskSuite, norm: NormOrder) -> f64 {
    let n = suite.order();
    let mut best = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let v: Vec<f64> = suite
                .tasks()
                .iter()
                .map(|t| t.sample_count * t.covariance.get(i, j))
                .collect();
            let d = match norm {
                NormOrder::L2 => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
                NormOrder::LInf => v.iter().map(|x| x.abs()).sum(),
            };
            best = best.max(d);
        }
    }
    best
}

/// Objective of the estimator evaluated longhand with dense nalgebra
/// routines: `Σₖ Tₖ(ln det Ωₖ − ⟨Σ̂ₖ, Ωₖ⟩) − ρ Σ_positions ‖·‖_p`.
pub fn reference_objective(suite: &TaskSuite, omegas: &[DMatrix<f64>], spec: &ProblemSpec) -> Option<f64> {
    let mut total = 0.0;
    for (t, om) in suite.tasks().iter().zip(omegas) {
        let chol = om.clone().cholesky()?;
        let log_det: f64 = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
        let inner = t.covariance.as_matrix().component_mul(om).sum();
        total += t.sample_count * (log_det - inner);
    }
    let n = suite.order();
    let mut pen = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i == j && !spec.penalize_diagonal {
                continue;
            }
            let v: Vec<f64> = omegas.iter().map(|m| m[(i, j)]).collect();
            pen += match spec.norm {
                NormOrder::L2 => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
                NormOrder::LInf => v.iter().fold(0.0_f64, |m, x| m.max(x.abs())),
            };
        }
    }
    Some(total - spec.rho * pen)
}

/// Euclidean projection onto the ℓ1 ball of radius `r`, by bisection on
/// the soft-threshold level.
pub fn project_l1_ball(v: &[f64], r: f64) -> Vec<f64> {
    let l1: f64 = v.iter().map(|x| x.abs()).sum();
    if l1 <= r {
        return v.to_vec();
    }
    let mass = |tau: f64| v.iter().map(|x| (x.abs() - tau).max(0.0)).sum::<f64>();
    let (mut lo, mut hi) = (0.0, v.iter().fold(0.0_f64, |m, x| m.max(x.abs())));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mass(mid) > r {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let tau = 0.5 * (lo + hi);
    v.iter().map(|x| x.signum() * (x.abs() - tau).max(0.0)).collect()
}

/// Proximal operator of `s‖·‖_p`.
pub fn prox_norm(v: &[f64], s: f64, norm: NormOrder) -> Vec<f64> {
    match norm {
        NormOrder::L2 => {
            let len = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if len <= s {
                vec![0.0; v.len()]
            } else {
                v.iter().map(|x| x * (1.0 - s / len)).collect()
            }
        }
        // Moreau decomposition with the dual ℓ1 ball
        NormOrder::LInf => {
            let p = project_l1_ball(v, s);
            v.iter().zip(p).map(|(a, b)| a - b).collect()
        }
    }
}

/// Long-run proximal gradient ascent on the full objective, started from
/// `diag(Σ̂)⁻¹`, with backtracking that rejects steps leaving the positive
/// definite cone. Returns the final objective and iterates.
pub fn reference_solve(suite: &TaskSuite, spec: &ProblemSpec, max_iters: usize) -> (f64, Vec<DMatrix<f64>>) {
    let n = suite.order();
    let k_total = suite.task_count();
    let mut omegas: Vec<DMatrix<f64>> = suite
        .tasks()
        .iter()
        .map(|t| DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 / t.covariance.get(i, i) } else { 0.0 }))
        .collect();
    // negated smooth part: Σ T(−ln det Ω + ⟨Σ̂, Ω⟩)
    let smooth = |om: &[DMatrix<f64>]| -> Option<f64> {
        let mut total = 0.0;
        for (t, m) in suite.tasks().iter().zip(om) {
            let chol = m.clone().cholesky()?;
            let log_det: f64 = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
            total += t.sample_count * (t.covariance.as_matrix().component_mul(m).sum() - log_det);
        }
        Some(total)
    };
    let mut step = 1.0 / suite.total_samples();
    let mut value = -reference_objective(suite, &omegas, spec).unwrap();
    for _ in 0..max_iters {
        let grads: Vec<DMatrix<f64>> = suite
            .tasks()
            .iter()
            .zip(&omegas)
            .map(|(t, m)| {
                let inv = m.clone().cholesky().unwrap().inverse();
                (t.covariance.as_matrix() - inv) * t.sample_count
            })
            .collect();
        let f0 = smooth(&omegas).unwrap();
        let mut accepted = None;
        for _ in 0..60 {
            let mut cand: Vec<DMatrix<f64>> = omegas.iter().zip(&grads).map(|(m, g)| m - g * step).collect();
            for i in 0..n {
                for j in 0..n {
                    if i == j && !spec.penalize_diagonal {
                        continue;
                    }
                    let v: Vec<f64> = cand.iter().map(|m| m[(i, j)]).collect();
                    let p = prox_norm(&v, step * spec.rho, spec.norm);
                    for k in 0..k_total {
                        cand[k][(i, j)] = p[k];
                    }
                }
            }
            if let Some(f1) = smooth(&cand) {
                let mut lin = 0.0;
                let mut dist = 0.0;
                for k in 0..k_total {
                    let d = &cand[k] - &omegas[k];
                    lin += grads[k].component_mul(&d).sum();
                    dist += d.norm_squared();
                }
                if f1 <= f0 + lin + dist / (2.0 * step) + 1e-12 * f0.abs() {
                    accepted = Some(cand);
                    break;
                }
            }
            step *= 0.5;
        }
        let Some(cand) = accepted else { break };
        let next = -reference_objective(suite, &cand, spec).unwrap();
        omegas = cand;
        let change = value - next;
        value = next;
        step *= 1.5;
        if change.abs() <= 1e-15 * value.abs() {
            break;
        }
    }
    (-value, omegas)
}
