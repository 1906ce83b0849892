//! One-dimensional Newton kernel shared by the dual solvers.

use crate::error::{Error, Result};

/// Relative stationarity tolerance below which a Newton run counts as
/// converged; the caller supplies the scale.
pub const STATIONARITY_REL_TOL: f64 = 1e-11;

/// Cap on safeguarded bisection steps after an unconverged Newton run.
pub const MAX_FALLBACK_STEPS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOutcome {
    pub x: f64,
    /// Derivative of the minimized function at `x`.
    pub grad: f64,
}

/// Minimizes a strictly convex 1-D function from its first and second
/// derivatives: `iters` Newton steps from `x0`, each clamped to `≥ lower`.
///
/// Fails when the second derivative is not positive or any value is
/// non-finite.
pub fn newton_1d<G, H>(grad: G, hess: H, x0: f64, iters: usize, lower: f64) -> Result<NewtonOutcome>
where
    G: Fn(f64) -> f64,
    H: Fn(f64) -> f64,
{
    let mut x = x0.max(lower);
    for _ in 0..iters {
        let g = grad(x);
        let h = hess(x);
        if !g.is_finite() || !h.is_finite() {
            return Err(Error::Numeric(format!("non-finite derivative at x = {x}")));
        }
        if h <= 0.0 {
            return Err(Error::Numeric(format!("non-positive curvature {h} at x = {x}")));
        }
        x = (x - g / h).max(lower);
    }
    let g = grad(x);
    if !g.is_finite() || !x.is_finite() {
        return Err(Error::Numeric(format!("non-finite Newton iterate x = {x}")));
    }
    Ok(NewtonOutcome { x, grad: g })
}

/// Root of an increasing function `grad` inside `(lo, hi)`.
///
/// Starts from `x`, takes a Newton step when it stays inside the current
/// bracket and bisects otherwise, for at most [`MAX_FALLBACK_STEPS`] steps
/// or until `|grad| ≤ tol`. Endpoints are never evaluated, so a pole at `lo`
/// is fine. Returns the best point seen.
pub fn bracketed_root<G, H>(grad: G, hess: H, mut lo: f64, mut hi: f64, x: f64, tol: f64) -> Result<NewtonOutcome>
where
    G: Fn(f64) -> f64,
    H: Fn(f64) -> f64,
{
    let mut x = if x > lo && x < hi { x } else { 0.5 * (lo + hi) };
    let mut best = NewtonOutcome { x, grad: f64::INFINITY };
    for _ in 0..=MAX_FALLBACK_STEPS {
        let g = grad(x);
        if !g.is_finite() {
            return Err(Error::Numeric(format!("non-finite derivative at x = {x}")));
        }
        if g.abs() < best.grad.abs() {
            best = NewtonOutcome { x, grad: g };
        }
        if g.abs() <= tol {
            break;
        }
        if g < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let h = hess(x);
        let newton = x - g / h;
        let next = if h > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if next == x {
            break;
        }
        x = next;
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_on_quadratic() {
        // f(x) = (x − 3)²
        let out = newton_1d(|x| 2.0 * (x - 3.0), |_| 2.0, 0.0, 1, f64::NEG_INFINITY).unwrap();
        assert_eq!(out.x, 3.0);
        assert_eq!(out.grad, 0.0);
    }

    #[test]
    fn clamps_to_lower() {
        // unconstrained root at −2
        let out = newton_1d(|x| 2.0 * (x + 2.0), |_| 2.0, 5.0, 1, 0.0).unwrap();
        assert_eq!(out.x, 0.0);
    }

    #[test]
    fn trust_region_dual_converges() {
        // q = 1, c = (3, 4), ρ = 1: f'(λ) = ρ² − ‖c‖²/(1+λ)²
        let grad = |l: f64| 1.0 - 25.0 / (1.0 + l).powi(2);
        let hess = |l: f64| 50.0 / (1.0 + l).powi(3);
        let out = newton_1d(grad, hess, 0.0, 10, 0.0).unwrap();
        assert!((out.x - 4.0).abs() < 1e-8, "{}", out.x);
        assert!(out.grad.abs() < 1e-8);
    }

    #[test]
    fn rejects_flat_curvature() {
        assert!(matches!(newton_1d(|x| x, |_| 0.0, 1.0, 3, 0.0), Err(Error::Numeric(_))));
    }

    #[test]
    fn bracketed_root_handles_pole() {
        // 1/x − 2 crosses zero at 0.5; treat grad = 2 − 1/x (increasing)
        let out = bracketed_root(|x| 2.0 - 1.0 / x, |x| 1.0 / (x * x), 0.0, 10.0, 9.0, 1e-14).unwrap();
        assert!((out.x - 0.5).abs() < 1e-12);
    }
}
