//! Simultaneous learning of K sparse Gaussian graphical models that share a
//! sparsity pattern.
//!
//! The estimator maximizes
//!
//! ```text
//! Σₖ T⁽ᵏ⁾ (log det Ω⁽ᵏ⁾ − ⟨Σ̂⁽ᵏ⁾, Ω⁽ᵏ⁾⟩) − ρ Σ_{ij} ‖(ω⁽¹⁾ᵢⱼ, …, ω⁽ᴷ⁾ᵢⱼ)‖_p
//! ```
//!
//! over positive definite `Ω⁽ᵏ⁾` for `p ∈ {2, ∞}` by block coordinate
//! descent. Each block update reduces to small separable problems solved in
//! [`subproblem`]: a continuous quadratic knapsack for p = ∞ and a separable
//! trust-region dual for p = 2.
//!
//! ```
//! use mtggm::{solve, NormOrder, ProblemSpec, SymmetricMatrix, TaskSuite};
//!
//! let a = SymmetricMatrix::from_row_major(3, &[1.0, 0.5, 0.0, 0.5, 1.0, 0.2, 0.0, 0.2, 1.0])?;
//! let b = SymmetricMatrix::from_row_major(3, &[1.0, 0.4, 0.1, 0.4, 1.0, 0.0, 0.1, 0.0, 1.0])?;
//! let suite = TaskSuite::from_parts(vec![a, b], &[50.0, 80.0])?;
//! let spec = ProblemSpec::new(5.0, NormOrder::LInf);
//! let (precisions, report) = solve(&suite, &spec)?;
//! assert_eq!(precisions.task_count(), 2);
//! assert!(report.objective_trace.len() <= spec.max_sweeps);
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

// `!(x > 0.0)` is used on purpose so NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bcd;
pub mod error;
pub mod matrix;
pub mod model;
pub mod subproblem;
pub mod synth;

pub use bcd::{solve, solve_with, FitReport, SolveError, SolveOptions};
pub use error::{Error, Result};
pub use matrix::SymmetricMatrix;
pub use model::{
    eigenvalue_bounds, gaussian_log_likelihood, l1p_norm, multitask_objective, optimality_residual, EigenBounds,
    NormOrder, PrecisionSet, ProblemSpec, Task, TaskSuite,
};

// The guide's code listings run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/objective.md")]
    mod objective {}
    #[doc = include_str!("../../../book/src/block-coordinate-descent.md")]
    mod block_coordinate_descent {}
    #[doc = include_str!("../../../book/src/knapsack.md")]
    mod knapsack {}
    #[doc = include_str!("../../../book/src/trust-region.md")]
    mod trust_region {}
    #[doc = include_str!("../../../book/src/diagonal.md")]
    mod diagonal {}
    #[doc = include_str!("../../../book/src/synthetic.md")]
    mod synthetic {}
}
