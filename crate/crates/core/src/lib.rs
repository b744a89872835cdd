//! Smooth penalty functions for constrained optimisation.
//!
//! The crate provides softplus and algebraic penalties (plus the linear and
//! Courant-Beltrami baselines), closed-form predictions of the constraint error
//! they leave at a BFGS stationary point, a BFGS minimiser with a strong-Wolfe
//! line search, seeded benchmark problems, and a harness that runs them.
//!
//! Numeric code is generic over [`Scalar`], implemented for `f32` and `f64`;
//! the `*64` / `*32` aliases below fix the type.
//!
//! ```
//! use softplus_penalty::{penalty, predicted_error, ConstraintKind, ErrorQuery64, PenaltyFamily, PenaltySpec64};
//!
//! // Softplus g(x) = alpha log2(1 + 2^(x/alpha)) equals alpha at the boundary.
//! let spec = PenaltySpec64::softplus(ConstraintKind::LessThan, 0.1, 15.0).unwrap();
//! assert!((penalty(0.0, &spec).unwrap() - 0.1).abs() < 1e-15);
//!
//! // Offset of the penalised optimum from the boundary for a local gradient of 2.5.
//! let q = ErrorQuery64::new(PenaltyFamily::Softplus, ConstraintKind::LessThan, 2.5, 15.0, 3e-5);
//! let err = predicted_error(&q).unwrap();
//! assert!((err - 3e-5 * 5f64.log2()).abs() < 1e-15);
//! ```

pub mod error_prediction;
pub mod harness;
pub mod optimizer;
pub mod penalty;
pub mod problems;
pub mod rng;
pub mod scalar;

pub use error_prediction::{predicted_error, stationarity_oracle, ErrorQuery, PredictionError};
pub use optimizer::{bfgs_minimize, bfgs_minimize_observed, OptimError, OptimOptions, OptimResult};
pub use penalty::{
    combine, constrained_objective, penalty, penalty_derivative, sigmoid, Combinator, ConstrainedProblem,
    Constraint, ConstraintKind, PenaltyError, PenaltyFamily, PenaltySpec,
};
pub use problems::{make_problem, BenchmarkProblem, GeneratorOptions, ProblemError, ProblemFamily};
pub use scalar::Scalar;

pub type PenaltySpec64 = PenaltySpec<f64>;
pub type PenaltySpec32 = PenaltySpec<f32>;
pub type ConstrainedProblem64 = ConstrainedProblem<f64>;
pub type ConstrainedProblem32 = ConstrainedProblem<f32>;
pub type ErrorQuery64 = ErrorQuery<f64>;
pub type ErrorQuery32 = ErrorQuery<f32>;
pub type OptimOptions64 = OptimOptions<f64>;
pub type OptimOptions32 = OptimOptions<f32>;
pub type BenchmarkProblem64 = BenchmarkProblem<f64>;
pub type BenchmarkProblem32 = BenchmarkProblem<f32>;
