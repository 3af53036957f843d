//! Exact solution paths for l1-penalized regression and classification whose
//! coefficients satisfy group-wise linear equality constraints.
//!
//! The estimator minimizes
//!
//! ```text
//!     sum_i l(y_i, x_i' beta) + lambda * ||beta||_1
//!     subject to  d_k' beta_k = 0   for each coefficient group k,
//! ```
//!
//! where the loss `l` is piecewise quadratic in a residual (`y - x'beta`) or a
//! classification margin (`y * x'beta`). The central application is log-contrast
//! regression on compositional data, where each group of log-transformed
//! components carries a zero-sum constraint, but any per-group linear constraint
//! with at least two nonzero weights is supported.
//!
//! Because the loss is piecewise quadratic and the penalty is polyhedral, the
//! solution `beta(lambda)` is piecewise linear in `lambda`. [`path::solve_path`]
//! computes it exactly, kink by kink, from `lambda_max` (where `beta = 0` first
//! becomes suboptimal) down to zero, by solving one small linear system per
//! segment and stepping to the nearest of five event types (termination, sign
//! drop, residual knot crossing, group activation, coefficient activation).
//!
//! The crate deliberately ships its own referee: [`oracle`] contains a fixed-λ
//! operator-splitting solver and a grid brute-forcer that share no code with the
//! path algorithm, and [`kkt::verify_kkt`] checks optimality of any candidate
//! solution from first principles. [`select`] layers BIC, cross-validation,
//! adaptive (reweighted) penalties, and stability selection on top of the path.
//!
//! The crate is `no_std`-compatible (with `alloc`); disable the default `std`
//! feature for embedded use. File formats, CSV ingestion, and the command-line
//! front end live in the companion `comlasso` crate.

#![cfg_attr(not(feature = "std"), no_std)]
#![deny(unsafe_code)]

extern crate alloc;

pub mod groups;
pub mod kkt;
pub mod linalg;
pub mod loss;
pub mod oracle;
pub mod path;
pub mod problem;
pub mod select;

mod error;
mod math;

pub use error::ModelError;
pub use groups::GroupStructure;
pub use kkt::{lambda_max, verify_kkt, Activation, DualInterval, LambdaMaxResult, VerifyReport};
pub use loss::{LossSpec, ResidualKind};
pub use oracle::{brute_force_tiny, solve_fixed_lambda, FixedLambdaSolver, OracleOptions};
pub use path::{solve_path, Kink, KinkEvent, PathOptions, PathStatus, SolutionPath};
pub use problem::ProblemSpec;
