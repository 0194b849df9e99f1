//! Numerical identification of scalar parameters (fractional orders and a
//! constant coefficient) in multi-term fractional differential operators of
//! subdiffusion-with-memory models, from a discrete, noise-corrupted,
//! space-integrated observation.
//!
//! The toolkit has three layers:
//!
//! * exact fractional calculus on generalized power series ([`series`],
//!   [`special`]) — Caputo derivatives, Riemann-Liouville convolutions and
//!   Mittag-Leffler evaluation used both by the estimators and as test
//!   oracles;
//! * the regularized reconstruction machinery ([`basis`], [`regularize`],
//!   [`identify`]) — a mixed power/shifted-Jacobi design basis, penalized
//!   least squares with quasi-optimality parameter selection, and the
//!   three-step order/coefficient recovery pipeline;
//! * problem generators and validation ([`problems`], [`directsim`]) — the
//!   built-in analytic benchmark models, deterministic noise shapes, and a
//!   finite-difference solver for the direct initial-boundary value problem.

pub mod basis;
pub mod directsim;
pub mod error;
pub mod identify;
pub mod problems;
pub mod regularize;
pub mod series;
pub mod special;

pub use basis::DesignBasis;
pub use error::FracError;
pub use identify::{
    CoeffSpec, Estimate, FdoType, ModelSpec, OperatorSpec, OperatorTerm, OrderSpec, ReconConfig,
    SourceTerm, Strategy,
};
pub use problems::{NoiseKind, NoiseSpec, Observation, SignPolicy};
pub use regularize::{FitResult, RegularizationGrid};
pub use series::PowerSeries;
