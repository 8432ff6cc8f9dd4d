//! Multivariate initial sequence estimators for Markov chain Monte Carlo
//! output analysis.
//!
//! Given a chain of recorded values `g(X_1), …, g(X_n)` from a reversible
//! Markov chain, the estimators in [`estimators`] approximate the
//! asymptotic covariance `Σ` of `√n (μ_n - μ)`. [`diagnostics`] turns an
//! estimate into an effective sample size or a confidence region,
//! [`samplers`] provides the seeded test processes, and [`experiments`]
//! replicates them to measure coverage.

pub mod acov;
pub mod chain;
pub mod diagnostics;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod samplers;
pub mod symmat;

pub use chain::{Chain, ChainFormat};
pub use diagnostics::{Region, RegionKind};
pub use error::{Error, Result};
pub use estimators::{Estimator, Method, MkStart, MvEstimate, UvEstimate};
pub use experiments::{ExperimentConfig, ReplicationReport};
pub use symmat::{Spectrum, SymMatrix};
