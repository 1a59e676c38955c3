//! Slow, independent reference computations for validating `hyperpmom`.
//!
//! Nothing here is used on production paths. The routines favour
//! transparency over speed:
//!
//! - [`quadrature`]: adaptive Gauss–Kronrod integration in one dimension,
//!   nested for two.
//! - [`marginal`]: model evidence by direct integration of `exp f(β_k)` over
//!   every orthant, and a hierarchical `(β, τ)` integration that never uses
//!   the closed-form τ-marginal.
//! - [`exhaustive`]: the posterior mode over all small models.
//! - [`finite_diff`]: central differences and a golden-section maximizer.

pub mod exhaustive;
pub mod finite_diff;
pub mod marginal;
pub mod quadrature;

pub use exhaustive::{exhaustive_mode, ExhaustiveMode};
pub use marginal::{hierarchical_marginal, quadrature_marginal, QuadratureSpec};

/// Errors raised by the oracles.
#[derive(Debug, thiserror::Error)]
pub enum OracleError {
    #[error(transparent)]
    Core(#[from] hyperpmom::Error),
    #[error("quadrature did not converge: {0}")]
    NotConverged(String),
    #[error("refused: {0}")]
    Refused(String),
}

pub type Result<T> = std::result::Result<T, OracleError>;
