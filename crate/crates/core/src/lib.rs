//! Bayesian variable selection for high-dimensional logistic regression
//! under the hierarchical product-moment (hyper-pMOM) nonlocal prior.
//!
//! The crate is organised bottom-up:
//!
//! - [`data`]: standardized datasets and model index sets.
//! - [`likelihood`]: the GLM likelihood seam and the logistic implementation.
//! - [`prior`]: hyper-pMOM density terms, hyperparameter defaults and the
//!   model-space prior.
//! - [`objective`]: the log joint density `f(β_k)` with analytic gradient and
//!   Hessian.
//! - [`optimize`]: orthant-preserving BFGS.
//! - [`laplace`]: posterior modes and Laplace-approximate model evidence.
//! - [`search`]: shotgun stochastic search (full and reduced neighbourhoods).
//! - [`simulate`]: synthetic designs with train/test splits.
//! - [`metrics`]: selection and prediction quality measures.

pub mod data;
pub mod error;
pub mod laplace;
pub mod likelihood;
pub mod metrics;
pub mod objective;
pub mod optimize;
pub mod prior;
pub mod search;
pub mod simulate;

pub use data::{Dataset, ModelIndex};
pub use error::{Error, Result};
pub use laplace::{log_marginal, log_posterior_ratio, ModelScorer, ScoredModel};
pub use likelihood::{Likelihood, LikelihoodRegistry, Logistic};
pub use objective::ModelObjective;
pub use prior::HyperPmomConfig;
pub use search::{run_search, Algorithm, InitialModel, SearchConfig, SearchTrace};
pub use simulate::{generate, Covariance, SimDesign, Signal, Simulated};
