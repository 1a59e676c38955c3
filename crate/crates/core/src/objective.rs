//! The log joint density `f(β_k) = L_n(β_k) + log π(β_k | k)` for one model.

use std::ops::AddAssign;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::data::{Dataset, ModelIndex};
use crate::error::{invalid_arg, Result};
use crate::likelihood::{weighted_gram, Likelihood, Logistic};
use crate::prior::{log_prior_density, log_prior_gradient, log_prior_hessian, HyperPmomConfig};

/// `f` restricted to one model, with the active design cached.
///
/// The parameter vector holds `β_k` in model order, followed by the
/// intercept when the configuration enables one. Only the `β_k` block is
/// subject to the nonlocal prior; the intercept has a flat prior.
#[derive(Debug, Clone)]
pub struct ModelObjective<'a> {
    k: ModelIndex,
    design: DMatrix<f64>,
    y: &'a DVector<f64>,
    cfg: &'a HyperPmomConfig,
    likelihood: Arc<dyn Likelihood>,
}

impl<'a> ModelObjective<'a> {
    pub fn new(
        data: &'a Dataset,
        cfg: &'a HyperPmomConfig,
        likelihood: Arc<dyn Likelihood>,
        k: &ModelIndex,
    ) -> Result<Self> {
        data.check_model(k)?;
        if k.len() > cfg.max_model_size {
            return Err(invalid_arg(format!(
                "model of size {} exceeds the size cap {}",
                k.len(),
                cfg.max_model_size
            )));
        }
        Ok(Self {
            k: k.clone(),
            design: data.active_design(k, cfg.intercept),
            y: data.y(),
            cfg,
            likelihood,
        })
    }

    /// Objective under the logistic likelihood.
    pub fn logistic(data: &'a Dataset, cfg: &'a HyperPmomConfig, k: &ModelIndex) -> Result<Self> {
        Self::new(data, cfg, Arc::new(Logistic), k)
    }

    pub fn model(&self) -> &ModelIndex {
        &self.k
    }

    pub fn config(&self) -> &HyperPmomConfig {
        self.cfg
    }

    pub fn likelihood(&self) -> &Arc<dyn Likelihood> {
        &self.likelihood
    }

    pub fn design(&self) -> &DMatrix<f64> {
        &self.design
    }

    pub fn response(&self) -> &DVector<f64> {
        self.y
    }

    /// Number of free parameters (`|k|`, plus one with an intercept).
    pub fn dim(&self) -> usize {
        self.design.ncols()
    }

    /// Which parameters carry the nonlocal prior and must stay off zero.
    pub fn sign_constrained(&self) -> Vec<bool> {
        (0..self.dim()).map(|i| i < self.k.len()).collect()
    }

    fn split(&self, theta: &DVector<f64>) -> Result<DVector<f64>> {
        if theta.len() != self.dim() {
            return Err(invalid_arg(format!(
                "expected {} parameters, got {}",
                self.dim(),
                theta.len()
            )));
        }
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(invalid_arg("parameters must be finite"));
        }
        Ok(theta.rows(0, self.k.len()).into_owned())
    }

    fn eta(&self, theta: &DVector<f64>) -> DVector<f64> {
        &self.design * theta
    }

    pub fn value(&self, theta: &DVector<f64>) -> Result<f64> {
        let beta = self.split(theta)?;
        let prior = log_prior_density(self.cfg, &beta)?;
        let ll = if self.dim() == 0 {
            self.likelihood.null_log_lik(self.y)
        } else {
            self.likelihood.log_lik_eta(self.y, &self.eta(theta))
        };
        Ok(ll + prior)
    }

    pub fn gradient(&self, theta: &DVector<f64>) -> Result<DVector<f64>> {
        self.value_and_gradient(theta).map(|(_, g)| g)
    }

    pub fn value_and_gradient(&self, theta: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
        let beta = self.split(theta)?;
        let prior = log_prior_density(self.cfg, &beta)?;
        if self.dim() == 0 {
            return Ok((self.likelihood.null_log_lik(self.y) + prior, DVector::zeros(0)));
        }
        let eta = self.eta(theta);
        let ll = self.likelihood.log_lik_eta(self.y, &eta);
        let mut grad = self.design.tr_mul(&self.likelihood.eta_gradient(self.y, &eta));
        let prior_grad = log_prior_gradient(self.cfg, &beta)?;
        grad.rows_mut(0, beta.len()).add_assign(&prior_grad);
        Ok((ll + prior, grad))
    }

    /// Hessian `V` of `f`; negative definite at a strict local maximum.
    pub fn hessian(&self, theta: &DVector<f64>) -> Result<DMatrix<f64>> {
        let beta = self.split(theta)?;
        let d = self.dim();
        if d == 0 {
            return Ok(DMatrix::zeros(0, 0));
        }
        let eta = self.eta(theta);
        let mut v = -weighted_gram(&self.design, &self.likelihood.eta_curvature(self.y, &eta));
        let prior_h = log_prior_hessian(self.cfg, &beta)?;
        let kk = beta.len();
        v.view_mut((0, 0), (kk, kk)).add_assign(&prior_h);
        Ok(v)
    }
}

/// `f(β_k)` under the logistic likelihood.
pub fn log_objective_f(
    data: &Dataset,
    cfg: &HyperPmomConfig,
    k: &ModelIndex,
    beta: &DVector<f64>,
) -> Result<f64> {
    ModelObjective::logistic(data, cfg, k)?.value(beta)
}

/// `∇f(β_k)` under the logistic likelihood.
pub fn grad_f(
    data: &Dataset,
    cfg: &HyperPmomConfig,
    k: &ModelIndex,
    beta: &DVector<f64>,
) -> Result<DVector<f64>> {
    ModelObjective::logistic(data, cfg, k)?.gradient(beta)
}

/// `V(β_k) = ∇²f(β_k)` under the logistic likelihood.
pub fn hessian_v(
    data: &Dataset,
    cfg: &HyperPmomConfig,
    k: &ModelIndex,
    beta: &DVector<f64>,
) -> Result<DMatrix<f64>> {
    ModelObjective::logistic(data, cfg, k)?.hessian(beta)
}
