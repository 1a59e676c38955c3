mod common;

use std::sync::Arc;

use common::{logistic_data, nonzero_point};
use hyperpmom::likelihood::{self, Likelihood, LikelihoodRegistry};
use hyperpmom::search::run_search_with;
use hyperpmom::{Algorithm, HyperPmomConfig, ModelIndex, ModelScorer, SearchConfig};
use hyperpmom_oracle::finite_diff::{central_gradient, central_jacobian, relative_error};
use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Unit-variance Gaussian pseudo-likelihood `−½ Σ (yᵢ − ηᵢ)²`.
#[derive(Debug)]
struct Quadratic;

impl Likelihood for Quadratic {
    fn name(&self) -> &str {
        "quadratic"
    }

    fn log_lik_eta(&self, y: &DVector<f64>, eta: &DVector<f64>) -> f64 {
        -0.5 * (y - eta).norm_squared()
    }

    fn eta_gradient(&self, y: &DVector<f64>, eta: &DVector<f64>) -> DVector<f64> {
        y - eta
    }

    fn eta_curvature(&self, _y: &DVector<f64>, eta: &DVector<f64>) -> DVector<f64> {
        DVector::from_element(eta.len(), 1.0)
    }
}

/// Derivative contract every likelihood must satisfy.
fn check_contract(lik: &dyn Likelihood, seed: u64) {
    let data = logistic_data(40, 6, &[1.0, -1.0], seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for k in [vec![0], vec![1, 3], vec![0, 2, 5]] {
        let k = ModelIndex::new(k).unwrap();
        for _ in 0..10 {
            let b = nonzero_point(&mut rng, k.len(), 0.1, 2.0);
            let s = lik.score(&data, &k, &b).unwrap();
            let fd = central_gradient(|v| lik.log_lik(&data, &k, v).unwrap(), &b, 1e-6);
            assert!(relative_error(s.as_slice(), fd.as_slice(), 1e-8) < 1e-5);
            let h = lik.neg_hessian(&data, &k, &b).unwrap();
            let fd_h = -central_jacobian(|v| lik.score(&data, &k, v).unwrap(), &b, 1e-5);
            let (hv, fv): (Vec<f64>, Vec<f64>) = (h.iter().copied().collect(), fd_h.iter().copied().collect());
            assert!(relative_error(&hv, &fv, 1e-8) < 1e-4);
            assert!(nalgebra::SymmetricEigen::new(h).eigenvalues.iter().all(|e| *e >= -1e-10));
        }
    }
    let empty = lik.log_lik(&data, &ModelIndex::empty(), &DVector::zeros(0)).unwrap();
    assert!((empty - lik.null_log_lik(data.y())).abs() < 1e-12);
}

#[test]
fn logistic_satisfies_the_contract() {
    let lik = likelihood::resolve("logistic").unwrap();
    check_contract(lik.as_ref(), 1);
}

#[test]
fn pseudo_likelihood_satisfies_the_contract() {
    check_contract(&Quadratic, 2);
}

#[test]
fn resolved_logistic_delegates_to_model_core() {
    let data = logistic_data(30, 4, &[1.0], 3);
    let lik = likelihood::resolve("logistic").unwrap();
    let k = ModelIndex::new(vec![0, 2]).unwrap();
    let b = DVector::from_vec(vec![0.7, -1.3]);
    let a = lik.log_lik(&data, &k, &b).unwrap();
    let direct = likelihood::log_likelihood(&data, &k, &b).unwrap();
    assert!((a - direct).abs() < 1e-12);
}

#[test]
fn unknown_names_list_registered_likelihoods() {
    let err = likelihood::resolve("probit").unwrap_err().to_string();
    assert!(err.contains("probit") && err.contains("logistic"), "{err}");
    let mut reg = LikelihoodRegistry::default();
    reg.register(Arc::new(Quadratic));
    assert_eq!(reg.names(), vec!["logistic", "quadratic"]);
    assert_eq!(reg.resolve("quadratic").unwrap().name(), "quadratic");
}

#[test]
fn full_pipeline_runs_on_the_pseudo_likelihood() {
    let data = logistic_data(100, 12, &[2.0, 2.0], 4);
    let prior = HyperPmomConfig::defaults_for(100, 12);
    let mut reg = LikelihoodRegistry::default();
    reg.register(Arc::new(Quadratic));
    let scorer = ModelScorer::new(&data, &prior, reg.resolve("quadratic").unwrap());
    let sm = scorer.log_marginal(&ModelIndex::new(vec![0, 1]).unwrap()).unwrap();
    assert!(sm.converged && sm.log_laplace_marginal.is_finite());
    // The pseudo-likelihood is Gaussian in β, so the mode satisfies the
    // first-order condition of f built from the contract alone.
    let obj = scorer.objective(&sm.k).unwrap();
    let g = obj.gradient(&DVector::from_vec(sm.beta_hat.clone())).unwrap();
    assert!(g.amax() < 1e-4);
    for algorithm in [Algorithm::Sss, Algorithm::Rsss] {
        let cfg = SearchConfig { n_iterations: 20, seed: 5, algorithm, ..Default::default() };
        let a = run_search_with(&scorer, &cfg).unwrap();
        let b = run_search_with(&scorer, &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.best_log_posterior.is_finite());
    }
}
