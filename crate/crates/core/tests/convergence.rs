use hyperpmom::simulate::{generate, Covariance, SimDesign, Signal};
use hyperpmom::{HyperPmomConfig, ModelIndex, ModelScorer};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Ridge-started BFGS converges quickly on strong-signal, isotropic designs
/// for every model of up to five covariates we throw at it.
#[test]
fn ridge_start_converges_within_two_hundred_iterations() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0;
    for seed in 0..10 {
        let sim = generate(&SimDesign::new(100, Signal::Moderate, Covariance::Isotropic, seed)).unwrap();
        let prior = HyperPmomConfig::defaults_for(100, 100);
        let scorer = ModelScorer::logistic(&sim.train, &prior);
        let mut models = vec![sim.true_support.clone()];
        for size in 1..=5 {
            for _ in 0..4 {
                models.push(ModelIndex::new(sample(&mut rng, 100, size).into_vec()).unwrap());
            }
            // Mixtures of true and noise covariates.
            let mut mixed: Vec<usize> = (0..size.min(3)).collect();
            while mixed.len() < size {
                let j = rng.random_range(3..100);
                if !mixed.contains(&j) {
                    mixed.push(j);
                }
            }
            models.push(ModelIndex::new(mixed).unwrap());
        }
        for k in &models {
            let sm = scorer.log_marginal(k).unwrap();
            assert!(sm.converged, "model {k} seed {seed}");
            assert!(sm.iterations < 200, "model {k} seed {seed}: {} iterations", sm.iterations);
            worst = worst.max(sm.iterations);
        }
    }
    eprintln!("most BFGS iterations used: {worst}");
}
