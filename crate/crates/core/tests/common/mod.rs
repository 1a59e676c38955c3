#![allow(dead_code)]

use hyperpmom::Dataset;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Standardized Gaussian design with logistic responses drawn from `beta`
/// (padded with zeros to length `p`).
pub fn logistic_data(n: usize, p: usize, beta: &[f64], seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal));
    let y: Vec<f64> = (0..n)
        .map(|i| {
            let eta: f64 = beta.iter().enumerate().map(|(j, b)| b * x[(i, j)]).sum();
            f64::from(rng.random::<f64>() < 1.0 / (1.0 + (-eta).exp()))
        })
        .collect();
    Dataset::standardize(x, &y).expect("random design is not constant")
}

/// Random point with entries of magnitude in `[lo, hi]` and random signs.
pub fn nonzero_point(rng: &mut ChaCha8Rng, dim: usize, lo: f64, hi: f64) -> nalgebra::DVector<f64> {
    nalgebra::DVector::from_fn(dim, |_, _| {
        let m = rng.random_range(lo..hi);
        if rng.random_bool(0.5) { m } else { -m }
    })
}
