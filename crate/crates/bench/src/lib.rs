//! Shared fixtures for the pipeline benchmarks.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use scatfex_core::synthgen::Signal;
use scatfex_core::{fit, FitConfig, MlrModel};

/// Standard-normal signal of length `d`.
pub fn random_signal(d: usize, seed: u64) -> Signal {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Signal::new(
        (0..d)
            .map(|_| rng.sample(rand_distr::StandardNormal))
            .collect(),
    )
    .expect("finite by construction")
}

/// Random feature matrix with cycling labels, sized like one scattering
/// batch, plus an (all-zero) model fitted at a huge penalty — enough to
/// exercise a full gradient pass at realistic dimensions.
pub fn gradient_fixture(n: usize, p: usize) -> (Array2<f64>, Vec<u32>, MlrModel) {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let features = Array2::from_shape_fn((n, p), |_| rng.gen_range(-1.0..1.0));
    let labels: Vec<u32> = (0..n).map(|i| (i % 3) as u32 + 1).collect();
    let config = FitConfig {
        lambda_grid: vec![1e9],
        max_iter: 5,
        ..FitConfig::default()
    };
    let model = fit(features.view(), &labels, &config).expect("degenerate fit succeeds");
    (features, labels, model)
}
