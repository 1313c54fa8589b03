//! Pink (1/f) noise synthesized in the frequency domain: white Gaussian
//! spectral amplitudes shaped by f^(-1/2), DC removed, inverted to time, and
//! normalized to unit RMS.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::scattering::fft;

/// One pink-noise realization of length `d ≥ 2`: zero mean (DC bin is
/// exactly 0) and unit RMS, with expected power spectral density ∝ 1/f.
pub fn pink_noise(d: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pink_noise_with_rng(d, &mut rng)
}

pub(crate) fn pink_noise_with_rng(d: usize, rng: &mut impl Rng) -> Vec<f64> {
    assert!(d >= 2, "pink noise needs at least 2 samples");
    let mut spectrum = vec![Complex64::new(0.0, 0.0); d];
    let half = d / 2;
    for q in 1..=half {
        let shape = (q as f64).powf(-0.5);
        if d % 2 == 0 && q == half {
            // Nyquist bin of an even-length real signal must be real.
            let g: f64 = rng.sample(StandardNormal);
            spectrum[q] = Complex64::new(g * shape, 0.0);
        } else {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            spectrum[q] = Complex64::new(re * shape, im * shape);
            spectrum[d - q] = spectrum[q].conj();
        }
    }
    fft::inverse(&mut spectrum);
    let mut x: Vec<f64> = spectrum.iter().map(|c| c.re / d as f64).collect();
    let rms = (x.iter().map(|v| v * v).sum::<f64>() / d as f64).sqrt();
    assert!(rms > 0.0, "degenerate pink noise draw");
    for v in &mut x {
        *v /= rms;
    }
    x
}
