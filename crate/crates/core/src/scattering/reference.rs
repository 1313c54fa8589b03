//! Slow reference implementations used as oracles for the FFT pipeline.
//!
//! Everything here is computed the obvious way: direct `O(n^2)` DFT sums,
//! time-domain circular convolution against the filter's impulse response,
//! and band-limited resampling by explicit evaluation of the kept Fourier
//! series. No shared code with the fast path beyond the filter bank itself.

use num_complex::Complex64;

use super::{subsampled_len, FilterBank};

/// Direct-sum DFT.
pub fn naive_dft(x: &[f64]) -> Vec<Complex64> {
    let n = x.len();
    (0..n)
        .map(|q| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (t, &v) in x.iter().enumerate() {
                let ang = -2.0 * std::f64::consts::PI * q as f64 * t as f64 / n as f64;
                acc += v * Complex64::new(ang.cos(), ang.sin());
            }
            acc
        })
        .collect()
}

/// Time-domain impulse response of a real frequency-domain filter.
pub fn impulse_response(filter_hat: &[f64]) -> Vec<f64> {
    let n = filter_hat.len();
    (0..n)
        .map(|t| {
            let mut acc = 0.0;
            for (q, &f) in filter_hat.iter().enumerate() {
                let ang = 2.0 * std::f64::consts::PI * q as f64 * t as f64 / n as f64;
                acc += f * ang.cos();
            }
            acc / n as f64
        })
        .collect()
}

/// Plain circular convolution by summation.
pub fn circular_convolve(x: &[f64], h: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|t| {
            let mut acc = 0.0;
            for (s, &v) in x.iter().enumerate() {
                acc += v * h[(n + t - s) % n];
            }
            acc
        })
        .collect()
}

/// Band-limited resampling to `m = floor(n / r)` points: evaluates the
/// Fourier series restricted to the lowest `m` frequencies on the coarse
/// grid, averaging the split Nyquist pair when `m` is even.
pub fn band_resample(x: &[f64], r: f64) -> Vec<f64> {
    let n = x.len();
    let m = subsampled_len(n, r);
    let spec = naive_dft(x);
    let mut kept: Vec<(usize, Complex64)> = vec![(0, spec[0])];
    if m == n {
        for q in 1..n {
            kept.push((q, spec[q]));
        }
    } else if m % 2 == 1 {
        for q in 1..=m / 2 {
            kept.push((q, spec[q]));
            kept.push((m - q, spec[n - q]));
        }
    } else {
        for q in 1..m / 2 {
            kept.push((q, spec[q]));
            kept.push((m - q, spec[n - q]));
        }
        kept.push((m / 2, 0.5 * (spec[m / 2] + spec[n - m / 2])));
    }
    (0..m)
        .map(|s| {
            let mut acc = Complex64::new(0.0, 0.0);
            for &(q, c) in &kept {
                let ang = 2.0 * std::f64::consts::PI * q as f64 * s as f64 / m as f64;
                acc += c * Complex64::new(ang.cos(), ang.sin());
            }
            acc.re / n as f64
        })
        .collect()
}

/// Reference counterpart of [`super::circ_conv_subsample`].
pub fn conv_subsample(x: &[f64], filter_hat: &[f64], r: f64) -> Vec<f64> {
    let h = impulse_response(filter_hat);
    let y = circular_convolve(x, &h);
    band_resample(&y, r)
}

/// Reference counterpart of [`super::scatter2`], mirroring the modulus and
/// negative-clamp steps.
pub fn scatter2(x: &[f64], bank: &FilterBank) -> Vec<f64> {
    let cfg = &bank.config;
    assert_eq!(x.len(), cfg.d);
    let mut out = Vec::with_capacity(cfg.output_dim());
    for psi1 in bank.layer1() {
        let u1: Vec<f64> = conv_subsample(x, psi1, cfg.r1)
            .into_iter()
            .map(f64::abs)
            .collect();
        for psi2 in bank.layer2() {
            let u2: Vec<f64> = conv_subsample(&u1, psi2, cfg.r2)
                .into_iter()
                .map(f64::abs)
                .collect();
            let s = conv_subsample(&u2, bank.lowpass(), cfg.ra);
            out.extend(s.into_iter().map(|v| v.max(0.0)));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn naive_dft_matches_analytic_cosine() {
        let n = 16;
        let x: Vec<f64> = (0..n)
            .map(|t| (2.0 * std::f64::consts::PI * 3.0 * t as f64 / n as f64).cos())
            .collect();
        let spec = naive_dft(&x);
        for (q, c) in spec.iter().enumerate() {
            let expect = if q == 3 || q == n - 3 { n as f64 / 2.0 } else { 0.0 };
            assert!((c.re - expect).abs() < 1e-9, "bin {q}");
            assert!(c.im.abs() < 1e-9, "bin {q}");
        }
    }

    #[test]
    fn band_resample_rate_one_is_identity() {
        let x: Vec<f64> = (0..12).map(|t| (t as f64 * 0.7).sin()).collect();
        let y = band_resample(&x, 1.0);
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn band_resample_preserves_inband_cosine_amplitude() {
        let n = 24;
        // Frequency 2 survives resampling to length 12 and 6.
        let x: Vec<f64> = (0..n)
            .map(|t| (2.0 * std::f64::consts::PI * 2.0 * t as f64 / n as f64).cos())
            .collect();
        for r in [2.0, 4.0] {
            let y = band_resample(&x, r);
            let m = y.len();
            for (s, &v) in y.iter().enumerate() {
                let expect = (2.0 * std::f64::consts::PI * 2.0 * s as f64 / m as f64).cos();
                assert!((v - expect).abs() < 1e-9, "r {r} sample {s}");
            }
        }
    }

    #[test]
    fn convolution_with_unit_impulse_is_identity() {
        let x: Vec<f64> = (0..10).map(|t| t as f64 - 4.0).collect();
        let mut h = vec![0.0; 10];
        h[0] = 1.0;
        let y = circular_convolve(&x, &h);
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
