//! Second-order 1-D scattering transform: two layers of wavelet circular
//! convolution and modulus with fractional subsampling, then lowpass
//! averaging and a final subsampling.
//!
//! Convolutions are evaluated in the Fourier domain. Subsampling by a real
//! rate `r >= 1` is band-limited resampling: the spectrum is truncated to the
//! lowest `floor(len / r)` frequencies symmetric about DC and inverted at the
//! shorter length. A length-`n` input therefore shrinks along the documented
//! chain `n -> floor(n/r1) -> floor(n/r1/r2) -> t_out`.

pub(crate) mod fft;
pub mod reference;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::synthgen::{LabeledDataset, Signal};

/// Wavelet family for the bandpass layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Wavelet {
    /// Second derivative of a Gaussian; Fourier profile `w^2 * exp(-w^2/2)`.
    MexicanHat,
}

impl Default for Wavelet {
    fn default() -> Self {
        Wavelet::MexicanHat
    }
}

/// Geometry of the transform.
///
/// Filter center frequencies are derived from `j`: each layer places its
/// filters geometrically between `len / 2^(j+1)` and the layer Nyquist
/// `len / 2` (in cycles per signal, floored at 1), and the averaging filter
/// is a Gaussian whose time-domain standard deviation is `2^j` samples of the
/// original signal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScatteringConfig {
    /// Input signal length.
    #[serde(default = "default_d")]
    pub d: usize,
    /// Number of first-layer wavelet filters.
    #[serde(default = "default_n1")]
    pub n_filters_1: usize,
    /// Number of second-layer wavelet filters.
    #[serde(default = "default_n2")]
    pub n_filters_2: usize,
    /// Subsampling rate after the first layer.
    #[serde(default = "default_r")]
    pub r1: f64,
    /// Subsampling rate after the second layer.
    #[serde(default = "default_r")]
    pub r2: f64,
    /// Subsampling rate after the final averaging.
    #[serde(default = "default_ra")]
    pub ra: f64,
    /// Averaging scale exponent.
    #[serde(default = "default_j")]
    pub j: u32,
    #[serde(default)]
    pub wavelet: Wavelet,
}

fn default_d() -> usize {
    128
}

fn default_n1() -> usize {
    14
}

fn default_n2() -> usize {
    11
}

fn default_r() -> f64 {
    1.5
}

fn default_ra() -> f64 {
    8.0
}

fn default_j() -> u32 {
    5
}

impl ScatteringConfig {
    /// Settings matching the 128-sample synthetic experiments: 14 and 11
    /// filters, rates 1.5 / 1.5 / 8, giving 7 output samples per path and
    /// 1078 coefficients in total.
    pub fn synth_default() -> Self {
        Self {
            d: 128,
            n_filters_1: 14,
            n_filters_2: 11,
            r1: 1.5,
            r2: 1.5,
            ra: 8.0,
            j: 5,
            wavelet: Wavelet::MexicanHat,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d < 2 {
            return Err(CoreError::Config(format!("d must be >= 2, got {}", self.d)));
        }
        for (name, r) in [("r1", self.r1), ("r2", self.r2), ("ra", self.ra)] {
            if !(r >= 1.0) || !r.is_finite() {
                return Err(CoreError::Config(format!("{name} must be >= 1, got {r}")));
            }
        }
        if self.n_filters_1 == 0 || self.n_filters_2 == 0 {
            return Err(CoreError::Config("filter counts must be >= 1".into()));
        }
        if self.j == 0 {
            return Err(CoreError::Config("averaging scale j must be >= 1".into()));
        }
        if self.t_out() < 1 {
            return Err(CoreError::Config(format!(
                "subsampling chain d={} r1={} r2={} ra={} leaves no output samples",
                self.d, self.r1, self.r2, self.ra
            )));
        }
        Ok(())
    }

    /// Length after the first subsampling, `floor(d / r1)`.
    pub fn layer2_len(&self) -> usize {
        subsampled_len(self.d, self.r1)
    }

    /// Length after the second subsampling.
    pub fn lowpass_len(&self) -> usize {
        subsampled_len(self.layer2_len(), self.r2)
    }

    /// Output samples per `(lambda1, lambda2)` path.
    pub fn t_out(&self) -> usize {
        subsampled_len(self.lowpass_len(), self.ra)
    }

    /// Total coefficient count `n_filters_1 * n_filters_2 * t_out`.
    pub fn output_dim(&self) -> usize {
        self.n_filters_1 * self.n_filters_2 * self.t_out()
    }
}

/// `floor(n / r)` with the division done in f64, as used throughout the chain.
pub fn subsampled_len(n: usize, r: f64) -> usize {
    (n as f64 / r).floor() as usize
}

/// Frequency-domain filters for both layers plus the averaging filter.
/// Spectra are real (zero phase) and stored at full length over two-sided
/// bins; immutable once built and shareable across threads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterBank {
    pub config: ScatteringConfig,
    layer1: Vec<Vec<f64>>,
    layer2: Vec<Vec<f64>>,
    lowpass: Vec<f64>,
}

impl FilterBank {
    pub fn layer1(&self) -> &[Vec<f64>] {
        &self.layer1
    }

    pub fn layer2(&self) -> &[Vec<f64>] {
        &self.layer2
    }

    pub fn lowpass(&self) -> &[f64] {
        &self.lowpass
    }

    /// Pointwise sum of squared magnitudes over a layer's filters.
    pub fn littlewood_paley(filters: &[Vec<f64>]) -> Vec<f64> {
        let n = filters[0].len();
        let mut sum = vec![0.0; n];
        for f in filters {
            for (s, &v) in sum.iter_mut().zip(f) {
                *s += v * v;
            }
        }
        sum
    }
}

/// Two-sided frequency index of bin `q` in a length-`n` spectrum, in cycles
/// per signal.
fn bin_freq(q: usize, n: usize) -> f64 {
    q.min(n - q) as f64
}

/// Dilated Mexican-hat magnitude profile peaking at 1 when `omega == xi`.
fn mexican_hat(omega: f64, xi: f64) -> f64 {
    let u = omega / xi;
    u * u * (1.0 - u * u).exp()
}

fn wavelet_layer(len: usize, count: usize, j: u32) -> Vec<Vec<f64>> {
    let nyquist = len as f64 / 2.0;
    let xi_min = (len as f64 / 2f64.powi(j as i32 + 1)).max(1.0).min(nyquist);
    let centers: Vec<f64> = if count == 1 {
        vec![(xi_min * nyquist).sqrt()]
    } else {
        let ratio = nyquist / xi_min;
        (0..count)
            .map(|k| xi_min * ratio.powf(k as f64 / (count - 1) as f64))
            .collect()
    };
    let mut filters: Vec<Vec<f64>> = centers
        .iter()
        .map(|&xi| (0..len).map(|q| mexican_hat(bin_freq(q, len), xi)).collect())
        .collect();
    // Normalize so the Littlewood-Paley sum peaks at exactly 1.
    let peak = FilterBank::littlewood_paley(&filters)
        .iter()
        .cloned()
        .fold(0.0f64, f64::max);
    let scale = peak.sqrt().recip();
    for f in &mut filters {
        for v in f.iter_mut() {
            *v *= scale;
        }
    }
    filters
}

/// Gaussian averaging filter of length `len` whose time-domain standard
/// deviation is `2^j` samples at the original rate `d`.
fn gaussian_lowpass(len: usize, j: u32, d: usize) -> Vec<f64> {
    let sigma_t = 2f64.powi(j as i32) * len as f64 / d as f64;
    let c = 2.0 * (std::f64::consts::PI * sigma_t / len as f64).powi(2);
    (0..len)
        .map(|q| {
            let w = bin_freq(q, len);
            (-c * w * w).exp()
        })
        .collect()
}

/// Builds the frequency-domain filter bank for `config`.
pub fn build_filter_bank(config: &ScatteringConfig) -> Result<FilterBank> {
    config.validate()?;
    let layer1 = wavelet_layer(config.d, config.n_filters_1, config.j);
    let layer2 = wavelet_layer(config.layer2_len(), config.n_filters_2, config.j);
    let lowpass = gaussian_lowpass(config.lowpass_len(), config.j, config.d);
    let bank = FilterBank {
        config: *config,
        layer1,
        layer2,
        lowpass,
    };
    debug_assert!(bank
        .layer1
        .iter()
        .chain(&bank.layer2)
        .all(|f| f[0].abs() < 1e-10));
    Ok(bank)
}

/// Keeps the lowest `m` frequencies of a length-`n` spectrum, symmetric about
/// DC. For even `m` the split Nyquist pair is averaged into the single target
/// Nyquist bin, which preserves conjugate symmetry of real signals.
fn truncate_spectrum(x: &[Complex64], m: usize) -> Vec<Complex64> {
    let n = x.len();
    debug_assert!(m >= 1 && m <= n);
    if m == n {
        return x.to_vec();
    }
    let mut out = vec![Complex64::new(0.0, 0.0); m];
    out[0] = x[0];
    if m % 2 == 1 {
        let h = m / 2;
        for q in 1..=h {
            out[q] = x[q];
            out[m - q] = x[n - q];
        }
    } else {
        let h = m / 2;
        for q in 1..h {
            out[q] = x[q];
            out[m - q] = x[n - q];
        }
        out[h] = 0.5 * (x[h] + x[n - h]);
    }
    out
}

/// Multiplies a spectrum by a real filter, truncates to `m` bins, and inverts.
/// `n` is the original signal length; the `1/n` factor makes the r = 1
/// all-pass case the identity and preserves sinusoid amplitudes across rates.
fn conv_subsample_spectrum(x_hat: &[Complex64], filter_hat: &[f64], m: usize) -> Vec<f64> {
    let n = x_hat.len();
    let filtered: Vec<Complex64> = x_hat
        .iter()
        .zip(filter_hat)
        .map(|(&x, &f)| x * f)
        .collect();
    let mut kept = truncate_spectrum(&filtered, m);
    fft::inverse(&mut kept);
    let scale = 1.0 / n as f64;
    let max_re = kept.iter().fold(0.0f64, |acc, c| acc.max(c.re.abs())) * scale;
    let out: Vec<f64> = kept.iter().map(|c| c.re * scale).collect();
    debug_assert!(
        kept.iter()
            .all(|c| c.im.abs() * scale <= 1e-10 * max_re.max(1.0)),
        "imaginary residue above 1e-10 after inverse transform"
    );
    out
}

/// Circular convolution of `x` with a frequency-domain filter, followed by
/// band-limited subsampling at rate `r`. Output length is `floor(len(x)/r)`.
pub fn circ_conv_subsample(x: &[f64], filter_hat: &[f64], r: f64) -> Result<Vec<f64>> {
    if x.len() != filter_hat.len() {
        return Err(CoreError::DimensionMismatch {
            context: "signal vs filter spectrum",
            expected: x.len(),
            actual: filter_hat.len(),
        });
    }
    if !(r >= 1.0) || !r.is_finite() {
        return Err(CoreError::Config(format!("subsampling rate must be >= 1, got {r}")));
    }
    let m = subsampled_len(x.len(), r);
    if m < 1 {
        return Err(CoreError::Config(format!(
            "rate {r} leaves no samples from length {}",
            x.len()
        )));
    }
    let x_hat = fft::forward_real(x);
    Ok(conv_subsample_spectrum(&x_hat, filter_hat, m))
}

/// Second-order scattering coefficients of one signal, flattened over
/// `(lambda1, lambda2, t)` with `lambda1` outermost.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringVector {
    coeffs: Vec<f64>,
    n_filters_1: usize,
    n_filters_2: usize,
    t_out: usize,
}

impl ScatteringVector {
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn t_out(&self) -> usize {
        self.t_out
    }

    /// Flat position of coefficient `(lambda1, lambda2, t)`.
    pub fn flat_index(&self, lambda1: usize, lambda2: usize, t: usize) -> usize {
        debug_assert!(lambda1 < self.n_filters_1 && lambda2 < self.n_filters_2 && t < self.t_out);
        (lambda1 * self.n_filters_2 + lambda2) * self.t_out + t
    }

    pub fn get(&self, lambda1: usize, lambda2: usize, t: usize) -> f64 {
        self.coeffs[self.flat_index(lambda1, lambda2, t)]
    }
}

/// Applies the full two-layer cascade to one signal.
pub fn scatter2(x: &Signal, bank: &FilterBank) -> Result<ScatteringVector> {
    scatter2_samples(x.samples(), bank)
}

/// As [`scatter2`] for a raw sample slice.
pub fn scatter2_samples(x: &[f64], bank: &FilterBank) -> Result<ScatteringVector> {
    let cfg = &bank.config;
    if x.len() != cfg.d {
        return Err(CoreError::DimensionMismatch {
            context: "signal vs scattering config d",
            expected: cfg.d,
            actual: x.len(),
        });
    }
    let m1 = cfg.layer2_len();
    let m2 = cfg.lowpass_len();
    let t_out = cfg.t_out();
    let mut coeffs = vec![0.0; cfg.output_dim()];
    let x_hat = fft::forward_real(x);
    for (l1, psi1) in bank.layer1.iter().enumerate() {
        let mut u1 = conv_subsample_spectrum(&x_hat, psi1, m1);
        for v in &mut u1 {
            *v = v.abs();
        }
        let u1_hat = fft::forward_real(&u1);
        for (l2, psi2) in bank.layer2.iter().enumerate() {
            let mut u2 = conv_subsample_spectrum(&u1_hat, psi2, m2);
            for v in &mut u2 {
                *v = v.abs();
            }
            let u2_hat = fft::forward_real(&u2);
            let mut s = conv_subsample_spectrum(&u2_hat, &bank.lowpass, t_out);
            clamp_negative(&mut s);
            let base = (l1 * cfg.n_filters_2 + l2) * t_out;
            coeffs[base..base + t_out].copy_from_slice(&s);
        }
    }
    Ok(ScatteringVector {
        coeffs,
        n_filters_1: cfg.n_filters_1,
        n_filters_2: cfg.n_filters_2,
        t_out,
    })
}

/// Zeroes resampling ringing below 0. The pre-clamp magnitude must stay
/// within 1e-8 of the path's coefficient scale; the Gaussian averaging filter
/// vanishes outside the kept band, so anything larger indicates a bank
/// construction bug.
fn clamp_negative(s: &mut [f64]) {
    let scale = s.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    for v in s.iter_mut() {
        if *v < 0.0 {
            debug_assert!(
                -*v <= 1e-8 * scale,
                "negative averaging output {v} exceeds the ringing bound at scale {scale}"
            );
            *v = 0.0;
        }
    }
}

/// Scattering coefficients for every dataset signal, row `i` matching signal
/// `i`. Rows are computed in parallel; output ordering is deterministic.
pub fn scatter_batch(dataset: &LabeledDataset, bank: &FilterBank) -> Result<ndarray::Array2<f64>> {
    let p = bank.config.output_dim();
    let rows: Vec<Vec<f64>> = dataset
        .signals
        .par_iter()
        .map(|s| scatter2(s, bank).map(|v| v.coeffs))
        .collect::<Result<_>>()?;
    let mut out = ndarray::Array2::zeros((rows.len(), p));
    for (i, row) in rows.into_iter().enumerate() {
        out.row_mut(i)
            .iter_mut()
            .zip(row)
            .for_each(|(dst, v)| *dst = v);
    }
    Ok(out)
}

/// Writes a labeled feature matrix as CSV with header `label,f0,...,f{p-1}`.
/// Floats use shortest-roundtrip formatting, so [`load_features_csv`]
/// recovers them bit-exactly.
pub fn save_features_csv(
    features: &ndarray::Array2<f64>,
    labels: &[u32],
    path: &std::path::Path,
) -> Result<()> {
    if features.nrows() != labels.len() {
        return Err(CoreError::DimensionMismatch {
            context: "feature rows vs labels",
            expected: labels.len(),
            actual: features.nrows(),
        });
    }
    let io_err = |source| CoreError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = std::fs::File::create(path).map_err(io_err)?;
    let mut w = std::io::BufWriter::new(file);
    use std::io::Write as _;
    let p = features.ncols();
    let mut header = String::from("label");
    for j in 0..p {
        header.push_str(&format!(",f{j}"));
    }
    writeln!(w, "{header}").map_err(io_err)?;
    let mut line = String::new();
    for (row, &label) in features.outer_iter().zip(labels) {
        line.clear();
        line.push_str(&label.to_string());
        for &v in row.iter() {
            line.push(',');
            line.push_str(&format!("{v}"));
        }
        writeln!(w, "{line}").map_err(io_err)?;
    }
    w.flush().map_err(io_err)?;
    Ok(())
}

/// Loads a feature CSV written by [`save_features_csv`]. Labels are checked
/// against `1..=n_classes`; every value must be finite, and all rows must
/// match the header width. Errors carry the 1-based data row and field of
/// the first offending value.
pub fn load_features_csv(
    path: &std::path::Path,
    n_classes: u32,
) -> Result<(ndarray::Array2<f64>, Vec<u32>)> {
    let open_err = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(source) => CoreError::Io {
            path: path.to_path_buf(),
            source,
        },
        other => CoreError::MalformedFile {
            path: path.to_path_buf(),
            row: 0,
            field: 0,
            message: format!("{other:?}"),
        },
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)
        .map_err(open_err)?;
    let width = reader.headers().map_err(open_err)?.len();
    if width < 2 {
        return Err(CoreError::MalformedFile {
            path: path.to_path_buf(),
            row: 0,
            field: 0,
            message: format!("header has {width} columns, need a label plus at least 1 feature"),
        });
    }
    let malformed = |row: usize, field: usize, message: String| CoreError::MalformedFile {
        path: path.to_path_buf(),
        row,
        field,
        message,
    };
    let p = width - 1;
    let mut values = Vec::new();
    let mut labels = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let row = idx + 1;
        let record = record.map_err(|e| malformed(row, 0, e.to_string()))?;
        if record.len() != width {
            return Err(malformed(
                row,
                record.len(),
                format!("row has {} fields, expected {width}", record.len()),
            ));
        }
        let label: u32 = record[0]
            .trim()
            .parse()
            .map_err(|_| malformed(row, 1, format!("label {:?} is not an integer", &record[0])))?;
        if label < 1 || label > n_classes {
            return Err(malformed(
                row,
                1,
                format!("label {label} outside 1..={n_classes}"),
            ));
        }
        for (f, raw) in record.iter().skip(1).enumerate() {
            let v: f64 = raw
                .trim()
                .parse()
                .map_err(|_| malformed(row, f + 2, format!("feature {raw:?} is not a number")))?;
            if !v.is_finite() {
                return Err(malformed(row, f + 2, format!("feature {v} is not finite")));
            }
            values.push(v);
        }
        labels.push(label);
    }
    let n = labels.len();
    let features = ndarray::Array2::from_shape_vec((n, p), values)
        .expect("row-major feature buffer matches (n, p)");
    Ok((features, labels))
}
