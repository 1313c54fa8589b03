//! Seeded generators for the two synthetic classification problems, plus
//! dataset CSV persistence.
//!
//! Both generators draw from a [`ChaCha8Rng`] stream seeded with the dataset
//! seed, so equal `(generator, n_per_class, seed)` inputs reproduce the same
//! dataset bit for bit within one build. The generator formulas use 1-based
//! sample indices `i = 1..=d`; stored arrays are 0-based, so array slot `j`
//! holds the value at `i = j + 1`.

use std::fmt;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// Signal length used by both synthetic problems.
pub const SYNTH_LEN: usize = 128;

/// A single real-valued signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Signal {
    samples: Vec<f64>,
}

impl Signal {
    /// Wraps a sample vector, checking the length and finiteness invariants.
    pub fn new(samples: Vec<f64>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(CoreError::Config(format!(
                "signal length must be at least 2, got {}",
                samples.len()
            )));
        }
        if let Some(pos) = samples.iter().position(|v| !v.is_finite()) {
            return Err(CoreError::NonFinite(format!(
                "signal sample {} is {}",
                pos, samples[pos]
            )));
        }
        Ok(Self { samples })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }
}

/// Which synthetic generator produced a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorId {
    Cbf,
    Triangle,
}

impl fmt::Display for GeneratorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeneratorId::Cbf => write!(f, "cbf"),
            GeneratorId::Triangle => write!(f, "triangle"),
        }
    }
}

/// Generation metadata carried by datasets built in-process. Datasets loaded
/// from CSV have no provenance (the file format stores only labels and
/// samples).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub generator: GeneratorId,
    pub seed: u64,
    pub n_per_class: usize,
}

/// Labeled signals with classes in `1..=n_classes`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    pub signals: Vec<Signal>,
    pub labels: Vec<u32>,
    pub n_classes: u32,
    pub provenance: Option<Provenance>,
}

impl LabeledDataset {
    /// Builds a dataset, validating the label-range and equal-count invariants.
    pub fn new(
        signals: Vec<Signal>,
        labels: Vec<u32>,
        n_classes: u32,
        provenance: Option<Provenance>,
    ) -> Result<Self> {
        if signals.len() != labels.len() {
            return Err(CoreError::DimensionMismatch {
                context: "dataset signals vs labels",
                expected: signals.len(),
                actual: labels.len(),
            });
        }
        if let Some(d) = signals.first().map(Signal::len) {
            if let Some(bad) = signals.iter().position(|s| s.len() != d) {
                return Err(CoreError::Config(format!(
                    "signal {} has length {}, expected {}",
                    bad,
                    signals[bad].len(),
                    d
                )));
            }
        }
        if let Some(&bad) = labels.iter().find(|&&l| l < 1 || l > n_classes) {
            return Err(CoreError::Config(format!(
                "label {} outside 1..={}",
                bad, n_classes
            )));
        }
        Ok(Self {
            signals,
            labels,
            n_classes,
            provenance,
        })
    }

    pub fn len(&self) -> usize {
        self.signals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signals.is_empty()
    }

    /// Signal length `d`, or 0 for an empty dataset.
    pub fn signal_len(&self) -> usize {
        self.signals.first().map_or(0, Signal::len)
    }
}

/// Per-signal draw record for the CBF generator, exposed so tests can locate
/// the support interval `[a, b]` of a noisy signal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CbfDraw {
    /// 1-based left edge of the support, drawn uniformly from `16..=32`.
    pub a: u32,
    /// 1-based right edge; `b - a` is drawn uniformly from `32..=96`.
    pub b: u32,
    /// Amplitude perturbation, standard normal.
    pub eta: f64,
}

/// CBF class shapes in generator order: label 1, 2, 3.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CbfClass {
    Cylinder,
    Bell,
    Funnel,
}

impl CbfClass {
    pub const ALL: [CbfClass; 3] = [CbfClass::Cylinder, CbfClass::Bell, CbfClass::Funnel];

    pub fn label(self) -> u32 {
        match self {
            CbfClass::Cylinder => 1,
            CbfClass::Bell => 2,
            CbfClass::Funnel => 3,
        }
    }
}

/// Noiseless CBF shape (`eta = 0`, `epsilon = 0`) on `[a, b]` with 1-based
/// inclusive endpoints. Test hook and plotting overlay.
pub fn cbf_prototype(class: CbfClass, a: u32, b: u32) -> Signal {
    assert!(a >= 1 && b > a && (b as usize) <= SYNTH_LEN, "support out of range");
    let samples = (1..=SYNTH_LEN as u32)
        .map(|i| cbf_value(class, i, a, b, 0.0))
        .collect();
    Signal::new(samples).expect("prototype is finite by construction")
}

fn cbf_value(class: CbfClass, i: u32, a: u32, b: u32, eta: f64) -> f64 {
    if i < a || i > b {
        return 0.0;
    }
    let amp = 6.0 + eta;
    let span = (b - a) as f64;
    match class {
        CbfClass::Cylinder => amp,
        CbfClass::Bell => amp * (i - a) as f64 / span,
        CbfClass::Funnel => amp * (b - i) as f64 / span,
    }
}

/// Generates the Cylinder-Bell-Funnel dataset: `n_per_class` signals per
/// class, length 128, labels 1 = cylinder, 2 = bell, 3 = funnel, stored in
/// class blocks (all cylinders first).
///
/// Per signal the stream draws, in order: the integer support edge `a` from
/// `16..=32`, the integer span `b - a` from `32..=96`, the amplitude
/// perturbation `eta`, then the 128 additive noise values.
pub fn gen_cbf(n_per_class: usize, seed: u64) -> Result<LabeledDataset> {
    gen_cbf_detailed(n_per_class, seed).map(|(ds, _)| ds)
}

/// As [`gen_cbf`], also returning the per-signal `(a, b, eta)` draws in
/// dataset order.
pub fn gen_cbf_detailed(n_per_class: usize, seed: u64) -> Result<(LabeledDataset, Vec<CbfDraw>)> {
    if n_per_class == 0 {
        return Err(CoreError::Config("n_per_class must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut signals = Vec::with_capacity(3 * n_per_class);
    let mut labels = Vec::with_capacity(3 * n_per_class);
    let mut draws = Vec::with_capacity(3 * n_per_class);
    for class in CbfClass::ALL {
        for _ in 0..n_per_class {
            let a: u32 = rng.gen_range(16..=32);
            let span: u32 = rng.gen_range(32..=96);
            let b = a + span;
            let eta: f64 = rng.sample(StandardNormal);
            let samples: Vec<f64> = (1..=SYNTH_LEN as u32)
                .map(|i| {
                    let eps: f64 = rng.sample(StandardNormal);
                    cbf_value(class, i, a, b, eta) + eps
                })
                .collect();
            signals.push(Signal::new(samples)?);
            labels.push(class.label());
            draws.push(CbfDraw { a, b, eta });
        }
    }
    let ds = LabeledDataset::new(
        signals,
        labels,
        3,
        Some(Provenance {
            generator: GeneratorId::Cbf,
            seed,
            n_per_class,
        }),
    )?;
    Ok((ds, draws))
}

/// The triangular bump `h_k`: `h_1(i) = max(6 - |i - 43| / 7, 0)` with `h_2`
/// and `h_3` shifted right by 21 and 42 samples (apices at i = 43, 64, 85).
/// `k` is 1-based.
pub fn triangle_bump(k: u32) -> Signal {
    assert!((1..=3).contains(&k), "bump index must be 1..=3");
    let center = 43.0 + 21.0 * (k - 1) as f64;
    let samples = (1..=SYNTH_LEN as u32)
        .map(|i| (6.0 - (i as f64 - center).abs() / 7.0).max(0.0))
        .collect();
    Signal::new(samples).expect("bump is finite by construction")
}

/// Noiseless triangular-class signal for mixing weight `u`: the convex
/// combination of the two bumps that defines the class. Test hook.
pub fn triangle_prototype(class: u32, u: f64) -> Signal {
    assert!((1..=3).contains(&class), "class must be 1..=3");
    assert!((0.0..=1.0).contains(&u), "u must lie in [0, 1]");
    let (first, second) = triangle_pair(class);
    let h_first = triangle_bump(first);
    let h_second = triangle_bump(second);
    let samples = h_first
        .samples()
        .iter()
        .zip(h_second.samples())
        .map(|(&x, &y)| u * x + (1.0 - u) * y)
        .collect();
    Signal::new(samples).expect("prototype is finite by construction")
}

/// The pair of bump indices mixed by each triangular class.
fn triangle_pair(class: u32) -> (u32, u32) {
    match class {
        1 => (1, 2),
        2 => (1, 3),
        3 => (2, 3),
        _ => unreachable!(),
    }
}

/// Generates the triangular-waveform dataset: random convex combinations of
/// two bumps plus unit white Gaussian noise, length 128, classes 1..=3 in
/// class blocks.
///
/// Per signal the stream draws the mixing weight `u` from `U(0, 1)` followed
/// by the 128 noise values.
pub fn gen_triangle(n_per_class: usize, seed: u64) -> Result<LabeledDataset> {
    if n_per_class == 0 {
        return Err(CoreError::Config("n_per_class must be at least 1".into()));
    }
    let bumps: Vec<Signal> = (1..=3).map(triangle_bump).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut signals = Vec::with_capacity(3 * n_per_class);
    let mut labels = Vec::with_capacity(3 * n_per_class);
    for class in 1..=3u32 {
        let (first, second) = triangle_pair(class);
        let h_first = bumps[(first - 1) as usize].samples();
        let h_second = bumps[(second - 1) as usize].samples();
        for _ in 0..n_per_class {
            let u: f64 = rng.gen_range(0.0..1.0);
            let samples: Vec<f64> = (0..SYNTH_LEN)
                .map(|j| {
                    let eps: f64 = rng.sample(StandardNormal);
                    u * h_first[j] + (1.0 - u) * h_second[j] + eps
                })
                .collect();
            signals.push(Signal::new(samples)?);
            labels.push(class);
        }
    }
    let ds = LabeledDataset::new(
        signals,
        labels,
        3,
        Some(Provenance {
            generator: GeneratorId::Triangle,
            seed,
            n_per_class,
        }),
    )?;
    Ok(ds)
}

/// Writes a dataset as CSV with header `label,s0,...,s{d-1}`. Samples are
/// emitted with the shortest decimal representation that parses back to the
/// identical f64, so a save/load round trip is bit exact.
pub fn save_csv(dataset: &LabeledDataset, path: &Path) -> Result<()> {
    let io_err = |source| CoreError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = std::fs::File::create(path).map_err(io_err)?;
    let mut w = std::io::BufWriter::new(file);
    let d = dataset.signal_len();
    let mut header = String::from("label");
    for j in 0..d {
        header.push_str(&format!(",s{j}"));
    }
    writeln!(w, "{header}").map_err(io_err)?;
    let mut line = String::new();
    for (signal, &label) in dataset.signals.iter().zip(&dataset.labels) {
        line.clear();
        line.push_str(&label.to_string());
        for &v in signal.samples() {
            line.push(',');
            line.push_str(&format!("{v}"));
        }
        writeln!(w, "{line}").map_err(io_err)?;
    }
    w.flush().map_err(io_err)?;
    Ok(())
}

/// Loads a dataset CSV written by [`save_csv`], validating labels against
/// `n_classes` and rejecting ragged rows. Errors carry the 1-based data row
/// and field of the first offending value.
pub fn load_csv(path: &Path, n_classes: u32) -> Result<LabeledDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)
        .map_err(|e| csv_open_error(path, e))?;
    let width = reader.headers().map_err(|e| csv_open_error(path, e))?.len();
    if width < 3 {
        return Err(CoreError::MalformedFile {
            path: path.to_path_buf(),
            row: 0,
            field: 0,
            message: format!("header has {width} columns, need a label plus at least 2 samples"),
        });
    }
    let malformed = |row: usize, field: usize, message: String| CoreError::MalformedFile {
        path: path.to_path_buf(),
        row,
        field,
        message,
    };
    let mut signals = Vec::new();
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
        let mut samples = Vec::with_capacity(width - 1);
        for (f, raw) in record.iter().skip(1).enumerate() {
            let v: f64 = raw
                .trim()
                .parse()
                .map_err(|_| malformed(row, f + 2, format!("sample {raw:?} is not a number")))?;
            if !v.is_finite() {
                return Err(malformed(row, f + 2, format!("sample {v} is not finite")));
            }
            samples.push(v);
        }
        signals.push(Signal::new(samples)?);
        labels.push(label);
    }
    LabeledDataset::new(signals, labels, n_classes, None)
}

fn csv_open_error(path: &Path, e: csv::Error) -> CoreError {
    match e.into_kind() {
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
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cbf_signals_have_length_128() {
        let ds = gen_cbf(4, 9).unwrap();
        assert_eq!(ds.len(), 12);
        assert!(ds.signals.iter().all(|s| s.len() == 128));
    }

    #[test]
    fn cbf_labels_are_balanced_class_blocks() {
        let ds = gen_cbf(5, 3).unwrap();
        for class in 1..=3u32 {
            assert_eq!(ds.labels.iter().filter(|&&l| l == class).count(), 5);
        }
        assert_eq!(&ds.labels[..5], &[1, 1, 1, 1, 1]);
        assert_eq!(&ds.labels[5..10], &[2, 2, 2, 2, 2]);
    }

    #[test]
    fn noiseless_cylinder_is_six_on_support() {
        let proto = cbf_prototype(CbfClass::Cylinder, 16, 48);
        for (j, &v) in proto.samples().iter().enumerate() {
            let i = (j + 1) as u32;
            if (16..=48).contains(&i) {
                assert_eq!(v, 6.0, "i = {i}");
            } else {
                assert_eq!(v, 0.0, "i = {i}");
            }
        }
    }

    #[test]
    fn noiseless_bell_ramp_endpoints() {
        let proto = cbf_prototype(CbfClass::Bell, 16, 48);
        // i = b -> 6, i = a -> 0 (1-based index j + 1).
        assert_eq!(proto.samples()[47], 6.0);
        assert_eq!(proto.samples()[15], 0.0);
    }

    #[test]
    fn noiseless_funnel_mirrors_bell() {
        let proto = cbf_prototype(CbfClass::Funnel, 16, 48);
        assert_eq!(proto.samples()[15], 6.0);
        assert_eq!(proto.samples()[47], 0.0);
    }

    /// Monte Carlo oracle: the support mean of a cylinder is 6 + eta + mean
    /// noise, so averaging over many seeds must approach 6.
    #[test]
    fn cylinder_support_mean_approaches_six() {
        let mut acc = 0.0;
        let n_seeds = 10_000u64;
        for seed in 0..n_seeds {
            let (ds, draws) = gen_cbf_detailed(1, seed).unwrap();
            let draw = draws[0];
            let s = ds.signals[0].samples();
            let lo = (draw.a - 1) as usize;
            let hi = draw.b as usize; // exclusive, 1-based b inclusive
            let window = &s[lo..hi];
            acc += window.iter().sum::<f64>() / window.len() as f64;
        }
        let mean = acc / n_seeds as f64;
        assert!((mean - 6.0).abs() < 0.1, "mean = {mean}");
    }

    #[test]
    fn cbf_generation_is_reproducible() {
        let a = gen_cbf(7, 1234).unwrap();
        let b = gen_cbf(7, 1234).unwrap();
        assert_eq!(a, b);
        let c = gen_cbf(7, 1235).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn noiseless_cbf_is_zero_outside_support() {
        for class in CbfClass::ALL {
            let proto = cbf_prototype(class, 20, 90);
            for (j, &v) in proto.samples().iter().enumerate() {
                let i = (j + 1) as u32;
                if !(20..=90).contains(&i) {
                    assert_eq!(v, 0.0, "class {class:?} i = {i}");
                }
            }
        }
    }

    #[test]
    fn triangle_bump_apices() {
        assert_eq!(triangle_bump(1).samples()[42], 6.0);
        assert_eq!(triangle_bump(2).samples()[63], 6.0);
        assert_eq!(triangle_bump(3).samples()[84], 6.0);
        // h1(1) = 6 - 42/7 = 0 exactly.
        assert_eq!(triangle_bump(1).samples()[0], 0.0);
    }

    #[test]
    fn triangle_prototype_endpoint_is_pure_bump() {
        let proto = triangle_prototype(1, 1.0);
        assert_eq!(proto, triangle_bump(1));
        let proto = triangle_prototype(3, 0.0);
        assert_eq!(proto, triangle_bump(3));
    }

    #[test]
    fn noiseless_triangle_never_exceeds_bump_peak() {
        // A convex combination of bumps is bounded by the pointwise max, 6.
        for class in 1..=3 {
            for u in [0.0, 0.25, 0.5, 0.75, 1.0] {
                let proto = triangle_prototype(class, u);
                let max = proto.samples().iter().cloned().fold(f64::MIN, f64::max);
                assert!(max <= 6.0 + 1e-12, "class {class} u {u} max {max}");
            }
        }
    }

    #[test]
    fn triangle_generation_is_reproducible_and_balanced() {
        let a = gen_triangle(6, 77).unwrap();
        let b = gen_triangle(6, 77).unwrap();
        assert_eq!(a, b);
        for class in 1..=3u32 {
            assert_eq!(a.labels.iter().filter(|&&l| l == class).count(), 6);
        }
        assert!(a.signals.iter().all(|s| s.len() == 128));
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cbf.csv");
        let ds = gen_cbf(5, 7).unwrap();
        save_csv(&ds, &path).unwrap();
        let loaded = load_csv(&path, 3).unwrap();
        assert_eq!(loaded.labels, ds.labels);
        for (a, b) in loaded.signals.iter().zip(&ds.signals) {
            assert_eq!(a.samples(), b.samples());
        }
    }

    #[test]
    fn csv_rejects_out_of_range_label() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad_label.csv");
        let mut f = std::fs::File::create(&path).unwrap();
        writeln!(f, "label,s0,s1").unwrap();
        writeln!(f, "4,0.0,1.0").unwrap();
        drop(f);
        match load_csv(&path, 3) {
            Err(CoreError::MalformedFile { row, field, .. }) => {
                assert_eq!((row, field), (1, 1));
            }
            other => panic!("expected malformed-file error, got {other:?}"),
        }
    }

    #[test]
    fn csv_rejects_ragged_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ragged.csv");
        let mut f = std::fs::File::create(&path).unwrap();
        writeln!(f, "label,s0,s1,s2").unwrap();
        writeln!(f, "1,0.0,1.0,2.0").unwrap();
        writeln!(f, "2,0.5,1.5").unwrap();
        drop(f);
        match load_csv(&path, 3) {
            Err(CoreError::MalformedFile { row, .. }) => assert_eq!(row, 2),
            other => panic!("expected malformed-file error, got {other:?}"),
        }
    }
}
