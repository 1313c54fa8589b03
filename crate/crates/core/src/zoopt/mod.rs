//! Zeroth-order extraction of class-revealing signals: minimize
//! `1/p_k(x) + μ‖x‖₁ + ν‖∇x‖₂` over signals `x` parameterized by their
//! orthonormal DCT coefficients, using Differential Evolution with
//! pink-noise initial candidates.

mod dct;
mod de;
mod pink;

pub use dct::{dct_forward, dct_inverse};
pub use de::{minimize, DeConfig, DeOutcome, InitKind};
pub use pink::pink_noise;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::mlr::{argmax_first, MlrModel};
use crate::scattering::{scatter2_samples, FilterBank};
use crate::synthgen::LabeledDataset;

/// The minimization target for one class: a trained model, the filter bank
/// its features came from, and the penalty weights of the two regularizers.
#[derive(Debug, Clone)]
pub struct ObjectiveSpec {
    pub model: MlrModel,
    pub bank: FilterBank,
    /// 1-based class whose probability is maximized.
    pub target_class: u32,
    /// L1 (sparsity) weight μ ≥ 0.
    pub mu: f64,
    /// Gradient-norm (smoothness) weight ν ≥ 0.
    pub nu: f64,
}

impl ObjectiveSpec {
    pub fn validate(&self) -> Result<()> {
        let p = self.bank.config.output_dim();
        if self.model.n_features() != p {
            return Err(CoreError::DimensionMismatch {
                context: "model features vs scattering output",
                expected: p,
                actual: self.model.n_features(),
            });
        }
        if self.target_class == 0 || self.target_class as usize > self.model.n_classes() {
            return Err(CoreError::Config(format!(
                "target_class {} outside 1..={}",
                self.target_class,
                self.model.n_classes()
            )));
        }
        for (name, v) in [("mu", self.mu), ("nu", self.nu)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(CoreError::Config(format!("{name} must be >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// Euclidean norm of the non-circular forward differences
/// `(x_1 - x_0, …, x_{d-1} - x_{d-2})`; 0 for signals shorter than 2.
pub fn grad_norm(x: &[f64]) -> f64 {
    x.windows(2)
        .map(|w| (w[1] - w[0]) * (w[1] - w[0]))
        .sum::<f64>()
        .sqrt()
}

/// Eq.-style objective `1/p_k(x) + μ‖x‖₁ + ν‖∇x‖₂`; always finite and ≥ 1
/// since softmax keeps `p_k` in (0, 1).
pub fn objective_eval(x: &[f64], spec: &ObjectiveSpec) -> Result<f64> {
    let sv = scatter2_samples(x, &spec.bank)?;
    let probs = spec.model.predict_proba(sv.coeffs())?;
    let p_k = probs[spec.target_class as usize - 1];
    let l1: f64 = x.iter().map(|v| v.abs()).sum();
    Ok(1.0 / p_k + spec.mu * l1 + spec.nu * grad_norm(x))
}

/// One extraction run: the winning signal and the search trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoRun {
    pub target_class: u32,
    pub mu: f64,
    pub nu: f64,
    pub config: DeConfig,
    /// Extracted signal in the time domain.
    pub best_x: Vec<f64>,
    pub best_value: f64,
    /// Best objective per generation, non-increasing.
    pub history: Vec<f64>,
    pub evals_used: usize,
}

/// Runs DE over DCT coefficients for `spec`; the candidate signal is
/// `dct_inverse(c)`, so `config.bounds` must have one slot per sample of the
/// signal length `d`.
pub fn de_minimize(spec: &ObjectiveSpec, config: &DeConfig) -> Result<ZoRun> {
    spec.validate()?;
    config.validate()?;
    let d = spec.bank.config.d;
    if config.bounds.len() != d {
        return Err(CoreError::DimensionMismatch {
            context: "DE bounds vs signal length",
            expected: d,
            actual: config.bounds.len(),
        });
    }
    let objective = |c: &[f64]| {
        let x = dct_inverse(c);
        objective_eval(&x, spec).expect("dimensions validated before search")
    };
    let out = minimize(objective, config)?;
    Ok(ZoRun {
        target_class: spec.target_class,
        mu: spec.mu,
        nu: spec.nu,
        config: config.clone(),
        best_x: dct_inverse(&out.best),
        best_value: out.best_value,
        history: out.history,
        evals_used: out.evals_used,
    })
}

/// One [`de_minimize`] run per class with derived seeds (`seed + k`),
/// results in class order 1..=K.
pub fn extract_all_classes(
    model: &MlrModel,
    bank: &FilterBank,
    mu: f64,
    nu: f64,
    config: &DeConfig,
) -> Result<Vec<ZoRun>> {
    (1..=model.n_classes() as u32)
        .map(|k| {
            let spec = ObjectiveSpec {
                model: model.clone(),
                bank: bank.clone(),
                target_class: k,
                mu,
                nu,
            };
            let mut cfg = config.clone();
            cfg.seed = config.seed.wrapping_add(k as u64);
            de_minimize(&spec, &cfg)
        })
        .collect()
}

/// Classifies each dataset signal by its highest normalized circular
/// cross-correlation against the K class templates (template index + 1 is
/// the predicted label, ties toward the smaller index) and returns accuracy.
pub fn template_classify(templates: &[Vec<f64>], dataset: &LabeledDataset) -> Result<f64> {
    if templates.len() != dataset.n_classes as usize {
        return Err(CoreError::Config(format!(
            "{} templates for {} classes",
            templates.len(),
            dataset.n_classes
        )));
    }
    let d = dataset.signals[0].len();
    for t in templates {
        if t.len() != d {
            return Err(CoreError::DimensionMismatch {
                context: "template vs signal length",
                expected: d,
                actual: t.len(),
            });
        }
    }
    let template_norms: Vec<f64> = templates
        .iter()
        .map(|t| t.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    let mut hits = 0usize;
    for (signal, &label) in dataset.signals.iter().zip(&dataset.labels) {
        let x = signal.samples();
        let x_norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let scores: Vec<f64> = templates
            .iter()
            .zip(&template_norms)
            .map(|(t, &tn)| {
                if tn == 0.0 || x_norm == 0.0 {
                    return 0.0;
                }
                let mut best = f64::NEG_INFINITY;
                for shift in 0..d {
                    let mut dot = 0.0;
                    for i in 0..d {
                        dot += x[(i + shift) % d] * t[i];
                    }
                    best = best.max(dot);
                }
                best / (tn * x_norm)
            })
            .collect();
        if argmax_first(&scores) as u32 + 1 == label {
            hits += 1;
        }
    }
    Ok(hits as f64 / dataset.labels.len() as f64)
}
