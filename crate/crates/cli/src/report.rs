use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Width of the time window used for the mass-concentration check on
/// extracted CBF signals.
pub const LOCALIZATION_WINDOW: usize = 48;

/// Fraction of total L1 mass a window (or disjoint window pair) must
/// capture to count as localized.
pub const LOCALIZATION_MASS: f64 = 0.80;

/// Minimum share each window of a cylinder pair must carry, so a single
/// plateau cannot pass as two concentrations.
pub const LOCALIZATION_PAIR_MIN: f64 = 0.10;

/// Experiment report. `results` holds every derived quantity and is
/// bit-reproducible under an identical config; `timings_ms` is wall-clock
/// bookkeeping and excluded from reproducibility comparisons.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub results: Results,
    pub timings_ms: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Results {
    pub dataset: String,
    pub n_train_per_class: usize,
    pub n_test_per_class: usize,
    pub master_seed: u64,
    pub scattering_output_dim: usize,
    pub test_accuracy: f64,
    /// Accuracy of nearest-template classification of the test set by the
    /// extracted signals (soft diagnostic; no pass threshold).
    pub template_accuracy: f64,
    pub lambda_selected: f64,
    /// Count of nonzero β entries per class, classes 1..=K in order.
    pub per_class_nonzeros: Vec<usize>,
    pub kkt: KktReport,
    /// Per-class extraction outcomes, classes 1..=K in order.
    pub extraction: Vec<ClassExtraction>,
    /// Mass-concentration check of extracted signals; CBF only.
    pub localization: Option<LocalizationReport>,
    pub mu: f64,
    pub nu: f64,
    pub notes: Vec<String>,
}

/// Stationarity residuals of the trained model on the training features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KktReport {
    /// max(0, |gradient| − λ) over coordinates with β = 0.
    pub zero: f64,
    /// |gradient + λ·sign(β)| over coordinates with β ≠ 0.
    pub active: f64,
    /// |gradient| over intercepts.
    pub intercept: f64,
    pub tol: f64,
    /// All three residuals within 10 × tol.
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassExtraction {
    pub class: u32,
    pub best_objective: f64,
    /// Model probability of the target class at the extracted signal.
    pub p_target: f64,
    /// Class the model actually assigns to the extracted signal.
    pub argmax_class: u32,
    /// argmax_class == class.
    pub self_consistent: bool,
    /// p_target ≥ 0.9.
    pub prob_pass: bool,
    pub evals_used: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizationReport {
    pub window_width: usize,
    pub mass_threshold: f64,
    /// Classes 1..=K in order (1 = cylinder, 2 = bell, 3 = funnel).
    pub per_class: Vec<ClassLocalization>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassLocalization {
    pub class: u32,
    pub best_window_start: usize,
    /// Fraction of total L1 mass inside the best single window.
    pub best_window_mass: f64,
    /// Best disjoint second window (cylinder check); `None` for classes
    /// judged on a single window.
    pub second_window_start: Option<usize>,
    pub second_window_mass: Option<f64>,
    pub passed: bool,
}

/// Fraction of the signal's L1 mass inside the best window of width `w`,
/// with the window's start index. Windows do not wrap around the edges.
pub fn best_window(x: &[f64], w: usize) -> (usize, f64) {
    assert!(w >= 1 && w <= x.len(), "window must fit inside the signal");
    let total: f64 = x.iter().map(|v| v.abs()).sum();
    if total == 0.0 {
        return (0, 0.0);
    }
    let mut mass: f64 = x[..w].iter().map(|v| v.abs()).sum();
    let (mut best_start, mut best_mass) = (0, mass);
    for start in 1..=x.len() - w {
        mass += x[start + w - 1].abs() - x[start - 1].abs();
        if mass > best_mass {
            best_mass = mass;
            best_start = start;
        }
    }
    (best_start, best_mass / total)
}

/// Best pair of non-overlapping windows of width `w`, as
/// `((start_a, frac_a), (start_b, frac_b))` maximizing the combined mass
/// fraction, with `start_a < start_b`.
pub fn best_disjoint_windows(x: &[f64], w: usize) -> ((usize, f64), (usize, f64)) {
    assert!(2 * w <= x.len(), "two windows must fit inside the signal");
    let total: f64 = x.iter().map(|v| v.abs()).sum();
    if total == 0.0 {
        return ((0, 0.0), (w, 0.0));
    }
    let n_starts = x.len() - w + 1;
    let mut window: Vec<f64> = Vec::with_capacity(n_starts);
    let mut mass: f64 = x[..w].iter().map(|v| v.abs()).sum();
    window.push(mass);
    for start in 1..n_starts {
        mass += x[start + w - 1].abs() - x[start - 1].abs();
        window.push(mass);
    }
    // best_from[j] = argmax of window mass over starts ≥ j
    let mut best_from = vec![n_starts - 1; n_starts];
    for j in (0..n_starts - 1).rev() {
        best_from[j] = if window[j] >= window[best_from[j + 1]] {
            j
        } else {
            best_from[j + 1]
        };
    }
    let mut best = (0usize, w, f64::NEG_INFINITY);
    for a in 0..n_starts - w {
        let b = best_from[a + w];
        let combined = window[a] + window[b];
        if combined > best.2 {
            best = (a, b, combined);
        }
    }
    let (a, b, _) = best;
    ((a, window[a] / total), (b, window[b] / total))
}

impl Report {
    pub fn save(&self, stage: &'static str, json_path: &Path, text_path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self).expect("report serialization cannot fail");
        std::fs::write(json_path, json).map_err(|e| {
            CliError::stage(stage, format!("cannot write {}: {e}", json_path.display()))
        })?;
        std::fs::write(text_path, self.to_text()).map_err(|e| {
            CliError::stage(stage, format!("cannot write {}: {e}", text_path.display()))
        })
    }

    pub fn to_text(&self) -> String {
        let r = &self.results;
        let mut s = String::new();
        let _ = writeln!(s, "experiment report");
        let _ = writeln!(s, "=================");
        let _ = writeln!(
            s,
            "dataset: {} ({} train/class, {} test/class, master seed {})",
            r.dataset, r.n_train_per_class, r.n_test_per_class, r.master_seed
        );
        let _ = writeln!(s, "scattering output dim: {}", r.scattering_output_dim);
        let _ = writeln!(s, "test accuracy: {:.4}", r.test_accuracy);
        let _ = writeln!(s, "template accuracy: {:.4}", r.template_accuracy);
        let _ = writeln!(s, "selected lambda: {:.6e}", r.lambda_selected);
        let _ = writeln!(s, "nonzero betas per class: {:?}", r.per_class_nonzeros);
        let _ = writeln!(
            s,
            "kkt residuals (tol {:.1e}): zero {:.3e}, active {:.3e}, intercept {:.3e} -> {}",
            r.kkt.tol,
            r.kkt.zero,
            r.kkt.active,
            r.kkt.intercept,
            pass(r.kkt.passed)
        );
        let _ = writeln!(s, "extraction (mu {:.3e}, nu {:.3e}):", r.mu, r.nu);
        for e in &r.extraction {
            let _ = writeln!(
                s,
                "  class {}: objective {:.4}, p_target {:.4}, argmax {}, self-consistent {}, p>=0.9 {}, evals {}",
                e.class,
                e.best_objective,
                e.p_target,
                e.argmax_class,
                pass(e.self_consistent),
                pass(e.prob_pass),
                e.evals_used
            );
        }
        if let Some(loc) = &r.localization {
            let _ = writeln!(
                s,
                "localization (window {}, mass threshold {:.2}): {}",
                loc.window_width,
                loc.mass_threshold,
                pass(loc.passed)
            );
            for c in &loc.per_class {
                match (c.second_window_start, c.second_window_mass) {
                    (Some(b), Some(mb)) => {
                        let _ = writeln!(
                            s,
                            "  class {}: windows at {} ({:.3}) and {} ({:.3}) -> {}",
                            c.class,
                            c.best_window_start,
                            c.best_window_mass,
                            b,
                            mb,
                            pass(c.passed)
                        );
                    }
                    _ => {
                        let _ = writeln!(
                            s,
                            "  class {}: window at {} holds {:.3} of L1 mass -> {}",
                            c.class, c.best_window_start, c.best_window_mass, pass(c.passed)
                        );
                    }
                }
            }
        }
        let _ = writeln!(s, "timings (ms):");
        for (k, v) in &self.timings_ms {
            let _ = writeln!(s, "  {k}: {v:.1}");
        }
        for note in &r.notes {
            let _ = writeln!(s, "note: {note}");
        }
        s
    }
}

fn pass(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "FAIL"
    }
}
