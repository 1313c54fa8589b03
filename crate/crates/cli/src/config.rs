use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use scatfex_core::synthgen::SYNTH_LEN;
use scatfex_core::{DeConfig, FitConfig, InitKind, ScatteringConfig};

use crate::error::{CliError, Result};

/// Which synthetic three-class problem to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    Cbf,
    Triangle,
}

impl DatasetKind {
    pub fn n_classes(self) -> u32 {
        3
    }
}

impl fmt::Display for DatasetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DatasetKind::Cbf => write!(f, "cbf"),
            DatasetKind::Triangle => write!(f, "triangle"),
        }
    }
}

/// Search hyperparameters exposed in the config file. The search box is not
/// configurable: bounds are derived from the training data (±10 × the
/// largest absolute DCT coefficient per slot), so the file stays free of
/// run-derived values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeSettings {
    /// Population size; `null` derives 8 × search dimension, clamped to
    /// [4, 512].
    #[serde(default)]
    pub pop_size: Option<usize>,
    #[serde(default = "default_f")]
    pub f: f64,
    #[serde(default = "default_cr")]
    pub cr: f64,
    #[serde(default = "default_max_evals")]
    pub max_evals: usize,
    #[serde(default = "default_init")]
    pub init: InitKind,
    /// Base search seed; `null` derives `master_seed + 2`. The extraction
    /// stage offsets it per class either way.
    #[serde(default)]
    pub seed: Option<u64>,
}

fn default_f() -> f64 {
    0.8
}

fn default_cr() -> f64 {
    0.9
}

fn default_max_evals() -> usize {
    200_000
}

fn default_init() -> InitKind {
    InitKind::Pink
}

impl Default for DeSettings {
    fn default() -> Self {
        Self {
            pop_size: None,
            f: default_f(),
            cr: default_cr(),
            max_evals: default_max_evals(),
            init: default_init(),
            seed: None,
        }
    }
}

impl DeSettings {
    /// Lowers the settings into a full search config for the given box.
    pub fn to_de_config(&self, bounds: Vec<f64>, seed: u64) -> DeConfig {
        let pop_size = self
            .pop_size
            .unwrap_or_else(|| (8 * bounds.len()).clamp(4, 512));
        DeConfig {
            pop_size,
            f: self.f,
            cr: self.cr,
            max_evals: self.max_evals,
            seed,
            init: self.init,
            bounds,
        }
    }
}

/// Full experiment description. Every omitted field takes the documented
/// default, and `--print-config` dumps the resolved value of all of them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetKind,
    #[serde(default = "default_n_train")]
    pub n_train_per_class: usize,
    #[serde(default = "default_n_test")]
    pub n_test_per_class: usize,
    #[serde(default = "ScatteringConfig::synth_default")]
    pub scattering: ScatteringConfig,
    #[serde(default)]
    pub fit: FitConfig,
    #[serde(default)]
    pub de: DeSettings,
    /// L1 penalty weight on the extracted signal.
    #[serde(default = "default_mu")]
    pub mu: f64,
    /// Forward-difference gradient-norm penalty weight.
    #[serde(default = "default_nu")]
    pub nu: f64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "default_master_seed")]
    pub master_seed: u64,
}

fn default_n_train() -> usize {
    100
}

fn default_n_test() -> usize {
    1000
}

fn default_mu() -> f64 {
    0.1
}

fn default_nu() -> f64 {
    0.1
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_master_seed() -> u64 {
    42
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dataset: DatasetKind::Cbf,
            n_train_per_class: default_n_train(),
            n_test_per_class: default_n_test(),
            scattering: ScatteringConfig::synth_default(),
            fit: FitConfig::default(),
            de: DeSettings::default(),
            mu: default_mu(),
            nu: default_nu(),
            output_dir: default_output_dir(),
            master_seed: default_master_seed(),
        }
    }
}

/// Seeds for the random stages, derived from `master_seed` (with an
/// optional `de.seed` override) so the config file pins the whole
/// experiment. The search seed is further offset per class inside the
/// extraction stage.
#[derive(Debug, Clone, Copy)]
pub struct Seeds {
    pub train: u64,
    pub test: u64,
    pub de: u64,
}

impl ExperimentConfig {
    /// Reads and validates a config file; errors name the offending field
    /// or line.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let cfg: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies command-line overrides, then re-validates.
    pub fn with_overrides(mut self, seed: Option<u64>, out: Option<PathBuf>) -> Result<Self> {
        if let Some(seed) = seed {
            self.master_seed = seed;
        }
        if let Some(out) = out {
            self.output_dir = out;
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if self.n_train_per_class == 0 {
            return bad("n_train_per_class must be at least 1".into());
        }
        if self.n_test_per_class == 0 {
            return bad("n_test_per_class must be at least 1".into());
        }
        self.scattering
            .validate()
            .map_err(|e| CliError::Config(format!("scattering: {e}")))?;
        if self.scattering.d != SYNTH_LEN {
            return bad(format!(
                "scattering.d is {}, but both generators emit {SYNTH_LEN}-sample signals",
                self.scattering.d
            ));
        }
        self.fit
            .validate()
            .map_err(|e| CliError::Config(format!("fit: {e}")))?;
        if let Some(pop) = self.de.pop_size {
            if pop < 4 {
                return bad(format!("de.pop_size must be at least 4, got {pop}"));
            }
        }
        if !(self.de.f > 0.0 && self.de.f <= 2.0) {
            return bad(format!("de.f must be in (0, 2], got {}", self.de.f));
        }
        if !(0.0..=1.0).contains(&self.de.cr) {
            return bad(format!("de.cr must be in [0, 1], got {}", self.de.cr));
        }
        if self.de.max_evals == 0 {
            return bad("de.max_evals must be at least 1".into());
        }
        for (name, v) in [("mu", self.mu), ("nu", self.nu)] {
            if !v.is_finite() || v < 0.0 {
                return bad(format!("{name} must be finite and >= 0, got {v}"));
            }
        }
        if self.output_dir.as_os_str().is_empty() {
            return bad("output_dir must not be empty".into());
        }
        Ok(())
    }

    pub fn seeds(&self) -> Seeds {
        Seeds {
            train: self.master_seed,
            test: self.master_seed.wrapping_add(1),
            de: self.de.seed.unwrap_or(self.master_seed.wrapping_add(2)),
        }
    }

    /// Canonical JSON used for hashing and `--print-config`.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialization cannot fail")
    }

    /// Hash binding artifacts to the resolved config that produced them.
    pub fn hash(&self) -> String {
        crate::artifacts::sha256_hex(self.canonical_json().as_bytes())
    }
}
