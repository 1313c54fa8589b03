//! Differential Evolution, classic rand/1/bin: mutation by scaled vector
//! differences, binomial crossover with a forced slot, greedy selection, and
//! box bounds enforced by clipping.
//!
//! Trial vectors are generated serially from one seeded RNG; only the (pure)
//! objective evaluations run in parallel, with results collected in index
//! order, so a run is reproducible bit-for-bit regardless of worker count.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dct::dct_forward;
use super::pink::pink_noise_with_rng;
use crate::error::{CoreError, Result};

/// Spectrum shape of the initial candidate signals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitKind {
    /// 1/f-shaped Gaussian noise (natural-signal prior).
    Pink,
    /// Flat-spectrum Gaussian noise.
    White,
}

/// Search hyperparameters. The dimension of the search space equals
/// `bounds.len()`; each slot is confined to `[-bounds[j], bounds[j]]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeConfig {
    pub pop_size: usize,
    /// Differential weight, in (0, 2].
    pub f: f64,
    /// Crossover rate, in [0, 1].
    pub cr: f64,
    /// Evaluation budget; generations stop before exceeding it.
    pub max_evals: usize,
    pub seed: u64,
    pub init: InitKind,
    /// Per-slot box half-widths (positive).
    pub bounds: Vec<f64>,
}

impl DeConfig {
    /// Standard robust settings for a given search box: F = 0.8, CR = 0.9,
    /// population 8 × dimension capped at 512, 200k evaluations, pink init.
    pub fn defaults_for(bounds: Vec<f64>, seed: u64) -> Self {
        let pop_size = (8 * bounds.len()).clamp(4, 512);
        Self {
            pop_size,
            f: 0.8,
            cr: 0.9,
            max_evals: 200_000,
            seed,
            init: InitKind::Pink,
            bounds,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.pop_size < 4 {
            return Err(CoreError::Config(format!(
                "pop_size must be >= 4 (rand/1 needs 3 donors plus the target), got {}",
                self.pop_size
            )));
        }
        if !(self.f > 0.0 && self.f <= 2.0) {
            return Err(CoreError::Config(format!("F must lie in (0, 2], got {}", self.f)));
        }
        if !(0.0..=1.0).contains(&self.cr) {
            return Err(CoreError::Config(format!("CR must lie in [0, 1], got {}", self.cr)));
        }
        if self.max_evals == 0 {
            return Err(CoreError::Config("max_evals must be >= 1".into()));
        }
        if self.bounds.is_empty() {
            return Err(CoreError::Config("bounds must define at least one slot".into()));
        }
        if self.bounds.iter().any(|&b| !(b > 0.0) || !b.is_finite()) {
            return Err(CoreError::Config("bounds entries must be positive and finite".into()));
        }
        Ok(())
    }
}

/// Result of a generic minimization.
#[derive(Debug, Clone, PartialEq)]
pub struct DeOutcome {
    pub best: Vec<f64>,
    pub best_value: f64,
    /// Best objective after initialization and after each generation;
    /// non-increasing by greedy selection.
    pub history: Vec<f64>,
    pub evals_used: usize,
}

/// Generations with no meaningful improvement before stopping early.
const STALL_GENERATIONS: usize = 50;
const STALL_RELATIVE: f64 = 1e-8;

/// Minimizes an arbitrary objective over the configured box. Initial
/// candidates are noise vectors (per `config.init`) expressed in the search
/// domain via the orthonormal DCT, clipped to the box.
pub fn minimize<F>(objective: F, config: &DeConfig) -> Result<DeOutcome>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    config.validate()?;
    let dim = config.bounds.len();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let clip = |v: f64, j: usize| v.clamp(-config.bounds[j], config.bounds[j]);

    let mut pop: Vec<Vec<f64>> = (0..config.pop_size)
        .map(|_| {
            let time_domain = match config.init {
                InitKind::Pink => pink_noise_with_rng(dim.max(2), &mut rng),
                InitKind::White => {
                    let mut x: Vec<f64> =
                        (0..dim.max(2)).map(|_| rng.sample(rand_distr::StandardNormal)).collect();
                    let rms = (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt();
                    if rms > 0.0 {
                        x.iter_mut().for_each(|v| *v /= rms);
                    }
                    x
                }
            };
            let mut c = dct_forward(&time_domain);
            c.truncate(dim);
            for (j, v) in c.iter_mut().enumerate() {
                *v = clip(*v, j);
            }
            c
        })
        .collect();

    let mut values = eval_batch(&objective, &pop)?;
    let mut evals_used = pop.len();
    let mut best_idx = argmin(&values);
    let mut history = vec![values[best_idx]];

    while evals_used + config.pop_size <= config.max_evals {
        // Serial trial generation keeps the RNG stream identical across
        // worker counts.
        let trials: Vec<Vec<f64>> = (0..config.pop_size)
            .map(|i| {
                let (r1, r2, r3) = pick_donors(&mut rng, config.pop_size, i);
                let jrand = rng.gen_range(0..dim);
                (0..dim)
                    .map(|j| {
                        if j == jrand || rng.gen::<f64>() < config.cr {
                            clip(pop[r1][j] + config.f * (pop[r2][j] - pop[r3][j]), j)
                        } else {
                            pop[i][j]
                        }
                    })
                    .collect()
            })
            .collect();
        let trial_values = eval_batch(&objective, &trials)?;
        evals_used += trials.len();
        for (i, (trial, value)) in trials.into_iter().zip(trial_values).enumerate() {
            if value <= values[i] {
                pop[i] = trial;
                values[i] = value;
            }
        }
        best_idx = argmin(&values);
        history.push(values[best_idx]);

        if history.len() > STALL_GENERATIONS {
            let before = history[history.len() - 1 - STALL_GENERATIONS];
            let now = history[history.len() - 1];
            if before - now < STALL_RELATIVE * before.abs().max(1e-12) {
                break;
            }
        }
    }

    Ok(DeOutcome {
        best: pop[best_idx].clone(),
        best_value: values[best_idx],
        history,
        evals_used,
    })
}

fn eval_batch<F>(objective: &F, candidates: &[Vec<f64>]) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let values: Vec<f64> = candidates.par_iter().map(|c| objective(c)).collect();
    for (index, &value) in values.iter().enumerate() {
        if !value.is_finite() {
            return Err(CoreError::NonFiniteObjective { index, value });
        }
    }
    Ok(values)
}

fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v < values[best] {
            best = i;
        }
    }
    best
}

/// Three mutually distinct population indices, all different from `target`.
fn pick_donors(rng: &mut impl Rng, pop_size: usize, target: usize) -> (usize, usize, usize) {
    let mut draw = |taken: &[usize]| loop {
        let c = rng.gen_range(0..pop_size);
        if c != target && !taken.contains(&c) {
            return c;
        }
    };
    let r1 = draw(&[]);
    let r2 = draw(&[r1]);
    let r3 = draw(&[r1, r2]);
    (r1, r2, r3)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere_config(seed: u64) -> DeConfig {
        DeConfig {
            pop_size: 40,
            f: 0.8,
            cr: 0.9,
            max_evals: 20_000,
            seed,
            init: InitKind::White,
            bounds: vec![5.0; 8],
        }
    }

    #[test]
    fn sphere_reaches_global_minimum() {
        let out = minimize(|c| c.iter().map(|v| v * v).sum(), &sphere_config(3)).unwrap();
        assert!(out.best_value < 1e-6, "best {}", out.best_value);
        assert!(out.evals_used <= 20_000);
    }

    #[test]
    fn history_is_non_increasing() {
        let out = minimize(|c| c.iter().map(|v| v * v).sum(), &sphere_config(4)).unwrap();
        assert!(out.history.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(*out.history.last().unwrap(), out.best_value);
    }

    #[test]
    fn runs_are_seed_deterministic() {
        let a = minimize(|c| c.iter().map(|v| v * v).sum(), &sphere_config(5)).unwrap();
        let b = minimize(|c| c.iter().map(|v| v * v).sum(), &sphere_config(5)).unwrap();
        assert_eq!(a, b);
        let c = minimize(|c| c.iter().map(|v| v * v).sum(), &sphere_config(6)).unwrap();
        assert_ne!(a.best, c.best);
    }

    #[test]
    fn candidates_respect_bounds() {
        let mut config = sphere_config(7);
        config.bounds = vec![0.25; 8];
        // Reward the boundary so clipping is exercised.
        let out = minimize(|c| -c.iter().map(|v| v.abs()).sum::<f64>(), &config).unwrap();
        assert!(out.best.iter().all(|v| v.abs() <= 0.25 + 1e-15));
        assert!((out.best_value + 8.0 * 0.25).abs() < 1e-9);
    }

    #[test]
    fn non_finite_objective_is_reported() {
        let config = sphere_config(8);
        let err = minimize(
            |c| if c[0] > 0.0 { f64::NAN } else { 1.0 },
            &config,
        )
        .unwrap_err();
        assert!(matches!(err, CoreError::NonFiniteObjective { .. }));
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut c = sphere_config(9);
        c.pop_size = 3;
        assert!(minimize(|_| 0.0, &c).is_err());
        let mut c = sphere_config(9);
        c.bounds = vec![1.0, -1.0];
        assert!(minimize(|_| 0.0, &c).is_err());
        let mut c = sphere_config(9);
        c.cr = 1.5;
        assert!(minimize(|_| 0.0, &c).is_err());
    }

    #[test]
    fn stall_stop_ends_flat_runs_early() {
        let out = minimize(|_| 42.0, &sphere_config(10)).unwrap();
        // One init entry plus exactly STALL_GENERATIONS flat generations.
        assert_eq!(out.history.len(), STALL_GENERATIONS + 1);
        assert!(out.evals_used < 20_000);
        assert_eq!(out.best_value, 42.0);
    }
}
