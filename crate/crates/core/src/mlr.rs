//! Multiclass logistic regression with an L1 (Lasso) penalty over scattering
//! features, GLMNet style: a warm-started regularization path solved by
//! proximal gradient descent (ISTA with backtracking), λ selected on a
//! held-out validation split, and the winner refit on the full data.
//!
//! The symmetric multinomial parameterization is used: every class gets its
//! own (α_k, β_k) and the L1 penalty resolves the gauge freedom, so β values
//! (unlike probabilities) depend on this convention. The negative
//! log-likelihood is summed over samples, not averaged, which fixes the
//! scale of λ.

use ndarray::{Array2, ArrayView2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::io::{BufReader, BufWriter};
use std::path::Path;

use crate::error::{CoreError, Result};
use crate::scattering::ScatteringConfig;

/// Fitted Lasso-MLR model. Coefficients live in standardized feature space;
/// [`MlrModel::predict_proba`] applies the stored center/scale before scoring.
#[derive(Debug, Clone, PartialEq)]
pub struct MlrModel {
    alphas: Vec<f64>,
    betas: Array2<f64>,
    lambda: f64,
    feature_center: Vec<f64>,
    feature_scale: Vec<f64>,
}

impl MlrModel {
    pub fn n_classes(&self) -> usize {
        self.alphas.len()
    }

    pub fn n_features(&self) -> usize {
        self.betas.ncols()
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    /// K × p coefficient matrix in standardized feature coordinates.
    pub fn betas(&self) -> ArrayView2<'_, f64> {
        self.betas.view()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn feature_center(&self) -> &[f64] {
        &self.feature_center
    }

    pub fn feature_scale(&self) -> &[f64] {
        &self.feature_scale
    }

    /// Count of exactly-zero coefficients per class.
    pub fn zeros_per_class(&self) -> Vec<usize> {
        self.betas
            .rows()
            .into_iter()
            .map(|r| r.iter().filter(|v| **v == 0.0).count())
            .collect()
    }

    /// Count of nonzero coefficients per class.
    pub fn nonzeros_per_class(&self) -> Vec<usize> {
        self.betas
            .rows()
            .into_iter()
            .map(|r| r.iter().filter(|v| **v != 0.0).count())
            .collect()
    }

    pub fn nonzeros(&self) -> usize {
        self.nonzeros_per_class().iter().sum()
    }

    /// Class probabilities for one raw feature row, softmax with
    /// max-subtraction; entries sum to 1 within 1e-12.
    pub fn predict_proba(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.n_features() {
            return Err(CoreError::DimensionMismatch {
                context: "feature row vs model p",
                expected: self.n_features(),
                actual: row.len(),
            });
        }
        let scores: Vec<f64> = (0..self.n_classes())
            .map(|k| {
                let mut s = self.alphas[k];
                for (j, &v) in row.iter().enumerate() {
                    let z = (v - self.feature_center[j]) / self.feature_scale[j];
                    s += self.betas[[k, j]] * z;
                }
                s
            })
            .collect();
        Ok(softmax(&scores))
    }

    /// Predicted 1-based label: argmax probability, ties toward the smallest
    /// class index.
    pub fn predict(&self, row: &[f64]) -> Result<u32> {
        let probs = self.predict_proba(row)?;
        Ok(argmax_first(&probs) as u32 + 1)
    }

    /// Fraction of rows whose predicted label matches.
    pub fn accuracy(&self, features: ArrayView2<f64>, labels: &[u32]) -> Result<f64> {
        if features.nrows() != labels.len() {
            return Err(CoreError::DimensionMismatch {
                context: "feature rows vs labels",
                expected: features.nrows(),
                actual: labels.len(),
            });
        }
        if features.nrows() == 0 {
            return Err(CoreError::Config("accuracy of an empty set is undefined".into()));
        }
        let mut hits = 0usize;
        for (row, &label) in features.rows().into_iter().zip(labels) {
            if self.predict(row.as_slice().expect("contiguous row"))? == label {
                hits += 1;
            }
        }
        Ok(hits as f64 / labels.len() as f64)
    }
}

/// Index of the largest entry, first on ties.
pub fn argmax_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Regularization-path hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    /// Strictly descending positive λ values. Empty means: derive 50
    /// geometric points from λ_max (the smallest all-zero-β λ computed from
    /// the data) down to 1e-3 · λ_max.
    #[serde(default)]
    pub lambda_grid: Vec<f64>,
    /// Iteration cap per λ point.
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    /// KKT-residual convergence target; fitting stops once the largest
    /// stationarity violation falls below this.
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Fraction of rows held out (stratified per class) for λ selection.
    #[serde(default = "default_val_fraction")]
    pub val_fraction: f64,
    #[serde(default)]
    pub seed: u64,
    /// Center/scale features before fitting (stored in the model either way).
    #[serde(default = "default_true")]
    pub standardize: bool,
}

fn default_true() -> bool {
    true
}

fn default_max_iter() -> usize {
    3000
}

fn default_tol() -> f64 {
    1e-4
}

fn default_val_fraction() -> f64 {
    0.2
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            lambda_grid: Vec::new(),
            max_iter: 3000,
            tol: 1e-4,
            val_fraction: 0.2,
            seed: 0,
            standardize: true,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        for w in self.lambda_grid.windows(2) {
            if !(w[1] < w[0]) {
                return Err(CoreError::Config("lambda_grid must be strictly descending".into()));
            }
        }
        if self.lambda_grid.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
            return Err(CoreError::Config("lambda_grid entries must be positive".into()));
        }
        if self.max_iter == 0 {
            return Err(CoreError::Config("max_iter must be >= 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(CoreError::Config(format!("tol must be > 0, got {}", self.tol)));
        }
        if !(self.val_fraction > 0.0 && self.val_fraction < 1.0) {
            return Err(CoreError::Config(format!(
                "val_fraction must lie in (0,1), got {}",
                self.val_fraction
            )));
        }
        Ok(())
    }
}

/// One entry of the fitted regularization path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathPoint {
    pub lambda: f64,
    /// Nonzero β count at this λ on the selection fit.
    pub nnz: usize,
    /// Accuracy on the held-out split; `None` when the split was empty.
    pub val_accuracy: Option<f64>,
}

/// Multinomial NLL (summed over samples) and its exact gradient with respect
/// to every intercept and coefficient. Features are used as given; callers
/// handle any standardization.
pub fn nll_and_grad(
    alphas: &[f64],
    betas: ArrayView2<f64>,
    features: ArrayView2<f64>,
    labels: &[u32],
) -> Result<(f64, Vec<f64>, Array2<f64>)> {
    let (nll, grads) = forward(alphas, betas, features, labels, true)?;
    let (ga, gb) = grads.expect("gradient requested");
    Ok((nll, ga, gb))
}

/// NLL only; shares the forward pass with [`nll_and_grad`].
pub fn nll_value(
    alphas: &[f64],
    betas: ArrayView2<f64>,
    features: ArrayView2<f64>,
    labels: &[u32],
) -> Result<f64> {
    Ok(forward(alphas, betas, features, labels, false)?.0)
}

#[allow(clippy::type_complexity)]
fn forward(
    alphas: &[f64],
    betas: ArrayView2<f64>,
    features: ArrayView2<f64>,
    labels: &[u32],
    want_grad: bool,
) -> Result<(f64, Option<(Vec<f64>, Array2<f64>)>)> {
    let k = alphas.len();
    let (n, p) = (features.nrows(), features.ncols());
    if betas.nrows() != k || betas.ncols() != p {
        return Err(CoreError::DimensionMismatch {
            context: "beta matrix vs (K, p)",
            expected: k * p,
            actual: betas.nrows() * betas.ncols(),
        });
    }
    if labels.len() != n {
        return Err(CoreError::DimensionMismatch {
            context: "labels vs feature rows",
            expected: n,
            actual: labels.len(),
        });
    }
    // scores[i, c] = alpha_c + beta_c . x_i
    let mut scores = features.dot(&betas.t());
    for mut row in scores.rows_mut() {
        for (c, v) in row.iter_mut().enumerate() {
            *v += alphas[c];
        }
    }
    let mut nll = 0.0;
    // Reuse `scores` to hold P - Y, the per-sample gradient of the NLL
    // with respect to the scores.
    for (i, mut row) in scores.rows_mut().into_iter().enumerate() {
        let y = labels[i] as usize - 1;
        if y >= k {
            return Err(CoreError::Config(format!(
                "label {} outside 1..={k} at row {i}",
                labels[i]
            )));
        }
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + row.iter().map(|s| (s - max).exp()).sum::<f64>().ln();
        nll += lse - row[y];
        if want_grad {
            for (c, v) in row.iter_mut().enumerate() {
                *v = (*v - lse).exp() - if c == y { 1.0 } else { 0.0 };
            }
        }
    }
    if !want_grad {
        return Ok((nll, None));
    }
    let grad_alpha: Vec<f64> = scores.sum_axis(ndarray::Axis(0)).to_vec();
    let grad_beta = scores.t().dot(&features);
    Ok((nll, Some((grad_alpha, grad_beta))))
}

/// Largest stationarity violations of the penalized objective at a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KktResidual {
    /// max over zero coordinates of (|∂NLL/∂β| − λ), floored at 0.
    pub zero: f64,
    /// max over active coordinates of |∂NLL/∂β + λ·sign(β)|.
    pub active: f64,
    /// max over intercepts of |∂NLL/∂α|.
    pub intercept: f64,
}

impl KktResidual {
    pub fn max(&self) -> f64 {
        self.zero.max(self.active).max(self.intercept)
    }
}

fn kkt_from_grad(
    betas: &Array2<f64>,
    grad_beta: &Array2<f64>,
    grad_alpha: &[f64],
    lambda: f64,
) -> KktResidual {
    let mut zero = 0.0f64;
    let mut active = 0.0f64;
    for (&b, &g) in betas.iter().zip(grad_beta) {
        if b == 0.0 {
            zero = zero.max(g.abs() - lambda);
        } else {
            active = active.max((g + lambda * b.signum()).abs());
        }
    }
    let intercept = grad_alpha.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    KktResidual {
        zero: zero.max(0.0),
        active,
        intercept,
    }
}

/// KKT residuals of a fitted model on (raw) training features, using the
/// model's own λ and standardization.
pub fn kkt_residual(
    model: &MlrModel,
    features: ArrayView2<f64>,
    labels: &[u32],
) -> Result<KktResidual> {
    let xs = apply_standardization(features, &model.feature_center, &model.feature_scale);
    let (_, ga, gb) = nll_and_grad(&model.alphas, model.betas.view(), xs.view(), labels)?;
    Ok(kkt_from_grad(&model.betas, &gb, &ga, model.lambda))
}

fn apply_standardization(x: ArrayView2<f64>, center: &[f64], scale: &[f64]) -> Array2<f64> {
    let mut out = x.to_owned();
    for mut row in out.rows_mut() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = (*v - center[j]) / scale[j];
        }
    }
    out
}

struct IstaState {
    alphas: Vec<f64>,
    betas: Array2<f64>,
    step: f64,
}

/// Inner steps between full-gradient optimality checks.
const ACTIVE_SET_ROUND: usize = 250;

/// Proximal-gradient descent on NLL + λ‖β‖₁ from a warm start, glmnet style:
/// a full-gradient pass certifies optimality (or admits violating columns),
/// then ISTA iterates on the active columns only, which carries the bulk of
/// the work at a fraction of the full gradient cost. Stops once the KKT
/// residual reaches `tol` or after `max_iter` gradient evaluations.
fn ista_solve(
    x: ArrayView2<f64>,
    labels: &[u32],
    lambda: f64,
    state: &mut IstaState,
    max_iter: usize,
    tol: f64,
) -> Result<KktResidual> {
    let k = state.alphas.len();
    let p = x.ncols();
    let mut used = 0usize;
    loop {
        let (_, ga, gb) = nll_and_grad(&state.alphas, state.betas.view(), x, labels)?;
        used += 1;
        let residual = kkt_from_grad(&state.betas, &gb, &ga, lambda);
        if residual.max() <= tol || used >= max_iter {
            return Ok(residual);
        }
        let cols: Vec<usize> = (0..p)
            .filter(|&j| (0..k).any(|c| state.betas[[c, j]] != 0.0 || gb[[c, j]].abs() > lambda))
            .collect();
        let x_sub = take_cols(x, &cols);
        let mut betas_sub = take_cols(state.betas.view(), &cols);
        let budget = (max_iter - used).min(ACTIVE_SET_ROUND);
        // Aim below tol on the subproblem so the outer pass mostly certifies.
        used += prox_descend(
            x_sub.view(),
            labels,
            lambda,
            &mut state.alphas,
            &mut betas_sub,
            &mut state.step,
            budget,
            0.5 * tol,
        )?;
        for (sj, &j) in cols.iter().enumerate() {
            for c in 0..k {
                state.betas[[c, j]] = betas_sub[[c, sj]];
            }
        }
    }
}

/// Backtracking proximal-gradient steps on one (sub)problem; returns the
/// number of gradient evaluations spent. The soft-threshold step yields
/// exact zeros; the sufficient-decrease test keeps the penalized objective
/// non-increasing.
#[allow(clippy::too_many_arguments)]
fn prox_descend(
    x: ArrayView2<f64>,
    labels: &[u32],
    lambda: f64,
    alphas: &mut Vec<f64>,
    betas: &mut Array2<f64>,
    step: &mut f64,
    max_steps: usize,
    tol: f64,
) -> Result<usize> {
    for it in 0..max_steps {
        let (f0, ga, gb) = nll_and_grad(alphas, betas.view(), x, labels)?;
        if kkt_from_grad(betas, &gb, &ga, lambda).max() <= tol {
            return Ok(it + 1);
        }
        let mut eta = *step;
        loop {
            let trial_alphas: Vec<f64> = alphas.iter().zip(&ga).map(|(a, g)| a - eta * g).collect();
            let mut trial_betas = betas.clone();
            for (b, &g) in trial_betas.iter_mut().zip(&gb) {
                let moved = *b - eta * g;
                let t = eta * lambda;
                *b = moved.signum() * (moved.abs() - t).max(0.0);
            }
            let f1 = nll_value(&trial_alphas, trial_betas.view(), x, labels)?;
            // Sufficient decrease of the smooth part along the step.
            let mut lin = 0.0;
            let mut quad = 0.0;
            for ((&a1, &a0), &g) in trial_alphas.iter().zip(alphas.iter()).zip(&ga) {
                let d = a1 - a0;
                lin += g * d;
                quad += d * d;
            }
            for ((&b1, &b0), &g) in trial_betas.iter().zip(betas.iter()).zip(&gb) {
                let d = b1 - b0;
                lin += g * d;
                quad += d * d;
            }
            if f1.is_finite() && f1 <= f0 + lin + quad / (2.0 * eta) + 1e-12 * f0.abs() {
                #[cfg(debug_assertions)]
                {
                    let pen =
                        |b: &Array2<f64>| lambda * b.iter().map(|v| v.abs()).sum::<f64>();
                    let before = f0 + pen(betas);
                    let after = f1 + pen(&trial_betas);
                    debug_assert!(
                        after <= before + 1e-9 * before.abs().max(1.0),
                        "penalized objective increased: {before} -> {after}"
                    );
                }
                *alphas = trial_alphas;
                *betas = trial_betas;
                *step = eta * 1.25;
                break;
            }
            eta *= 0.5;
            if eta < 1e-18 {
                return Err(CoreError::Config(
                    "line search failed: objective not locally descending".into(),
                ));
            }
        }
    }
    Ok(max_steps)
}

fn take_cols(x: ArrayView2<f64>, cols: &[usize]) -> Array2<f64> {
    let mut out = Array2::zeros((x.nrows(), cols.len()));
    for (sj, &j) in cols.iter().enumerate() {
        out.column_mut(sj).assign(&x.column(j));
    }
    out
}

fn validate_inputs(features: ArrayView2<f64>, labels: &[u32]) -> Result<usize> {
    let n = features.nrows();
    if labels.len() != n {
        return Err(CoreError::DimensionMismatch {
            context: "labels vs feature rows",
            expected: n,
            actual: labels.len(),
        });
    }
    if let Some(bad) = features.iter().find(|v| !v.is_finite()) {
        return Err(CoreError::NonFinite(format!("feature value {bad}")));
    }
    let k = labels.iter().copied().max().unwrap_or(0) as usize;
    if k < 2 {
        return Err(CoreError::Config(format!("need at least 2 classes, got {k}")));
    }
    let mut counts = vec![0usize; k];
    for &l in labels {
        if l == 0 {
            return Err(CoreError::Config("labels are 1-based; got 0".into()));
        }
        counts[l as usize - 1] += 1;
    }
    if let Some(absent) = counts.iter().position(|&c| c == 0) {
        return Err(CoreError::Config(format!(
            "class {} has no training samples",
            absent + 1
        )));
    }
    if n < k {
        return Err(CoreError::Config(format!("need N >= K, got N={n}, K={k}")));
    }
    Ok(k)
}

fn standardization(x: ArrayView2<f64>, enabled: bool) -> (Vec<f64>, Vec<f64>) {
    let p = x.ncols();
    if !enabled {
        return (vec![0.0; p], vec![1.0; p]);
    }
    let n = x.nrows() as f64;
    let mut center = Vec::with_capacity(p);
    let mut scale = Vec::with_capacity(p);
    for col in x.columns() {
        let mean = col.sum() / n;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        center.push(mean);
        scale.push(if var > 0.0 { var.sqrt() } else { 1.0 });
    }
    (center, scale)
}

fn log_priors(labels: &[u32], k: usize) -> Vec<f64> {
    let mut counts = vec![0.0f64; k];
    for &l in labels {
        counts[l as usize - 1] += 1.0;
    }
    let n = labels.len() as f64;
    counts.into_iter().map(|c| (c / n).ln()).collect()
}

/// 50 geometric points from λ_max (null-model gradient bound) down to
/// 1e-3 · λ_max.
fn derive_lambda_grid(xs: ArrayView2<f64>, labels: &[u32], k: usize) -> Result<Vec<f64>> {
    let alphas = log_priors(labels, k);
    let betas = Array2::zeros((k, xs.ncols()));
    let (_, _, gb) = nll_and_grad(&alphas, betas.view(), xs, labels)?;
    let lambda_max = gb.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    if !(lambda_max > 0.0) || !lambda_max.is_finite() {
        return Err(CoreError::Config(format!(
            "cannot derive lambda grid: null-model gradient bound is {lambda_max}"
        )));
    }
    let count = 50;
    Ok((0..count)
        .map(|i| lambda_max * 1e-3f64.powf(i as f64 / (count - 1) as f64))
        .collect())
}

/// Stratified split: per class (ascending), a seeded shuffle sends
/// `floor(val_fraction · n_class)` indices to validation. Training always
/// keeps at least one sample of every class.
fn split_indices(labels: &[u32], k: usize, val_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut val = Vec::new();
    for class in 1..=k as u32 {
        let mut idx: Vec<usize> = labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == class)
            .map(|(i, _)| i)
            .collect();
        idx.shuffle(&mut rng);
        let n_val = (val_fraction * idx.len() as f64).floor() as usize;
        val.extend_from_slice(&idx[..n_val]);
        train.extend_from_slice(&idx[n_val..]);
    }
    train.sort_unstable();
    val.sort_unstable();
    (train, val)
}

fn take_rows(x: ArrayView2<f64>, idx: &[usize]) -> Array2<f64> {
    let mut out = Array2::zeros((idx.len(), x.ncols()));
    for (r, &i) in idx.iter().enumerate() {
        out.row_mut(r).assign(&x.row(i));
    }
    out
}

/// Fits the regularization path and returns the model refit on the full data
/// at the validation-selected λ (ties toward larger λ; smallest λ if the
/// validation split is empty), together with the per-λ path diagnostics.
pub fn fit_with_path(
    features: ArrayView2<f64>,
    labels: &[u32],
    config: &FitConfig,
) -> Result<(MlrModel, Vec<PathPoint>)> {
    config.validate()?;
    let k = validate_inputs(features, labels)?;
    let p = features.ncols();
    let (center, scale) = standardization(features, config.standardize);
    let xs = apply_standardization(features, &center, &scale);
    let grid = if config.lambda_grid.is_empty() {
        derive_lambda_grid(xs.view(), labels, k)?
    } else {
        config.lambda_grid.clone()
    };

    let (train_idx, val_idx) = split_indices(labels, k, config.val_fraction, config.seed);
    let x_train = take_rows(xs.view(), &train_idx);
    let y_train: Vec<u32> = train_idx.iter().map(|&i| labels[i]).collect();
    let x_val = take_rows(xs.view(), &val_idx);
    let y_val: Vec<u32> = val_idx.iter().map(|&i| labels[i]).collect();

    let mut state = IstaState {
        alphas: log_priors(&y_train, k),
        betas: Array2::zeros((k, p)),
        step: 1.0,
    };
    let mut path = Vec::with_capacity(grid.len());
    let mut best: Option<(usize, f64)> = None;
    for (i, &lambda) in grid.iter().enumerate() {
        ista_solve(x_train.view(), &y_train, lambda, &mut state, config.max_iter, config.tol)?;
        let nnz = state.betas.iter().filter(|v| **v != 0.0).count();
        let val_accuracy = if y_val.is_empty() {
            None
        } else {
            let mut hits = 0usize;
            for (row, &label) in x_val.rows().into_iter().zip(&y_val) {
                let scores: Vec<f64> = (0..k)
                    .map(|c| state.alphas[c] + state.betas.row(c).dot(&row))
                    .collect();
                if argmax_first(&scores) as u32 + 1 == label {
                    hits += 1;
                }
            }
            Some(hits as f64 / y_val.len() as f64)
        };
        if let Some(acc) = val_accuracy {
            if best.map_or(true, |(_, b)| acc > b) {
                best = Some((i, acc));
            }
        }
        path.push(PathPoint {
            lambda,
            nnz,
            val_accuracy,
        });
    }
    let best_idx = best.map_or(grid.len() - 1, |(i, _)| i);

    // Refit on all rows, warm-started down the same grid prefix.
    let mut full = IstaState {
        alphas: log_priors(labels, k),
        betas: Array2::zeros((k, p)),
        step: 1.0,
    };
    for &lambda in &grid[..=best_idx] {
        ista_solve(xs.view(), labels, lambda, &mut full, config.max_iter, config.tol)?;
    }
    let model = MlrModel {
        alphas: full.alphas,
        betas: full.betas,
        lambda: grid[best_idx],
        feature_center: center,
        feature_scale: scale,
    };
    Ok((model, path))
}

/// [`fit_with_path`] without the diagnostics.
pub fn fit(features: ArrayView2<f64>, labels: &[u32], config: &FitConfig) -> Result<MlrModel> {
    fit_with_path(features, labels, config).map(|(m, _)| m)
}

/// One nonzero coefficient in the model file; `class` is the 1-based label,
/// `feature` the 0-based column.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaEntry {
    pub class: u32,
    pub feature: usize,
    pub value: f64,
}

/// On-disk model: JSON with sparse coefficients and the scattering geometry
/// the features came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub schema_version: u32,
    pub k: usize,
    pub p: usize,
    pub lambda: f64,
    pub alphas: Vec<f64>,
    pub betas: Vec<BetaEntry>,
    pub feature_center: Vec<f64>,
    pub feature_scale: Vec<f64>,
    pub scattering: ScatteringConfig,
}

pub const MODEL_SCHEMA_VERSION: u32 = 1;

impl ModelFile {
    pub fn from_model(model: &MlrModel, scattering: &ScatteringConfig) -> Self {
        let mut betas = Vec::with_capacity(model.nonzeros());
        for (k, row) in model.betas.rows().into_iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    betas.push(BetaEntry {
                        class: k as u32 + 1,
                        feature: j,
                        value: v,
                    });
                }
            }
        }
        ModelFile {
            schema_version: MODEL_SCHEMA_VERSION,
            k: model.n_classes(),
            p: model.n_features(),
            lambda: model.lambda,
            alphas: model.alphas.clone(),
            betas,
            feature_center: model.feature_center.clone(),
            feature_scale: model.feature_scale.clone(),
            scattering: *scattering,
        }
    }

    pub fn into_model(self) -> Result<(MlrModel, ScatteringConfig)> {
        if self.schema_version != MODEL_SCHEMA_VERSION {
            return Err(CoreError::Config(format!(
                "unsupported model schema version {}",
                self.schema_version
            )));
        }
        if self.alphas.len() != self.k
            || self.feature_center.len() != self.p
            || self.feature_scale.len() != self.p
        {
            return Err(CoreError::Config("model file dimensions are inconsistent".into()));
        }
        if self.feature_scale.iter().any(|&s| !(s > 0.0)) {
            return Err(CoreError::Config("feature_scale entries must be positive".into()));
        }
        if !(self.lambda >= 0.0) {
            return Err(CoreError::Config(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        let mut betas = Array2::zeros((self.k, self.p));
        for e in &self.betas {
            if e.class == 0 || e.class as usize > self.k || e.feature >= self.p {
                return Err(CoreError::Config(format!(
                    "beta entry (class {}, feature {}) out of range",
                    e.class, e.feature
                )));
            }
            if !e.value.is_finite() {
                return Err(CoreError::NonFinite(format!(
                    "beta entry (class {}, feature {})",
                    e.class, e.feature
                )));
            }
            betas[[e.class as usize - 1, e.feature]] = e.value;
        }
        let model = MlrModel {
            alphas: self.alphas,
            betas,
            lambda: self.lambda,
            feature_center: self.feature_center,
            feature_scale: self.feature_scale,
        };
        Ok((model, self.scattering))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| CoreError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        serde_json::to_writer_pretty(BufWriter::new(file), self).map_err(|e| {
            CoreError::MalformedFile {
                path: path.to_path_buf(),
                row: 0,
                field: 0,
                message: e.to_string(),
            }
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| CoreError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        serde_json::from_reader(BufReader::new(file)).map_err(|e| CoreError::MalformedFile {
            path: path.to_path_buf(),
            row: e.line(),
            field: e.column(),
            message: e.to_string(),
        })
    }
}
