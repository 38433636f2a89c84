//! Fitting, prediction and balanced-accuracy scoring.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::approx::{ApproxConfig, Mode};
use crate::dataset::{dot, norm, Label, LabeledDataset};
use crate::error::{MelcError, Result};
use crate::optimize::{
    multi_restart, optimize, penalized_objective, DcsObjective, Method, OptimizerConfig, RestartOutcome,
};
use crate::variance::{silverman_bandwidth, KdeParams};

/// Counters and settings of the training run that produced a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSummary {
    pub mode: Mode,
    pub epsilon: f64,
    pub method: Method,
    pub restarts: usize,
    pub best_restart: usize,
    /// Penalized objective at the winning iterate.
    pub value_final: f64,
    pub iterations: usize,
    pub function_evaluations: usize,
    pub converged: bool,
    /// ‖v‖ before normalization.
    pub final_norm: f64,
    /// Summed over all restarts.
    pub exp_calls_total: u64,
    pub naive_pairs_total: u64,
}

/// A trained classifier: a unit projection direction and the projected
/// training samples with their Silverman bandwidths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MelcModel {
    pub v: Vec<f64>,
    pub gamma: f64,
    pub h_neg: f64,
    pub h_pos: f64,
    pub train_proj_neg: Vec<f64>,
    pub train_proj_pos: Vec<f64>,
    pub training: Option<TrainingSummary>,
}

/// Log of a Gaussian KDE with bandwidth `h` at `t`.
fn log_density(t: f64, samples: &[f64], h: f64) -> f64 {
    let inv = 0.5 / (h * h);
    let max = samples
        .iter()
        .map(|p| -(t - p) * (t - p) * inv)
        .fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = samples.iter().map(|p| (-(t - p) * (t - p) * inv - max).exp()).sum();
    max + sum.ln() - (samples.len() as f64 * h * (2.0 * std::f64::consts::PI).sqrt()).ln()
}

impl MelcModel {
    /// Builds a model for direction `v` (normalized here) on `dataset`.
    pub fn from_direction(dataset: &LabeledDataset, v: &[f64], gamma: f64) -> Result<Self> {
        if v.len() != dataset.dim() {
            return Err(MelcError::DimensionMismatch {
                expected: dataset.dim(),
                found: v.len(),
            });
        }
        let n = norm(v);
        if !(n > 0.0 && n.is_finite()) {
            return Err(MelcError::InvalidConfig("projection vector must be finite and non-zero".into()));
        }
        let v: Vec<f64> = v.iter().map(|x| x / n).collect();
        let train_proj_neg = dataset.neg().project(&v)?;
        let train_proj_pos = dataset.pos().project(&v)?;
        Ok(Self {
            h_neg: silverman_bandwidth(&train_proj_neg, gamma)?,
            h_pos: silverman_bandwidth(&train_proj_pos, gamma)?,
            v,
            gamma,
            train_proj_neg,
            train_proj_pos,
            training: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.v.len()
    }

    /// Class-conditional projected densities (g−, g+) at `x`.
    pub fn densities(&self, x: &[f64]) -> Result<(f64, f64)> {
        let (ln_neg, ln_pos) = self.log_densities(x)?;
        Ok((ln_neg.exp(), ln_pos.exp()))
    }

    fn log_densities(&self, x: &[f64]) -> Result<(f64, f64)> {
        if x.len() != self.dim() {
            return Err(MelcError::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        let t = dot(&self.v, x);
        Ok((
            log_density(t, &self.train_proj_neg, self.h_neg),
            log_density(t, &self.train_proj_pos, self.h_pos),
        ))
    }

    /// The class whose projected density is higher; ties go to `Pos`.
    pub fn predict(&self, x: &[f64]) -> Result<Label> {
        let (neg, pos) = self.log_densities(x)?;
        Ok(if neg > pos { Label::Neg } else { Label::Pos })
    }

    pub fn predict_dataset(&self, dataset: &LabeledDataset) -> Result<Vec<Label>> {
        (0..dataset.len()).map(|i| self.predict(dataset.get(i).0)).collect()
    }

    pub fn evaluate(&self, dataset: &LabeledDataset) -> Result<EvalMetrics> {
        balanced_accuracy(&self.predict_dataset(dataset)?, &dataset.labels())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_json(&std::fs::read_to_string(path).map_err(MelcError::read(path))?)
    }
}

/// Free-function form of [`MelcModel::predict`].
pub fn predict(model: &MelcModel, x: &[f64]) -> Result<Label> {
    model.predict(x)
}

/// Fits a model and also returns every restart run.
pub fn fit_with_restarts(
    dataset: &LabeledDataset,
    params: KdeParams,
    approx: ApproxConfig,
    opt: &OptimizerConfig,
    n_starts: usize,
) -> Result<(MelcModel, RestartOutcome)> {
    approx.validate()?;
    opt.validate()?;
    let outcome = multi_restart(dataset.dim(), n_starts, opt.seed, |v0| {
        let mut obj = penalized_objective(DcsObjective::new(dataset, params, approx)?);
        optimize(&mut obj, v0, opt)
    })?;
    let best = outcome.best();
    let mut model = MelcModel::from_direction(dataset, &best.v_final, params.gamma())?;
    let totals = outcome.total_stats();
    model.training = Some(TrainingSummary {
        mode: approx.mode,
        epsilon: approx.epsilon,
        method: opt.method,
        restarts: n_starts,
        best_restart: outcome.best_index,
        value_final: best.value_final,
        iterations: best.iterations,
        function_evaluations: best.function_evaluations,
        converged: best.converged,
        final_norm: best.final_norm,
        exp_calls_total: totals.exp_calls,
        naive_pairs_total: totals.naive_pairs,
    });
    Ok((model, outcome))
}

/// Maximizes the penalized divergence from `n_starts` seeded starts
/// (`opt.seed`) and keeps the best direction, normalized.
pub fn fit(
    dataset: &LabeledDataset,
    params: KdeParams,
    approx: ApproxConfig,
    opt: &OptimizerConfig,
    n_starts: usize,
) -> Result<MelcModel> {
    fit_with_restarts(dataset, params, approx, opt, n_starts).map(|(m, _)| m)
}

/// Confusion counts and balanced accuracy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub bac: f64,
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    /// A class was absent from the truth; its recall was taken as 0.
    pub missing_class: bool,
}

/// ½(TP/(TP+FN) + TN/(TN+FP)).
pub fn balanced_accuracy(predictions: &[Label], truth: &[Label]) -> Result<EvalMetrics> {
    if predictions.len() != truth.len() {
        return Err(MelcError::LengthMismatch {
            left: predictions.len(),
            right: truth.len(),
        });
    }
    if truth.is_empty() {
        return Err(MelcError::EmptyInput("evaluation set"));
    }
    let (mut tp, mut tn, mut fp, mut fn_) = (0, 0, 0, 0);
    for (p, t) in predictions.iter().zip(truth) {
        match (p, t) {
            (Label::Pos, Label::Pos) => tp += 1,
            (Label::Neg, Label::Neg) => tn += 1,
            (Label::Pos, Label::Neg) => fp += 1,
            (Label::Neg, Label::Pos) => fn_ += 1,
        }
    }
    let recall = |hit: usize, miss: usize| {
        if hit + miss == 0 {
            0.0
        } else {
            hit as f64 / (hit + miss) as f64
        }
    };
    Ok(EvalMetrics {
        bac: 0.5 * (recall(tp, fn_) + recall(tn, fp)),
        tp,
        tn,
        fp,
        fn_,
        missing_class: tp + fn_ == 0 || tn + fp == 0,
    })
}
