use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::grid::RunRecord;
use crate::approx::{bin_width, discard_threshold, Mode};
use crate::error::{MelcError, Result};
use crate::optimize::Method;

/// Aggregated exp-call ratio for one (dataset, optimizer, method).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    pub dataset: String,
    pub optimizer: Method,
    pub method: Mode,
    pub exp_calls_actual: u64,
    pub exp_calls_naive: u64,
    /// Σ actual / Σ naive.
    pub ratio: f64,
    pub cells: usize,
}

/// Mean iteration counts for one (dataset, optimizer, method).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationMean {
    pub dataset: String,
    pub optimizer: Method,
    pub method: Mode,
    pub mean_iterations: f64,
    pub mean_function_evaluations: f64,
    pub cells: usize,
}

/// Mean BAC_exact − BAC_approx for one (dataset, method, γ, ε), pairing each
/// approximate cell with the exact cell of the same fold, γ and optimizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacDelta {
    pub dataset: String,
    pub method: Mode,
    pub gamma: f64,
    pub epsilon: f64,
    pub mean_delta: f64,
    pub mean_abs_delta: f64,
    pub pairs: usize,
}

/// Discard threshold (p = 1) and bin width at one (V, ε).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub variance: f64,
    pub epsilon: f64,
    pub threshold: f64,
    pub bin_width: f64,
}

/// Sampling of the threshold / width curves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsSpec {
    pub v_values: Vec<f64>,
    pub eps_min: f64,
    pub eps_max: f64,
    /// Log-spaced samples between `eps_min` and `eps_max`, inclusive.
    pub steps: usize,
    /// Extra ε values merged into the samples.
    pub extra_epsilons: Vec<f64>,
}

impl Default for BoundsSpec {
    fn default() -> Self {
        Self {
            v_values: vec![0.5, 1.0, 2.0],
            eps_min: 0.001,
            eps_max: 0.5,
            steps: 100,
            extra_epsilons: vec![0.01, 0.02, 0.03, 0.05, 0.1, 0.2, 0.5],
        }
    }
}

impl BoundsSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = !self.v_values.is_empty()
            && self.v_values.iter().all(|v| *v > 0.0 && v.is_finite())
            && self.eps_min > 0.0
            && self.eps_min <= self.eps_max
            && self.eps_max.is_finite()
            && self.steps >= 1
            && self.extra_epsilons.iter().all(|e| *e > 0.0 && e.is_finite());
        if ok {
            Ok(())
        } else {
            Err(MelcError::InvalidConfig(
                "bounds need positive V values, 0 < eps_min ≤ eps_max and at least one step".into(),
            ))
        }
    }

    pub fn epsilons(&self) -> Vec<f64> {
        let mut eps: Vec<f64> = if self.steps == 1 {
            vec![self.eps_min]
        } else {
            let (lo, hi) = (self.eps_min.ln(), self.eps_max.ln());
            (0..self.steps)
                .map(|i| match i {
                    0 => self.eps_min,
                    i if i == self.steps - 1 => self.eps_max,
                    i => (lo + (hi - lo) * i as f64 / (self.steps - 1) as f64).exp(),
                })
                .collect()
        };
        eps.extend(&self.extra_epsilons);
        eps.sort_by(f64::total_cmp);
        eps.dedup();
        eps
    }
}

pub fn bounds_table(spec: &BoundsSpec) -> Result<Vec<BoundRow>> {
    spec.validate()?;
    let eps = spec.epsilons();
    Ok(spec
        .v_values
        .iter()
        .flat_map(|&variance| {
            eps.iter().map(move |&epsilon| BoundRow {
                variance,
                epsilon,
                threshold: discard_threshold(variance, epsilon, 1.0),
                bin_width: bin_width(variance, epsilon),
            })
        })
        .collect())
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_bounds(path: impl AsRef<Path>, rows: &[BoundRow]) -> Result<()> {
    write_csv(path.as_ref(), rows)
}

type GroupKey = (String, Method, Mode);

fn groups(records: &[RunRecord]) -> BTreeMap<GroupKey, Vec<&RunRecord>> {
    let mut map: BTreeMap<GroupKey, Vec<&RunRecord>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.is_ok()) {
        map.entry((r.dataset_name.clone(), r.optimizer, r.method)).or_default().push(r);
    }
    map
}

/// Σ actual / Σ naive exp calls per (dataset, optimizer, method), over successful cells.
pub fn exp_call_ratios(records: &[RunRecord]) -> Vec<RatioRow> {
    groups(records)
        .into_iter()
        .map(|((dataset, optimizer, method), rs)| {
            let actual: u64 = rs.iter().map(|r| r.exp_calls_actual).sum();
            let naive: u64 = rs.iter().map(|r| r.exp_calls_naive).sum();
            RatioRow {
                dataset,
                optimizer,
                method,
                exp_calls_actual: actual,
                exp_calls_naive: naive,
                ratio: actual as f64 / naive as f64,
                cells: rs.len(),
            }
        })
        .collect()
}

pub fn mean_iterations(records: &[RunRecord]) -> Vec<IterationMean> {
    groups(records)
        .into_iter()
        .map(|((dataset, optimizer, method), rs)| {
            let n = rs.len() as f64;
            IterationMean {
                dataset,
                optimizer,
                method,
                mean_iterations: rs.iter().map(|r| r.iterations as f64).sum::<f64>() / n,
                mean_function_evaluations: rs.iter().map(|r| r.function_evaluations as f64).sum::<f64>() / n,
                cells: rs.len(),
            }
        })
        .collect()
}

pub fn bac_deltas(records: &[RunRecord]) -> Vec<BacDelta> {
    let ok = || records.iter().filter(|r| r.is_ok());
    let exact: BTreeMap<(&str, Method, usize, u64), f64> = ok()
        .filter(|r| r.method == Mode::Exact)
        .map(|r| ((r.dataset_name.as_str(), r.optimizer, r.fold_index, r.gamma.to_bits()), r.bac))
        .collect();
    // (sum of deltas, sum of |deltas|, pairs) per (dataset, method, γ bits, ε bits)
    type Sums = (f64, f64, usize);
    let mut sums: BTreeMap<(&str, Mode, u64, u64), Sums> = BTreeMap::new();
    for r in ok().filter(|r| r.method != Mode::Exact) {
        let Some(base) = exact.get(&(r.dataset_name.as_str(), r.optimizer, r.fold_index, r.gamma.to_bits())) else {
            continue;
        };
        let delta = base - r.bac;
        let e = sums
            .entry((r.dataset_name.as_str(), r.method, r.gamma.to_bits(), r.epsilon.to_bits()))
            .or_default();
        e.0 += delta;
        e.1 += delta.abs();
        e.2 += 1;
    }
    sums.into_iter()
        .map(|((dataset, method, gamma, epsilon), (sum, abs, n))| BacDelta {
            dataset: dataset.to_string(),
            method,
            gamma: f64::from_bits(gamma),
            epsilon: f64::from_bits(epsilon),
            mean_delta: sum / n as f64,
            mean_abs_delta: abs / n as f64,
            pairs: n,
        })
        .collect()
}

/// Writes `records.csv`, `ratios.csv`, `iterations.csv`, `bac_delta.csv` and
/// `bounds.csv` into `out_dir`; the bounds include every ε seen in the records.
pub fn emit_reports(records: &[RunRecord], out_dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    if records.is_empty() {
        return Err(MelcError::EmptyRecords);
    }
    let dir = out_dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let mut bounds = BoundsSpec::default();
    bounds
        .extra_epsilons
        .extend(records.iter().map(|r| r.epsilon).filter(|e| *e > 0.0 && e.is_finite()));
    let paths: Vec<PathBuf> = ["records.csv", "ratios.csv", "iterations.csv", "bac_delta.csv", "bounds.csv"]
        .iter()
        .map(|f| dir.join(f))
        .collect();
    super::grid::write_records(&paths[0], records)?;
    write_csv(&paths[1], &exp_call_ratios(records))?;
    write_csv(&paths[2], &mean_iterations(records))?;
    write_csv(&paths[3], &bac_deltas(records))?;
    write_bounds(&paths[4], &bounds_table(&bounds)?)?;
    Ok(paths)
}
