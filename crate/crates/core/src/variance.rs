//! Silverman-rule bandwidths of the projected classes and the kernel variances
//! used by the three information-potential terms.

use serde::{Deserialize, Serialize};

use crate::dataset::{check_direction, LabeledDataset, PointSet};
use crate::error::{MelcError, Result};

/// Projected variances below this are treated as a collapsed class.
pub const MIN_PROJECTED_VARIANCE: f64 = 1e-300;

/// Bandwidth scaling hyperparameter γ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KdeParams {
    gamma: f64,
}

impl KdeParams {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(MelcError::InvalidConfig(format!("gamma must be positive, got {gamma}")));
        }
        Ok(Self { gamma })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }
}

impl Default for KdeParams {
    fn default() -> Self {
        Self { gamma: 1.0 }
    }
}

/// Silverman constant κ = γ²·(4/(3n))^(2/5), so that h² = κ·σ².
pub fn silverman_kappa(gamma: f64, n: usize) -> f64 {
    gamma * gamma * (4.0 / (3.0 * n as f64)).powf(0.4)
}

/// Per-class bandwidths and the kernel variance of each potential term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceProfile {
    pub h_neg: f64,
    pub h_pos: f64,
    pub kappa_neg: f64,
    pub kappa_pos: f64,
    /// h_neg² + h_pos²
    pub v_cross: f64,
    /// 2·h_neg²
    pub v_self_neg: f64,
    /// 2·h_pos²
    pub v_self_pos: f64,
}

/// Derivatives of the three kernel variances with respect to the projection vector.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceGradient {
    pub d_cross: Vec<f64>,
    pub d_self_neg: Vec<f64>,
    pub d_self_pos: Vec<f64>,
}

/// Sample variance of a class's projections together with S·v, where S is the
/// class's sample covariance (so that the variance equals v·S·v).
#[derive(Debug, Clone)]
pub(crate) struct ClassSpread {
    pub variance: f64,
    pub cov_v: Option<Vec<f64>>,
}

pub(crate) fn class_spread(points: &PointSet, proj: &[f64], want_cov: bool) -> ClassSpread {
    let n = proj.len() as f64;
    let mean = proj.iter().sum::<f64>() / n;
    let variance = proj.iter().map(|p| (p - mean) * (p - mean)).sum::<f64>() / (n - 1.0);
    let cov_v = want_cov.then(|| {
        let mut acc = vec![0.0; points.dim()];
        for (x, p) in points.rows().zip(proj) {
            let w = p - mean;
            for (a, xi) in acc.iter_mut().zip(x) {
                *a += w * xi;
            }
        }
        acc.iter_mut().for_each(|a| *a /= n - 1.0);
        acc
    });
    ClassSpread { variance, cov_v }
}

/// Builds the profile from already projected classes.
pub(crate) fn profile_from_projections(
    dataset: &LabeledDataset,
    proj_neg: &[f64],
    proj_pos: &[f64],
    params: KdeParams,
    want_gradient: bool,
) -> Result<(VarianceProfile, Option<VarianceGradient>)> {
    let neg = class_spread(dataset.neg(), proj_neg, want_gradient);
    let pos = class_spread(dataset.pos(), proj_pos, want_gradient);
    if !(neg.variance >= MIN_PROJECTED_VARIANCE) {
        return Err(MelcError::DegenerateProjection("negative"));
    }
    if !(pos.variance >= MIN_PROJECTED_VARIANCE) {
        return Err(MelcError::DegenerateProjection("positive"));
    }
    let kappa_neg = silverman_kappa(params.gamma(), dataset.n_neg());
    let kappa_pos = silverman_kappa(params.gamma(), dataset.n_pos());
    let h_neg = (kappa_neg * neg.variance).sqrt();
    let h_pos = (kappa_pos * pos.variance).sqrt();
    let profile = VarianceProfile {
        h_neg,
        h_pos,
        kappa_neg,
        kappa_pos,
        v_cross: h_neg * h_neg + h_pos * h_pos,
        v_self_neg: 2.0 * (h_neg * h_neg),
        v_self_pos: 2.0 * (h_pos * h_pos),
    };
    if ![profile.v_cross, profile.v_self_neg, profile.v_self_pos]
        .iter()
        .all(|v| v.is_finite())
    {
        return Err(MelcError::NonFinite("kernel variance"));
    }
    let gradient = match (neg.cov_v, pos.cov_v) {
        (Some(sn), Some(sp)) => {
            // d(v·S·v)/dv = 2·S·v
            let d_self_neg: Vec<f64> = sn.iter().map(|s| 4.0 * kappa_neg * s).collect();
            let d_self_pos: Vec<f64> = sp.iter().map(|s| 4.0 * kappa_pos * s).collect();
            let d_cross = d_self_neg
                .iter()
                .zip(&d_self_pos)
                .map(|(a, b)| 0.5 * (a + b))
                .collect();
            Some(VarianceGradient {
                d_cross,
                d_self_neg,
                d_self_pos,
            })
        }
        _ => None,
    };
    Ok((profile, gradient))
}

/// Silverman bandwidths of both projected classes and the derived kernel variances.
pub fn variance_profile(
    dataset: &LabeledDataset,
    v: &[f64],
    params: KdeParams,
) -> Result<VarianceProfile> {
    check_direction(v, dataset.dim())?;
    let proj_neg = dataset.neg().project(v)?;
    let proj_pos = dataset.pos().project(v)?;
    profile_from_projections(dataset, &proj_neg, &proj_pos, params, false).map(|(p, _)| p)
}

/// Bandwidth of one projected sample under the same rule.
pub fn silverman_bandwidth(proj: &[f64], gamma: f64) -> Result<f64> {
    if proj.len() < 2 {
        return Err(MelcError::TooSmallClass {
            class: "sample",
            size: proj.len(),
            required: 2,
        });
    }
    let n = proj.len() as f64;
    let mean = proj.iter().sum::<f64>() / n;
    let var = proj.iter().map(|p| (p - mean) * (p - mean)).sum::<f64>() / (n - 1.0);
    if !(var >= MIN_PROJECTED_VARIANCE) {
        return Err(MelcError::DegenerateProjection("sample"));
    }
    Ok((silverman_kappa(gamma, proj.len()) * var).sqrt())
}
