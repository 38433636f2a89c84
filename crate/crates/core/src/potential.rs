//! Information potentials between projected Gaussian KDEs and the
//! Cauchy-Schwarz divergence built from them.
//!
//! For two projected samples `A`, `B` and kernel variance `V` the potential is
//!
//! ```text
//! ip(A, B; V) = 1 / (√(2πV)·|A|·|B|) · Σ_{a∈A, b∈B} exp(−(a − b)² / (2V))
//! ```
//!
//! and the divergence is `D_CS = −2·ln ip(X−, X+) + ln ip(X−, X−) + ln ip(X+, X+)`,
//! each term using its own variance from [`VarianceProfile`].

use serde::{Deserialize, Serialize};

use crate::approx::{bin_width, discard_plan, ApproxConfig, BinPlan, Mode, Ranked, SortCache, TermPlan};
use crate::dataset::{check_direction, LabeledDataset, PointSet};
use crate::error::{MelcError, Result};
use crate::variance::{profile_from_projections, KdeParams, VarianceGradient, VarianceProfile};

/// Kernel evaluation counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelStats {
    /// Gaussian kernel evaluations performed.
    pub exp_calls: u64,
    /// Evaluations a naive quadratic evaluator would have performed.
    pub naive_pairs: u64,
}

impl std::ops::AddAssign for KernelStats {
    fn add_assign(&mut self, rhs: Self) {
        self.exp_calls += rhs.exp_calls;
        self.naive_pairs += rhs.naive_pairs;
    }
}

impl std::ops::Add for KernelStats {
    type Output = Self;

    fn add(mut self, rhs: Self) -> Self {
        self += rhs;
        self
    }
}

impl KernelStats {
    pub fn ratio(&self) -> f64 {
        self.exp_calls as f64 / self.naive_pairs as f64
    }
}

/// One potential evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialValue {
    pub value: f64,
    /// ∂ip/∂v, when requested.
    pub gradient: Option<Vec<f64>>,
    pub exp_calls: u64,
    pub naive_pairs: u64,
}

impl PotentialValue {
    pub fn stats(&self) -> KernelStats {
        KernelStats {
            exp_calls: self.exp_calls,
            naive_pairs: self.naive_pairs,
        }
    }
}

/// What the gradient of a potential needs beyond the projections: the original
/// points behind them and dV/dv.
#[derive(Debug, Clone, Copy)]
pub struct GradContext<'a> {
    pub points_a: &'a PointSet,
    pub points_b: &'a PointSet,
    pub dv: &'a [f64],
}

fn ctx<'b>(points_a: &'b PointSet, points_b: &'b PointSet, dv: &'b [f64]) -> GradContext<'b> {
    GradContext { points_a, points_b, dv }
}

pub(crate) fn check_variance(variance: f64) -> Result<()> {
    if variance > 0.0 && variance.is_finite() {
        Ok(())
    } else {
        Err(MelcError::NonPositiveVariance(variance))
    }
}

/// Running kernel sum over weighted atom pairs.
///
/// Atoms are points (exact and discard evaluators) or bin representatives.
/// For the gradient it keeps, per atom, the kernel-weighted sum of signed
/// differences, so that Σ e·(a − b)·(x_a − x_b) can be assembled in O(n·d).
pub(crate) struct PairAccumulator {
    variance: f64,
    inv_two_v: f64,
    sum: f64,
    sq_sum: f64,
    weights_a: Vec<f64>,
    weights_b: Vec<f64>,
    calls: u64,
    want_grad: bool,
}

impl PairAccumulator {
    pub fn new(variance: f64, atoms_a: usize, atoms_b: usize, want_grad: bool) -> Self {
        let (wa, wb) = if want_grad {
            (vec![0.0; atoms_a], vec![0.0; atoms_b])
        } else {
            (Vec::new(), Vec::new())
        };
        Self {
            variance,
            inv_two_v: 0.5 / variance,
            sum: 0.0,
            sq_sum: 0.0,
            weights_a: wa,
            weights_b: wb,
            calls: 0,
            want_grad,
        }
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, diff: f64, weight: f64) {
        let sq = diff * diff;
        let term = weight * (-sq * self.inv_two_v).exp();
        self.calls += 1;
        self.sum += term;
        if self.want_grad {
            self.sq_sum += term * sq;
            let t = term * diff;
            self.weights_a[i] += t;
            self.weights_b[j] += t;
        }
    }

    /// `n_a`, `n_b` are the operand sizes (not atom counts) used by the prefactor.
    pub fn finish(self, n_a: usize, n_b: usize, grad: Option<GradContext<'_>>) -> Result<PotentialValue> {
        let v = self.variance;
        let prefactor = 1.0 / ((2.0 * std::f64::consts::PI * v).sqrt() * n_a as f64 * n_b as f64);
        let value = prefactor * self.sum;
        let gradient = match grad {
            Some(ctx) if self.want_grad => {
                let dim = ctx.dv.len();
                if ctx.points_a.dim() != dim || ctx.points_b.dim() != dim {
                    return Err(MelcError::DimensionMismatch {
                        expected: dim,
                        found: ctx.points_a.dim(),
                    });
                }
                if ctx.points_a.len() != self.weights_a.len()
                    || ctx.points_b.len() != self.weights_b.len()
                {
                    return Err(MelcError::LengthMismatch {
                        left: ctx.points_a.len() + ctx.points_b.len(),
                        right: self.weights_a.len() + self.weights_b.len(),
                    });
                }
                // G = Σ_a w_a·x_a − Σ_b w_b·x_b
                let mut g = vec![0.0; dim];
                for (w, x) in self.weights_a.iter().zip(ctx.points_a.rows()) {
                    for (gk, xk) in g.iter_mut().zip(x) {
                        *gk += w * xk;
                    }
                }
                for (w, x) in self.weights_b.iter().zip(ctx.points_b.rows()) {
                    for (gk, xk) in g.iter_mut().zip(x) {
                        *gk -= w * xk;
                    }
                }
                let dv_coeff = prefactor * self.sq_sum / (2.0 * v * v) - value / (2.0 * v);
                Some(
                    g.iter()
                        .zip(ctx.dv)
                        .map(|(gk, dk)| -prefactor * gk / v + dv_coeff * dk)
                        .collect(),
                )
            }
            _ => None,
        };
        Ok(PotentialValue {
            value,
            gradient,
            exp_calls: self.calls,
            naive_pairs: (n_a * n_b) as u64,
        })
    }
}

/// Direct summation over all |A|·|B| pairs.
pub fn ip_exact(
    proj_a: &[f64],
    proj_b: &[f64],
    variance: f64,
    grad: Option<GradContext<'_>>,
) -> Result<PotentialValue> {
    if proj_a.is_empty() || proj_b.is_empty() {
        return Err(MelcError::EmptyInput("potential operands"));
    }
    check_variance(variance)?;
    let mut acc = PairAccumulator::new(variance, proj_a.len(), proj_b.len(), grad.is_some());
    for (i, &a) in proj_a.iter().enumerate() {
        for (j, &b) in proj_b.iter().enumerate() {
            acc.add(i, j, a - b, 1.0);
        }
    }
    acc.finish(proj_a.len(), proj_b.len(), grad)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DcsStatus {
    Ok,
    /// A class collapsed to a single projected value; value is −∞.
    Degenerate,
    /// A potential underflowed to zero; value is ±∞.
    Underflow,
}

/// Cauchy-Schwarz divergence at one projection vector.
#[derive(Debug, Clone, PartialEq)]
pub struct DcsValue {
    pub value: f64,
    pub gradient: Option<Vec<f64>>,
    pub stats: KernelStats,
    pub ip_cross: f64,
    pub ip_self_neg: f64,
    pub ip_self_pos: f64,
    pub status: DcsStatus,
}

impl DcsValue {
    fn degenerate() -> Self {
        Self {
            value: f64::NEG_INFINITY,
            gradient: None,
            stats: KernelStats::default(),
            ip_cross: f64::NAN,
            ip_self_neg: f64::NAN,
            ip_self_pos: f64::NAN,
            status: DcsStatus::Degenerate,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.status == DcsStatus::Ok && self.value.is_finite()
    }
}

/// Frozen evaluation plans for the three potential terms.
#[derive(Debug, Clone, PartialEq)]
pub struct DcsPlan {
    pub cross: TermPlan,
    pub self_neg: TermPlan,
    pub self_pos: TermPlan,
}

struct Projected {
    neg: Vec<f64>,
    pos: Vec<f64>,
    profile: VarianceProfile,
    dv: Option<VarianceGradient>,
}

/// D_CS evaluator for one dataset, bandwidth setting and evaluator mode.
///
/// Holds the projection ordering cache used by the approximate modes, so one
/// instance belongs to one optimization run.
#[derive(Debug, Clone)]
pub struct DcsEvaluator<'a> {
    dataset: &'a LabeledDataset,
    params: KdeParams,
    config: ApproxConfig,
    cache: SortCache,
}

impl<'a> DcsEvaluator<'a> {
    pub fn new(dataset: &'a LabeledDataset, params: KdeParams, config: ApproxConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            dataset,
            params,
            config,
            cache: SortCache::new(),
        })
    }

    pub fn dataset(&self) -> &'a LabeledDataset {
        self.dataset
    }

    pub fn config(&self) -> &ApproxConfig {
        &self.config
    }

    pub fn params(&self) -> KdeParams {
        self.params
    }

    pub fn sort_cache(&self) -> &SortCache {
        &self.cache
    }

    fn project(&self, v: &[f64], want_grad: bool) -> Result<Option<Projected>> {
        check_direction(v, self.dataset.dim())?;
        let neg = self.dataset.neg().project(v)?;
        let pos = self.dataset.pos().project(v)?;
        match profile_from_projections(self.dataset, &neg, &pos, self.params, want_grad) {
            Ok((profile, dv)) => Ok(Some(Projected { neg, pos, profile, dv })),
            Err(MelcError::DegenerateProjection(_)) => Ok(None),
            Err(e) => Err(e),
        }
    }

    fn build_plan(&mut self, p: &Projected) -> DcsPlan {
        let cfg = self.config;
        if cfg.mode == Mode::Exact {
            return DcsPlan {
                cross: TermPlan::Exact,
                self_neg: TermPlan::Exact,
                self_pos: TermPlan::Exact,
            };
        }
        self.cache.update(&p.neg, &p.pos);
        let neg = Ranked {
            values: &p.neg,
            order: &self.cache.perm_neg,
        };
        let pos = Ranked {
            values: &p.pos,
            order: &self.cache.perm_pos,
        };
        let prof = &p.profile;
        let term = |a: Ranked<'_>, b: Option<Ranked<'_>>, variance: f64| match cfg.mode {
            Mode::Exact => TermPlan::Exact,
            Mode::Discard => {
                let plan = discard_plan(a, b.unwrap_or(a), variance, cfg.epsilon, cfg.p_fraction, cfg.refine_p);
                if plan.threshold.is_infinite() {
                    // nothing can be dropped; keep the exact summation order
                    TermPlan::Exact
                } else {
                    TermPlan::Discard(plan)
                }
            }
            Mode::Bin => {
                let width = bin_width(variance, cfg.epsilon);
                TermPlan::Bin(match b {
                    Some(b) => BinPlan::build(a, b, width),
                    None => BinPlan::build_self(a, width),
                })
            }
        };
        DcsPlan {
            cross: term(neg, Some(pos), prof.v_cross),
            self_neg: term(neg, None, prof.v_self_neg),
            self_pos: term(pos, None, prof.v_self_pos),
        }
    }

    fn evaluate_projected(&self, p: &Projected, plan: &DcsPlan, want_grad: bool) -> Result<DcsValue> {
        let (neg_pts, pos_pts) = (self.dataset.neg(), self.dataset.pos());
        let dv = p.dv.as_ref().filter(|_| want_grad);
        let cross = plan.cross.evaluate(
            &p.neg,
            &p.pos,
            p.profile.v_cross,
            dv.map(|d| ctx(neg_pts, pos_pts, &d.d_cross)),
        )?;
        let self_neg = plan.self_neg.evaluate(
            &p.neg,
            &p.neg,
            p.profile.v_self_neg,
            dv.map(|d| ctx(neg_pts, neg_pts, &d.d_self_neg)),
        )?;
        let self_pos = plan.self_pos.evaluate(
            &p.pos,
            &p.pos,
            p.profile.v_self_pos,
            dv.map(|d| ctx(pos_pts, pos_pts, &d.d_self_pos)),
        )?;
        let stats = cross.stats() + self_neg.stats() + self_pos.stats();
        let value = -2.0 * cross.value.ln() + self_neg.value.ln() + self_pos.value.ln();
        let underflow = cross.value <= 0.0 || self_neg.value <= 0.0 || self_pos.value <= 0.0;
        let gradient = if underflow {
            None
        } else {
            match (&cross.gradient, &self_neg.gradient, &self_pos.gradient) {
                (Some(gc), Some(gn), Some(gp)) => Some(
                    gc.iter()
                        .zip(gn)
                        .zip(gp)
                        .map(|((c, n), q)| {
                            -2.0 * c / cross.value + n / self_neg.value + q / self_pos.value
                        })
                        .collect(),
                ),
                _ => None,
            }
        };
        let value = if value.is_nan() && underflow {
            f64::NEG_INFINITY
        } else {
            value
        };
        Ok(DcsValue {
            value,
            gradient,
            stats,
            ip_cross: cross.value,
            ip_self_neg: self_neg.value,
            ip_self_pos: self_pos.value,
            status: if underflow { DcsStatus::Underflow } else { DcsStatus::Ok },
        })
    }

    /// Evaluates D_CS at `v`, rebuilding the approximation plan for `v`.
    pub fn evaluate(&mut self, v: &[f64], want_grad: bool) -> Result<DcsValue> {
        let Some(p) = self.project(v, want_grad)? else {
            return Ok(DcsValue::degenerate());
        };
        let plan = self.build_plan(&p);
        self.evaluate_projected(&p, &plan, want_grad)
    }

    /// The plan the evaluator would use at `v`. `None` for a degenerate projection.
    pub fn freeze(&mut self, v: &[f64]) -> Result<Option<DcsPlan>> {
        let Some(p) = self.project(v, false)? else {
            return Ok(None);
        };
        Ok(Some(self.build_plan(&p)))
    }

    /// Evaluates D_CS at `v` with a previously frozen pair set / bin membership.
    pub fn evaluate_frozen(&self, v: &[f64], plan: &DcsPlan, want_grad: bool) -> Result<DcsValue> {
        match self.project(v, want_grad)? {
            Some(p) => self.evaluate_projected(&p, plan, want_grad),
            None => Ok(DcsValue::degenerate()),
        }
    }
}

/// One-shot D_CS evaluation with gradient.
pub fn dcs_evaluate(
    dataset: &LabeledDataset,
    v: &[f64],
    params: KdeParams,
    config: ApproxConfig,
) -> Result<DcsValue> {
    DcsEvaluator::new(dataset, params, config)?.evaluate(v, true)
}

#[cfg(test)]
mod tests {
    use super::*;

    const INV_SQRT_2PI: f64 = 0.3989422804014327;

    #[test]
    fn single_coincident_pair() {
        let pv = ip_exact(&[0.0], &[0.0], 1.0, None).unwrap();
        assert!((pv.value - INV_SQRT_2PI).abs() < 1e-16);
        assert_eq!(pv.exp_calls, 1);
    }

    #[test]
    fn unit_distance_is_normal_density() {
        let pv = ip_exact(&[0.0], &[1.0], 1.0, None).unwrap();
        assert!((pv.value - 0.24197072451914337).abs() < 1e-16);
    }

    #[test]
    fn far_pair_contributes_almost_nothing() {
        let pv = ip_exact(&[0.0], &[0.0, 10.0], 1.0, None).unwrap();
        let expected = (INV_SQRT_2PI + INV_SQRT_2PI * (-50.0f64).exp()) / 2.0;
        assert!((pv.value - expected).abs() < 1e-16);
        assert!((pv.value - 0.19947).abs() < 1e-5);
        assert_eq!((pv.exp_calls, pv.naive_pairs), (2, 2));
    }

    #[test]
    fn errors() {
        assert!(matches!(ip_exact(&[], &[1.0], 1.0, None), Err(MelcError::EmptyInput(_))));
        assert!(matches!(
            ip_exact(&[0.0], &[1.0], 0.0, None),
            Err(MelcError::NonPositiveVariance(_))
        ));
    }

    #[test]
    fn huge_variance_flattens_potential() {
        let pv = ip_exact(&[0.0, 0.5, 1.0], &[-1.0, 0.2], 1e6, None).unwrap();
        assert!(pv.value < 1e-2);
    }

    #[test]
    fn identical_classes_have_zero_divergence() {
        let rows = [[0.1, 1.0], [2.0, -0.3], [0.7, 0.7]];
        let ds = LabeledDataset::from_rows(&rows, &rows).unwrap();
        let d = dcs_evaluate(&ds, &[0.4, 1.0], KdeParams::new(1.0).unwrap(), ApproxConfig::exact()).unwrap();
        assert_eq!(d.value, 0.0);
    }

    #[test]
    fn exact_counter_covers_all_pairs() {
        let ds = LabeledDataset::from_rows(&[[0.0], [1.0], [3.0]], &[[1.5], [2.0]]).unwrap();
        let d = dcs_evaluate(&ds, &[1.0], KdeParams::new(1.0).unwrap(), ApproxConfig::exact()).unwrap();
        assert_eq!(d.stats.exp_calls, 3 * 2 + 9 + 4);
        assert_eq!(d.stats.naive_pairs, d.stats.exp_calls);
    }

    #[test]
    fn degenerate_projection_is_negative_infinity() {
        let ds = LabeledDataset::from_rows(&[[0.0, 1.0], [0.0, 2.0]], &[[1.0, 0.0], [2.0, 0.0]]).unwrap();
        let d = dcs_evaluate(&ds, &[1.0, 0.0], KdeParams::new(1.0).unwrap(), ApproxConfig::exact()).unwrap();
        assert_eq!(d.value, f64::NEG_INFINITY);
        assert_eq!(d.status, DcsStatus::Degenerate);
        assert!(d.gradient.is_none());
    }

    #[test]
    fn underflowing_cross_term_is_flagged() {
        let ds = LabeledDataset::from_rows(&[[0.0], [1e-3]], &[[1e6], [1e6 + 1e-3]]).unwrap();
        let d = dcs_evaluate(&ds, &[1.0], KdeParams::new(1.0).unwrap(), ApproxConfig::exact()).unwrap();
        assert_eq!(d.status, DcsStatus::Underflow);
        assert_eq!(d.value, f64::INFINITY);
    }
}
