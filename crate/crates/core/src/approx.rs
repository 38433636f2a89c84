//! ε-bounded approximate information potentials.
//!
//! Two evaluators trade a bounded error in the potential value for fewer kernel
//! evaluations:
//!
//! * **sort and discard** skips every projected pair farther apart than a
//!   threshold `T` chosen from the current kernel variance so that the dropped
//!   mass is at most ε;
//! * **binning** snaps projections onto a shared grid of width `B` and replaces
//!   each occupied cell by the mean of its members, weighting the kernel sum by
//!   cell counts.
//!
//! Both evaluators first build a *plan* (retained pair windows, or bin
//! membership). Evaluating a plan at a different projection vector keeps the
//! pair set / membership frozen, which is what makes the reported gradient the
//! exact derivative of the reported value.

use serde::{Deserialize, Serialize};

use crate::dataset::PointSet;
use crate::error::{MelcError, Result};
use crate::potential::{check_variance, GradContext, PairAccumulator, PotentialValue};

/// Which potential evaluator to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Discard,
    Bin,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Exact => "exact",
            Mode::Discard => "discard",
            Mode::Bin => "bin",
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.pad(self.as_str())
    }
}

impl std::str::FromStr for Mode {
    type Err = MelcError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "exact" | "dcs" => Ok(Mode::Exact),
            "discard" | "dist" => Ok(Mode::Discard),
            "bin" => Ok(Mode::Bin),
            other => Err(MelcError::InvalidConfig(format!("unknown evaluator mode `{other}`"))),
        }
    }
}

/// Evaluator selection and its acceptable error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApproxConfig {
    pub mode: Mode,
    /// Acceptable absolute error of each potential value.
    pub epsilon: f64,
    /// Fraction of pairs assumed to be discarded; 1 makes the discard bound unconditional.
    pub p_fraction: f64,
    /// Re-estimate `p_fraction` from a first sweep and recompute the threshold once.
    /// The ε guarantee only holds with this off.
    pub refine_p: bool,
}

impl Default for ApproxConfig {
    fn default() -> Self {
        Self::exact()
    }
}

impl ApproxConfig {
    pub fn exact() -> Self {
        Self {
            mode: Mode::Exact,
            epsilon: 0.0,
            p_fraction: 1.0,
            refine_p: false,
        }
    }

    pub fn discard(epsilon: f64) -> Self {
        Self {
            mode: Mode::Discard,
            epsilon,
            ..Self::exact()
        }
    }

    pub fn bin(epsilon: f64) -> Self {
        Self {
            mode: Mode::Bin,
            epsilon,
            ..Self::exact()
        }
    }

    pub fn new(mode: Mode, epsilon: f64) -> Self {
        Self {
            mode,
            epsilon,
            ..Self::exact()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0) || self.epsilon.is_nan() {
            return Err(MelcError::InvalidConfig(format!(
                "epsilon must be non-negative, got {}",
                self.epsilon
            )));
        }
        if !(self.p_fraction > 0.0 && self.p_fraction <= 1.0) {
            return Err(MelcError::InvalidConfig(format!(
                "p_fraction must lie in (0, 1], got {}",
                self.p_fraction
            )));
        }
        Ok(())
    }
}

/// Distance beyond which projected pairs may be dropped while keeping the
/// potential within `epsilon`: √max{0, −V·ln(2(ε/p)²πV)}.
///
/// Returns `+∞` for `epsilon == 0` (nothing may be dropped).
pub fn discard_threshold(variance: f64, epsilon: f64, p: f64) -> f64 {
    if epsilon == 0.0 {
        return f64::INFINITY;
    }
    let ratio = epsilon / p;
    let arg = 2.0 * ratio * ratio * std::f64::consts::PI * variance;
    (-variance * arg.ln()).max(0.0).sqrt()
}

/// Largest grid width keeping the binned potential within `epsilon`:
/// √(−2V·ln(max{0, 1 − ε√(2πV)})).
///
/// Returns `+∞` when any width satisfies the bound and `0` for `epsilon == 0`.
pub fn bin_width(variance: f64, epsilon: f64) -> f64 {
    let inner = 1.0 - epsilon * (2.0 * std::f64::consts::PI * variance).sqrt();
    if inner <= 0.0 {
        return f64::INFINITY;
    }
    (-2.0 * variance * inner.ln()).max(0.0).sqrt()
}

/// Projections of one point set together with an ordering that sorts them.
#[derive(Debug, Clone, Copy)]
pub struct Ranked<'a> {
    pub values: &'a [f64],
    pub order: &'a [usize],
}

impl<'a> Ranked<'a> {
    pub fn new(values: &'a [f64], order: &'a [usize]) -> Result<Self> {
        if values.len() != order.len() {
            return Err(MelcError::LengthMismatch {
                left: order.len(),
                right: values.len(),
            });
        }
        if !is_sorted_by(order, values) {
            return Err(MelcError::InvalidConfig("order does not sort the projections".into()));
        }
        Ok(Self { values, order })
    }

    #[inline]
    fn at(&self, rank: usize) -> f64 {
        self.values[self.order[rank]]
    }

    fn len(&self) -> usize {
        self.order.len()
    }
}

fn is_sorted_by(order: &[usize], values: &[f64]) -> bool {
    order.windows(2).all(|w| values[w[0]] <= values[w[1]])
}

/// Full sort of `values`, ties broken by index.
pub fn sorted_order(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]).then(i.cmp(&j)));
    order
}

/// Re-sorts `order` for new `values` by insertion sort, starting from the
/// previous ordering. Returns the number of element moves.
pub fn insertion_resort(order: &mut [usize], values: &[f64]) -> usize {
    let mut moves = 0;
    for i in 1..order.len() {
        let item = order[i];
        let key = values[item];
        let mut j = i;
        while j > 0 && values[order[j - 1]] > key {
            order[j] = order[j - 1];
            j -= 1;
            moves += 1;
        }
        order[j] = item;
    }
    moves
}

/// Orderings of both classes' projections, reused across evaluations of one
/// optimization run. Consecutive projection vectors change the order only
/// slightly, so re-sorting is close to linear.
#[derive(Debug, Clone, Default)]
pub struct SortCache {
    pub perm_neg: Vec<usize>,
    pub perm_pos: Vec<usize>,
    pub last_neg: Vec<f64>,
    pub last_pos: Vec<f64>,
    /// Element moves performed by the last update.
    pub last_moves: usize,
}

impl SortCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn update(&mut self, neg: &[f64], pos: &[f64]) -> usize {
        let moves = update_order(&mut self.perm_neg, neg) + update_order(&mut self.perm_pos, pos);
        self.last_neg.clear();
        self.last_neg.extend_from_slice(neg);
        self.last_pos.clear();
        self.last_pos.extend_from_slice(pos);
        self.last_moves = moves;
        moves
    }

    pub fn is_consistent(&self) -> bool {
        self.perm_neg.len() == self.last_neg.len()
            && self.perm_pos.len() == self.last_pos.len()
            && is_sorted_by(&self.perm_neg, &self.last_neg)
            && is_sorted_by(&self.perm_pos, &self.last_pos)
    }
}

fn update_order(order: &mut Vec<usize>, values: &[f64]) -> usize {
    if order.len() != values.len() {
        *order = sorted_order(values);
        0
    } else {
        insertion_resort(order, values)
    }
}

/// Functional form of [`SortCache::update`].
pub fn sort_cache_update(mut cache: SortCache, neg: &[f64], pos: &[f64]) -> SortCache {
    cache.update(neg, pos);
    cache
}

/// Outcome of one discard sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscardStats {
    pub threshold: f64,
    pub pairs_retained: u64,
    pub pairs_discarded: u64,
}

/// The retained pair set of a discard sweep: for the `i`-th smallest `a`,
/// the `b`s at ranks `windows[i].0..windows[i].1`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscardPlan {
    pub threshold: f64,
    order_a: Vec<usize>,
    order_b: Vec<usize>,
    windows: Vec<(usize, usize)>,
    retained: u64,
}

impl DiscardPlan {
    pub fn build(a: Ranked<'_>, b: Ranked<'_>, threshold: f64) -> Self {
        let nb = b.len();
        let mut windows = Vec::with_capacity(a.len());
        let mut retained = 0u64;
        if threshold > 0.0 {
            let (mut lo, mut hi) = (0usize, 0usize);
            for i in 0..a.len() {
                let x = a.at(i);
                while lo < nb && b.at(lo) < x - threshold {
                    lo += 1;
                }
                hi = hi.max(lo);
                while hi < nb && b.at(hi) <= x + threshold {
                    hi += 1;
                }
                retained += (hi - lo) as u64;
                windows.push((lo, hi));
            }
        } else {
            // T = 0: any threshold meets the bound, so every pair may go.
            windows.resize(a.len(), (0, 0));
        }
        Self {
            threshold,
            order_a: a.order.to_vec(),
            order_b: b.order.to_vec(),
            windows,
            retained,
        }
    }

    pub fn stats(&self) -> DiscardStats {
        let naive = (self.order_a.len() * self.order_b.len()) as u64;
        DiscardStats {
            threshold: self.threshold,
            pairs_retained: self.retained,
            pairs_discarded: naive - self.retained,
        }
    }

    /// Retained pairs as (index into A, index into B).
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.windows.iter().enumerate().flat_map(move |(i, &(lo, hi))| {
            let ia = self.order_a[i];
            self.order_b[lo..hi].iter().map(move |&ib| (ia, ib))
        })
    }

    pub fn evaluate(
        &self,
        proj_a: &[f64],
        proj_b: &[f64],
        variance: f64,
        grad: Option<GradContext<'_>>,
    ) -> Result<PotentialValue> {
        check_variance(variance)?;
        let mut acc = PairAccumulator::new(variance, proj_a.len(), proj_b.len(), grad.is_some());
        for (i, &(lo, hi)) in self.windows.iter().enumerate() {
            let ia = self.order_a[i];
            let pa = proj_a[ia];
            for &ib in &self.order_b[lo..hi] {
                acc.add(ia, ib, pa - proj_b[ib], 1.0);
            }
        }
        acc.finish(proj_a.len(), proj_b.len(), grad)
    }
}

/// Sums kernel terms only over pairs within the adaptive threshold.
///
/// Pairs at exactly the threshold are kept. With `p = 1` the result is within
/// `epsilon` of the exact potential.
pub fn ip_discard(
    a: Ranked<'_>,
    b: Ranked<'_>,
    variance: f64,
    epsilon: f64,
    p: f64,
    grad: Option<GradContext<'_>>,
) -> Result<(PotentialValue, DiscardStats)> {
    if a.len() == 0 || b.len() == 0 {
        return Err(MelcError::EmptyInput("potential operands"));
    }
    check_variance(variance)?;
    let plan = discard_plan(a, b, variance, epsilon, p, false);
    let value = plan.evaluate(a.values, b.values, variance, grad)?;
    Ok((value, plan.stats()))
}

pub(crate) fn discard_plan(
    a: Ranked<'_>,
    b: Ranked<'_>,
    variance: f64,
    epsilon: f64,
    p: f64,
    refine_p: bool,
) -> DiscardPlan {
    let plan = DiscardPlan::build(a, b, discard_threshold(variance, epsilon, p));
    if !refine_p {
        return plan;
    }
    let stats = plan.stats();
    let naive = (stats.pairs_retained + stats.pairs_discarded) as f64;
    let observed = stats.pairs_discarded as f64 / naive;
    if observed > 0.0 && observed < p {
        DiscardPlan::build(a, b, discard_threshold(variance, epsilon, observed))
    } else {
        plan
    }
}

/// Bin membership of one point set: members of bin `k` are
/// `members[offsets[k]..offsets[k + 1]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Bins {
    offsets: Vec<usize>,
    members: Vec<usize>,
}

impl Bins {
    fn build(r: Ranked<'_>, anchor: f64, width: f64) -> Self {
        let mut offsets = Vec::new();
        let mut prev: Option<f64> = None;
        for rank in 0..r.len() {
            let x = r.at(rank);
            let key = if width.is_infinite() {
                0.0
            } else if width == 0.0 {
                x
            } else {
                ((x - anchor) / width).floor()
            };
            if prev != Some(key) {
                offsets.push(rank);
                prev = Some(key);
            }
        }
        offsets.push(r.len());
        Self {
            offsets,
            members: r.order.to_vec(),
        }
    }

    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn members(&self, k: usize) -> &[usize] {
        &self.members[self.offsets[k]..self.offsets[k + 1]]
    }

    fn representatives(&self, proj: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut reps = Vec::with_capacity(self.len());
        let mut counts = Vec::with_capacity(self.len());
        for k in 0..self.len() {
            let m = self.members(k);
            reps.push(m.iter().map(|&i| proj[i]).sum::<f64>() / m.len() as f64);
            counts.push(m.len() as f64);
        }
        (reps, counts)
    }

    fn representative_points(&self, points: &PointSet) -> PointSet {
        let dim = points.dim();
        let mut data = vec![0.0; self.len() * dim];
        for k in 0..self.len() {
            let m = self.members(k);
            let row = &mut data[k * dim..(k + 1) * dim];
            for &i in m {
                for (r, x) in row.iter_mut().zip(points.row(i)) {
                    *r += x;
                }
            }
            row.iter_mut().for_each(|r| *r /= m.len() as f64);
        }
        PointSet::from_flat(data, dim).expect("means of finite points are finite")
    }
}

/// Shared-grid bin membership for a pair of point sets. `b == None` means the
/// two operands are the same set.
#[derive(Debug, Clone, PartialEq)]
pub struct BinPlan {
    pub width: f64,
    pub anchor: f64,
    a: Bins,
    b: Option<Bins>,
}

impl BinPlan {
    /// Grid anchored at the smallest projection of either operand.
    pub fn build(a: Ranked<'_>, b: Ranked<'_>, width: f64) -> Self {
        let anchor = a.at(0).min(b.at(0));
        Self {
            width,
            anchor,
            a: Bins::build(a, anchor, width),
            b: Some(Bins::build(b, anchor, width)),
        }
    }

    pub fn build_self(a: Ranked<'_>, width: f64) -> Self {
        let anchor = a.at(0);
        Self {
            width,
            anchor,
            a: Bins::build(a, anchor, width),
            b: None,
        }
    }

    pub fn bins_a(&self) -> &Bins {
        &self.a
    }

    pub fn bins_b(&self) -> &Bins {
        self.b.as_ref().unwrap_or(&self.a)
    }

    pub fn evaluate(
        &self,
        proj_a: &[f64],
        proj_b: &[f64],
        variance: f64,
        grad: Option<GradContext<'_>>,
    ) -> Result<PotentialValue> {
        check_variance(variance)?;
        let bins_a = self.bins_a();
        let (reps_a, counts_a) = bins_a.representatives(proj_a);
        let (reps_b, counts_b) = match &self.b {
            Some(b) => b.representatives(proj_b),
            None => (reps_a.clone(), counts_a.clone()),
        };
        let mut acc = PairAccumulator::new(variance, reps_a.len(), reps_b.len(), grad.is_some());
        for (i, (&ra, &ca)) in reps_a.iter().zip(&counts_a).enumerate() {
            for (j, (&rb, &cb)) in reps_b.iter().zip(&counts_b).enumerate() {
                acc.add(i, j, ra - rb, ca * cb);
            }
        }
        match grad {
            None => acc.finish(proj_a.len(), proj_b.len(), None),
            Some(ctx) => {
                let atoms_a = bins_a.representative_points(ctx.points_a);
                let atoms_b = match &self.b {
                    Some(b) => b.representative_points(ctx.points_b),
                    None => atoms_a.clone(),
                };
                let ctx = GradContext {
                    points_a: &atoms_a,
                    points_b: &atoms_b,
                    dv: ctx.dv,
                };
                acc.finish(proj_a.len(), proj_b.len(), Some(ctx))
            }
        }
    }

    /// Materialized representatives of both operands.
    pub fn partition(
        &self,
        proj_a: &[f64],
        proj_b: &[f64],
        points_a: &PointSet,
        points_b: &PointSet,
    ) -> BinPartition {
        let side = |bins: &Bins, proj: &[f64], points: &PointSet| {
            let (reps, counts) = bins.representatives(proj);
            let pts = bins.representative_points(points);
            reps.into_iter()
                .zip(counts)
                .zip(pts.rows())
                .map(|((projection, count), point)| BinRep {
                    projection,
                    point: point.to_vec(),
                    count: count as usize,
                })
                .collect()
        };
        BinPartition {
            width: self.width,
            anchor: self.anchor,
            a: side(self.bins_a(), proj_a, points_a),
            b: side(self.bins_b(), proj_b, points_b),
        }
    }
}

/// One occupied grid cell.
#[derive(Debug, Clone, PartialEq)]
pub struct BinRep {
    /// Mean of the member projections.
    pub projection: f64,
    /// Mean of the member points.
    pub point: Vec<f64>,
    pub count: usize,
}

/// Grid cells `[anchor + i·width, anchor + (i+1)·width)` and their occupants.
#[derive(Debug, Clone, PartialEq)]
pub struct BinPartition {
    pub width: f64,
    pub anchor: f64,
    pub a: Vec<BinRep>,
    pub b: Vec<BinRep>,
}

/// Binned potential: kernel terms between cell representatives weighted by
/// cell counts. `B = +∞` collapses each operand to one cell, `B = 0` gives
/// each distinct projection its own cell.
pub fn ip_bin(
    a: Ranked<'_>,
    b: Ranked<'_>,
    points_a: &PointSet,
    points_b: &PointSet,
    variance: f64,
    epsilon: f64,
    dv: Option<&[f64]>,
) -> Result<(PotentialValue, BinPartition)> {
    if a.len() == 0 || b.len() == 0 {
        return Err(MelcError::EmptyInput("potential operands"));
    }
    if points_a.len() != a.len() || points_b.len() != b.len() {
        return Err(MelcError::LengthMismatch {
            left: points_a.len() + points_b.len(),
            right: a.len() + b.len(),
        });
    }
    check_variance(variance)?;
    let plan = BinPlan::build(a, b, bin_width(variance, epsilon));
    let grad = dv.map(|dv| GradContext {
        points_a,
        points_b,
        dv,
    });
    let value = plan.evaluate(a.values, b.values, variance, grad)?;
    let partition = plan.partition(a.values, b.values, points_a, points_b);
    Ok((value, partition))
}

/// How one potential term is evaluated.
#[derive(Debug, Clone, PartialEq)]
pub enum TermPlan {
    Exact,
    Discard(DiscardPlan),
    Bin(BinPlan),
}

impl TermPlan {
    pub fn evaluate(
        &self,
        proj_a: &[f64],
        proj_b: &[f64],
        variance: f64,
        grad: Option<GradContext<'_>>,
    ) -> Result<PotentialValue> {
        match self {
            TermPlan::Exact => crate::potential::ip_exact(proj_a, proj_b, variance, grad),
            TermPlan::Discard(plan) => plan.evaluate(proj_a, proj_b, variance, grad),
            TermPlan::Bin(plan) => plan.evaluate(proj_a, proj_b, variance, grad),
        }
    }

    pub fn discard_stats(&self) -> Option<DiscardStats> {
        match self {
            TermPlan::Discard(p) => Some(p.stats()),
            _ => None,
        }
    }
}
