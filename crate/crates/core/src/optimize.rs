//! Unconstrained maximization of the divergence.
//!
//! D_CS is scale invariant in the projection vector, so maximizing
//! `D_CS(v) − (‖v‖² − 1)²` over all of ℝᵈ has the same maximizers as the
//! problem restricted to the unit sphere, and any general-purpose gradient
//! method applies. Two are provided: nonlinear conjugate gradient
//! (Polak–Ribière+) and L-BFGS, both driven by a strong-Wolfe line search on
//! the negated objective.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::approx::ApproxConfig;
use crate::dataset::{dot, norm, LabeledDataset};
use crate::error::{MelcError, Result};
use crate::potential::{DcsEvaluator, KernelStats};
use crate::variance::KdeParams;

/// Value and gradient of an objective to be maximized.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    /// `None` when the value is not finite.
    pub gradient: Option<Vec<f64>>,
    pub stats: KernelStats,
}

/// A function to maximize, given as `(f, ∇f)`.
pub trait Objective {
    fn dim(&self) -> usize;
    fn evaluate(&mut self, v: &[f64]) -> Result<Evaluation>;
}

impl<O: Objective + ?Sized> Objective for &mut O {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn evaluate(&mut self, v: &[f64]) -> Result<Evaluation> {
        (**self).evaluate(v)
    }
}

/// D_CS of a dataset as an [`Objective`].
#[derive(Debug, Clone)]
pub struct DcsObjective<'a> {
    evaluator: DcsEvaluator<'a>,
}

impl<'a> DcsObjective<'a> {
    pub fn new(dataset: &'a LabeledDataset, params: KdeParams, config: ApproxConfig) -> Result<Self> {
        Ok(Self {
            evaluator: DcsEvaluator::new(dataset, params, config)?,
        })
    }

    pub fn evaluator(&self) -> &DcsEvaluator<'a> {
        &self.evaluator
    }
}

impl Objective for DcsObjective<'_> {
    fn dim(&self) -> usize {
        self.evaluator.dataset().dim()
    }

    fn evaluate(&mut self, v: &[f64]) -> Result<Evaluation> {
        let d = self.evaluator.evaluate(v, true)?;
        Ok(Evaluation {
            value: d.value,
            gradient: d.gradient,
            stats: d.stats,
        })
    }
}

/// `base(v) − (‖v‖² − 1)²`, with gradient `∇base(v) − 4v(‖v‖² − 1)`.
#[derive(Debug, Clone)]
pub struct Penalized<O> {
    pub base: O,
}

pub fn penalized_objective<O: Objective>(base: O) -> Penalized<O> {
    Penalized { base }
}

impl<O: Objective> Objective for Penalized<O> {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn evaluate(&mut self, v: &[f64]) -> Result<Evaluation> {
        let mut ev = self.base.evaluate(v)?;
        let excess = dot(v, v) - 1.0;
        ev.value -= excess * excess;
        if let Some(g) = ev.gradient.as_mut() {
            for (gk, vk) in g.iter_mut().zip(v) {
                *gk -= 4.0 * vk * excess;
            }
        }
        Ok(ev)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Cg,
    Lbfgs,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Cg => "cg",
            Method::Lbfgs => "lbfgs",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.pad(self.as_str())
    }
}

impl std::str::FromStr for Method {
    type Err = MelcError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cg" => Ok(Method::Cg),
            "lbfgs" | "l-bfgs" | "l-bfgs-b" => Ok(Method::Lbfgs),
            other => Err(MelcError::InvalidConfig(format!("unknown optimizer `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub method: Method,
    pub max_iterations: usize,
    /// Infinity-norm gradient tolerance.
    pub gradient_tolerance: f64,
    pub lbfgs_memory: usize,
    pub wolfe_c1: f64,
    pub wolfe_c2: f64,
    pub max_line_search_steps: usize,
    pub seed: u64,
}

impl OptimizerConfig {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            max_iterations: 500,
            gradient_tolerance: 1e-5,
            lbfgs_memory: 10,
            wolfe_c1: 1e-4,
            wolfe_c2: match method {
                Method::Cg => 0.4,
                Method::Lbfgs => 0.9,
            },
            max_line_search_steps: 40,
            seed: 0,
        }
    }

    pub fn cg() -> Self {
        Self::new(Method::Cg)
    }

    pub fn lbfgs() -> Self {
        Self::new(Method::Lbfgs)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(MelcError::InvalidConfig(msg.into()));
        if !(0.0 < self.wolfe_c1 && self.wolfe_c1 < self.wolfe_c2 && self.wolfe_c2 < 1.0) {
            return bad("Wolfe constants must satisfy 0 < c1 < c2 < 1");
        }
        if self.max_iterations == 0 || self.max_line_search_steps == 0 || self.lbfgs_memory == 0 {
            return bad("iteration caps and L-BFGS memory must be positive");
        }
        if !(self.gradient_tolerance > 0.0) {
            return bad("gradient tolerance must be positive");
        }
        Ok(())
    }
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self::lbfgs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    MaxIterations,
    LineSearchFailure,
    /// The starting point (or, in restart summaries, the whole run) had no finite value.
    NonFinite,
    /// The objective reached +∞ (e.g. every cross-class kernel term vanished);
    /// the run stops at that point.
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub v_final: Vec<f64>,
    pub value_final: f64,
    /// Accepted line-search steps.
    pub iterations: usize,
    pub function_evaluations: usize,
    pub exp_calls_total: u64,
    pub naive_pairs_total: u64,
    pub converged: bool,
    pub final_norm: f64,
    pub termination: Termination,
    /// Objective value at the start and after every accepted step.
    pub value_history: Vec<f64>,
}

struct Counters {
    evaluations: usize,
    stats: KernelStats,
}

struct Trial {
    alpha: f64,
    /// Negated objective.
    f: f64,
    g: Vec<f64>,
    x: Vec<f64>,
    slope: f64,
}

#[derive(Clone, Copy)]
struct Bound {
    alpha: f64,
    f: f64,
    slope: f64,
}

enum Probe {
    Finite(Trial),
    /// −∞, or a finite value without a gradient.
    Rejected,
    /// +∞: the objective's supremum, reached at this point.
    Unbounded(Vec<f64>),
}

fn probe<O: Objective + ?Sized>(
    obj: &mut O,
    x: &[f64],
    d: &[f64],
    alpha: f64,
    counters: &mut Counters,
) -> Result<Probe> {
    let x_new: Vec<f64> = x.iter().zip(d).map(|(xi, di)| xi + alpha * di).collect();
    let ev = obj.evaluate(&x_new)?;
    counters.evaluations += 1;
    counters.stats += ev.stats;
    if ev.value.is_nan() {
        return Err(MelcError::NonFiniteObjective);
    }
    if ev.value == f64::INFINITY {
        return Ok(Probe::Unbounded(x_new));
    }
    match ev.gradient {
        Some(grad) if ev.value.is_finite() => {
            let g: Vec<f64> = grad.iter().map(|x| -x).collect();
            let slope = dot(&g, d);
            Ok(Probe::Finite(Trial {
                alpha,
                f: -ev.value,
                g,
                x: x_new,
                slope,
            }))
        }
        _ => Ok(Probe::Rejected),
    }
}

enum Step {
    Accepted(Trial),
    Unbounded(Vec<f64>),
    Failed,
}

fn cubic_min(lo: Bound, hi: Bound) -> Option<f64> {
    let d1 = lo.slope + hi.slope - 3.0 * (lo.f - hi.f) / (lo.alpha - hi.alpha);
    let disc = d1 * d1 - lo.slope * hi.slope;
    if !(disc >= 0.0) {
        return None;
    }
    let d2 = (hi.alpha - lo.alpha).signum() * disc.sqrt();
    let t = hi.alpha - (hi.alpha - lo.alpha) * (hi.slope + d2 - d1) / (hi.slope - lo.slope + 2.0 * d2);
    t.is_finite().then_some(t)
}

fn quadratic_min(lo: Bound, hi_alpha: f64, hi_f: f64) -> Option<f64> {
    let da = hi_alpha - lo.alpha;
    let denom = 2.0 * (hi_f - lo.f - lo.slope * da);
    let t = lo.alpha - lo.slope * da * da / denom;
    (denom > 0.0 && t.is_finite()).then_some(t)
}

fn interpolate(lo: Bound, hi_alpha: f64, hi: Option<(f64, f64)>) -> f64 {
    let guess = match hi {
        Some((f, slope)) => cubic_min(lo, Bound { alpha: hi_alpha, f, slope })
            .or_else(|| quadratic_min(lo, hi_alpha, f)),
        None => None,
    };
    let (a, b) = if lo.alpha < hi_alpha {
        (lo.alpha, hi_alpha)
    } else {
        (hi_alpha, lo.alpha)
    };
    let margin = 0.1 * (b - a);
    match guess {
        Some(t) => t.clamp(a + margin, b - margin),
        None => 0.5 * (a + b),
    }
}

/// Strong-Wolfe line search on the negated objective along the descent
/// direction `d`. A trial reaching +∞ ends the search at that point.
#[allow(clippy::too_many_arguments)]
fn line_search<O: Objective + ?Sized>(
    obj: &mut O,
    x: &[f64],
    f0: f64,
    slope0: f64,
    d: &[f64],
    alpha_init: f64,
    cfg: &OptimizerConfig,
    counters: &mut Counters,
) -> Result<Step> {
    let (c1, c2) = (cfg.wolfe_c1, cfg.wolfe_c2);
    let armijo = |alpha: f64, f: f64| f <= f0 + c1 * alpha * slope0;
    let curvature = |slope: f64| slope.abs() <= -c2 * slope0;
    let mut steps = 0;

    let mut prev = Bound {
        alpha: 0.0,
        f: f0,
        slope: slope0,
    };
    let mut alpha = alpha_init;
    // (lo, hi) bracket for the zoom phase; hi carries (f, slope) unless rejected.
    let (mut lo, mut hi_alpha, mut hi): (Bound, f64, Option<(f64, f64)>);
    loop {
        if steps >= cfg.max_line_search_steps {
            return Ok(Step::Failed);
        }
        steps += 1;
        match probe(obj, x, d, alpha, counters)? {
            Probe::Unbounded(x) => return Ok(Step::Unbounded(x)),
            Probe::Rejected => {
                (lo, hi_alpha, hi) = (prev, alpha, None);
                break;
            }
            Probe::Finite(t) => {
                if !armijo(alpha, t.f) || (steps > 1 && t.f >= prev.f) {
                    (lo, hi_alpha, hi) = (prev, alpha, Some((t.f, t.slope)));
                    break;
                }
                if curvature(t.slope) {
                    return Ok(Step::Accepted(t));
                }
                let here = Bound {
                    alpha,
                    f: t.f,
                    slope: t.slope,
                };
                if t.slope >= 0.0 {
                    (lo, hi_alpha, hi) = (here, prev.alpha, Some((prev.f, prev.slope)));
                    break;
                }
                prev = here;
                alpha *= 2.0;
            }
        }
    }

    while steps < cfg.max_line_search_steps {
        if (hi_alpha - lo.alpha).abs() <= 1e-16 * lo.alpha.abs().max(1e-300) {
            return Ok(Step::Failed);
        }
        let alpha = interpolate(lo, hi_alpha, hi);
        steps += 1;
        match probe(obj, x, d, alpha, counters)? {
            Probe::Unbounded(x) => return Ok(Step::Unbounded(x)),
            Probe::Rejected => {
                hi_alpha = alpha;
                hi = None;
            }
            Probe::Finite(t) => {
                if !armijo(alpha, t.f) || t.f >= lo.f {
                    hi_alpha = alpha;
                    hi = Some((t.f, t.slope));
                } else {
                    if curvature(t.slope) {
                        return Ok(Step::Accepted(t));
                    }
                    if t.slope * (hi_alpha - lo.alpha) >= 0.0 {
                        hi_alpha = lo.alpha;
                        hi = Some((lo.f, lo.slope));
                    }
                    lo = Bound {
                        alpha: t.alpha,
                        f: t.f,
                        slope: t.slope,
                    };
                }
            }
        }
    }
    Ok(Step::Failed)
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// L-BFGS two-loop recursion: returns −H·g.
fn lbfgs_direction(g: &[f64], memory: &[(Vec<f64>, Vec<f64>, f64)]) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(memory.len());
    for (s, y, rho) in memory.iter().rev() {
        let a = rho * dot(s, &q);
        q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
        alphas.push(a);
    }
    if let Some((s, y, _)) = memory.last() {
        let scale = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|qi| *qi *= scale);
    }
    for ((s, y, rho), a) in memory.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, &q);
        q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
    }
    q.iter_mut().for_each(|qi| *qi = -*qi);
    q
}

/// Maximizes `obj` from `v0` with the configured method.
pub fn optimize<O: Objective + ?Sized>(
    obj: &mut O,
    v0: &[f64],
    cfg: &OptimizerConfig,
) -> Result<OptimizationResult> {
    cfg.validate()?;
    if v0.len() != obj.dim() {
        return Err(MelcError::DimensionMismatch {
            expected: obj.dim(),
            found: v0.len(),
        });
    }
    if v0.iter().any(|x| !x.is_finite()) {
        return Err(MelcError::InvalidConfig("starting vector must be finite".into()));
    }
    let mut counters = Counters {
        evaluations: 0,
        stats: KernelStats::default(),
    };
    let finish = |x: Vec<f64>, f: f64, iterations, termination, counters: &Counters, history| {
        let final_norm = norm(&x);
        OptimizationResult {
            v_final: x,
            value_final: -f,
            iterations,
            function_evaluations: counters.evaluations,
            exp_calls_total: counters.stats.exp_calls,
            naive_pairs_total: counters.stats.naive_pairs,
            converged: termination == Termination::Converged,
            final_norm,
            termination,
            value_history: history,
        }
    };

    let zero = vec![0.0; v0.len()];
    let start = match probe(obj, v0, &zero, 0.0, &mut counters)? {
        Probe::Finite(t) => t,
        Probe::Rejected => {
            let value = f64::NEG_INFINITY;
            return Ok(finish(v0.to_vec(), -value, 0, Termination::NonFinite, &counters, vec![value]));
        }
        Probe::Unbounded(x) => {
            let value = f64::INFINITY;
            return Ok(finish(x, -value, 0, Termination::Unbounded, &counters, vec![value]));
        }
    };
    let (mut x, mut f, mut g) = (start.x, start.f, start.g);
    let mut history = vec![-f];
    let mut iterations = 0;
    let mut memory: Vec<(Vec<f64>, Vec<f64>, f64)> = Vec::new();
    let mut d_prev: Vec<f64> = Vec::new();
    let mut g_prev: Vec<f64> = Vec::new();
    let mut last_step = (0.0f64, 0.0f64); // (alpha, slope) of the previous iteration

    let termination = loop {
        if inf_norm(&g) <= cfg.gradient_tolerance {
            break Termination::Converged;
        }
        if iterations >= cfg.max_iterations {
            break Termination::MaxIterations;
        }
        let mut d = match cfg.method {
            Method::Lbfgs => lbfgs_direction(&g, &memory),
            Method::Cg if iterations == 0 => g.iter().map(|x| -x).collect(),
            Method::Cg => {
                let gg_prev = dot(&g_prev, &g_prev);
                let beta = (g.iter().zip(&g_prev).map(|(a, b)| a * (a - b)).sum::<f64>() / gg_prev).max(0.0);
                g.iter().zip(&d_prev).map(|(gi, di)| -gi + beta * di).collect()
            }
        };
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            // not a descent direction: restart from steepest descent
            memory.clear();
            d = g.iter().map(|x| -x).collect();
            slope = dot(&g, &d);
        }
        let first = iterations == 0 || (cfg.method == Method::Lbfgs && memory.is_empty());
        let alpha_init = if first {
            (1.0 / norm(&g)).min(1.0)
        } else {
            match cfg.method {
                Method::Lbfgs => 1.0,
                Method::Cg => {
                    let a = last_step.0 * last_step.1 / slope;
                    if a.is_finite() && a > 0.0 {
                        a
                    } else {
                        1.0
                    }
                }
            }
        };
        let t = match line_search(obj, &x, f, slope, &d, alpha_init, cfg, &mut counters)? {
            Step::Accepted(t) => t,
            Step::Failed => break Termination::LineSearchFailure,
            Step::Unbounded(x_new) => {
                x = x_new;
                f = f64::NEG_INFINITY;
                iterations += 1;
                history.push(f64::INFINITY);
                break Termination::Unbounded;
            }
        };
        if cfg.method == Method::Lbfgs {
            let s: Vec<f64> = t.x.iter().zip(&x).map(|(a, b)| a - b).collect();
            let y: Vec<f64> = t.g.iter().zip(&g).map(|(a, b)| a - b).collect();
            let sy = dot(&s, &y);
            if sy > 1e-12 * norm(&s) * norm(&y) {
                if memory.len() == cfg.lbfgs_memory {
                    memory.remove(0);
                }
                memory.push((s, y, 1.0 / sy));
            }
        }
        last_step = (t.alpha, slope);
        g_prev = std::mem::replace(&mut g, t.g);
        d_prev = d;
        x = t.x;
        f = t.f;
        iterations += 1;
        history.push(-f);
    };
    Ok(finish(x, f, iterations, termination, &counters, history))
}

/// Unit-norm starting vectors: standard normal draws, normalized. Depends only
/// on `(seed, n, dim)`.
pub fn start_vectors(seed: u64, n: usize, dim: usize) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| loop {
            let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
            let n = norm(&v);
            if n > 0.0 {
                break v.into_iter().map(|x| x / n).collect();
            }
        })
        .collect()
}

/// All restart runs and the index of the best one.
#[derive(Debug, Clone, PartialEq)]
pub struct RestartOutcome {
    pub starts: Vec<Vec<f64>>,
    pub runs: Vec<OptimizationResult>,
    pub best_index: usize,
}

impl RestartOutcome {
    pub fn best(&self) -> &OptimizationResult {
        &self.runs[self.best_index]
    }

    pub fn into_best(mut self) -> OptimizationResult {
        self.runs.swap_remove(self.best_index)
    }

    /// Counters summed over every run.
    pub fn total_stats(&self) -> KernelStats {
        self.runs.iter().fold(KernelStats::default(), |acc, r| {
            acc + KernelStats {
                exp_calls: r.exp_calls_total,
                naive_pairs: r.naive_pairs_total,
            }
        })
    }
}

/// Runs `train` from `n_starts` seeded unit-norm starts and keeps the best.
///
/// Runs ending at −∞, or failing with [`MelcError::NonFiniteObjective`], count
/// as failed; a run reaching +∞ beats every finite one.
pub fn multi_restart<F>(dim: usize, n_starts: usize, seed: u64, mut train: F) -> Result<RestartOutcome>
where
    F: FnMut(&[f64]) -> Result<OptimizationResult>,
{
    if n_starts == 0 {
        return Err(MelcError::InvalidConfig("at least one start is required".into()));
    }
    let starts = start_vectors(seed, n_starts, dim);
    let mut runs = Vec::with_capacity(n_starts);
    for v0 in &starts {
        let run = match train(v0) {
            Ok(r) => r,
            Err(MelcError::NonFiniteObjective) => OptimizationResult {
                v_final: v0.clone(),
                value_final: f64::NAN,
                iterations: 0,
                function_evaluations: 0,
                exp_calls_total: 0,
                naive_pairs_total: 0,
                converged: false,
                final_norm: 1.0,
                termination: Termination::NonFinite,
                value_history: Vec::new(),
            },
            Err(e) => return Err(e),
        };
        runs.push(run);
    }
    let best_index = runs
        .iter()
        .enumerate()
        .filter(|(_, r)| r.value_final > f64::NEG_INFINITY)
        .fold(None::<(usize, f64)>, |best, (i, r)| match best {
            Some((_, b)) if b >= r.value_final => best,
            _ => Some((i, r.value_final)),
        })
        .map(|(i, _)| i)
        .ok_or(MelcError::AllRunsFailed)?;
    Ok(RestartOutcome {
        starts,
        runs,
        best_index,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// −‖v − target‖²
    struct Bowl {
        target: Vec<f64>,
    }

    impl Objective for Bowl {
        fn dim(&self) -> usize {
            self.target.len()
        }

        fn evaluate(&mut self, v: &[f64]) -> Result<Evaluation> {
            let diff: Vec<f64> = v.iter().zip(&self.target).map(|(a, b)| a - b).collect();
            Ok(Evaluation {
                value: -dot(&diff, &diff),
                gradient: Some(diff.iter().map(|d| -2.0 * d).collect()),
                stats: KernelStats::default(),
            })
        }
    }

    /// Concave but badly scaled; positive region only.
    struct Rosen;

    impl Objective for Rosen {
        fn dim(&self) -> usize {
            2
        }

        fn evaluate(&mut self, v: &[f64]) -> Result<Evaluation> {
            let (x, y) = (v[0], v[1]);
            let value = -((1.0 - x).powi(2) + 100.0 * (y - x * x).powi(2));
            let gx = -(-2.0 * (1.0 - x) - 400.0 * x * (y - x * x));
            let gy = -(200.0 * (y - x * x));
            Ok(Evaluation {
                value,
                gradient: Some(vec![gx, gy]),
                stats: KernelStats::default(),
            })
        }
    }

    #[test]
    fn concave_quadratic_both_methods() {
        for cfg in [OptimizerConfig::cg(), OptimizerConfig::lbfgs()] {
            let mut obj = Bowl {
                target: vec![1.0, 2.0],
            };
            let r = optimize(&mut obj, &[0.0, 0.0], &cfg).unwrap();
            assert!(r.converged, "{cfg:?}");
            assert!(r.iterations <= 5, "{} iterations with {:?}", r.iterations, cfg.method);
            assert!((r.v_final[0] - 1.0).abs() < 1e-6 && (r.v_final[1] - 2.0).abs() < 1e-6);
        }
    }

    /// A bowl peaking at 3 that jumps to +∞ from 2 on.
    struct Cliff;

    impl Objective for Cliff {
        fn dim(&self) -> usize {
            1
        }

        fn evaluate(&mut self, v: &[f64]) -> Result<Evaluation> {
            if v[0] >= 2.0 {
                return Ok(Evaluation {
                    value: f64::INFINITY,
                    gradient: None,
                    stats: KernelStats::default(),
                });
            }
            Ok(Evaluation {
                value: -(v[0] - 3.0).powi(2),
                gradient: Some(vec![-2.0 * (v[0] - 3.0)]),
                stats: KernelStats::default(),
            })
        }
    }

    #[test]
    fn reaching_infinity_stops_the_run() {
        for cfg in [OptimizerConfig::cg(), OptimizerConfig::lbfgs()] {
            let r = optimize(&mut Cliff, &[0.0], &cfg).unwrap();
            assert_eq!(r.termination, Termination::Unbounded);
            assert_eq!(r.value_final, f64::INFINITY);
            assert!(r.v_final[0] >= 2.0);
            assert_eq!(*r.value_history.last().unwrap(), f64::INFINITY);
        }
        let r = optimize(&mut Cliff, &[5.0], &OptimizerConfig::cg()).unwrap();
        assert_eq!((r.termination, r.iterations), (Termination::Unbounded, 0));
        let restarts = multi_restart(1, 1, 0, |v0| optimize(&mut Cliff, &[v0[0] + 1.0], &OptimizerConfig::cg())).unwrap();
        assert_eq!(restarts.best().value_final, f64::INFINITY);
    }

    #[test]
    fn stationary_start_takes_no_step() {
        let mut obj = Bowl {
            target: vec![1.0, 2.0],
        };
        let r = optimize(&mut obj, &[1.0, 2.0], &OptimizerConfig::lbfgs()).unwrap();
        assert!(r.converged);
        assert_eq!(r.iterations, 0);
    }

    #[test]
    fn rosenbrock_valley() {
        for cfg in [OptimizerConfig::cg(), OptimizerConfig::lbfgs()] {
            let cfg = OptimizerConfig {
                max_iterations: 5000,
                ..cfg
            };
            let r = optimize(&mut Rosen, &[-1.2, 1.0], &cfg).unwrap();
            assert!(r.converged, "{:?} {:?}", cfg.method, r.termination);
            assert!((r.v_final[0] - 1.0).abs() < 1e-4, "{:?}", r.v_final);
            assert!(r.value_history.windows(2).all(|w| w[1] >= w[0]));
        }
    }

    #[test]
    fn penalty_vanishes_on_sphere() {
        let mut p = penalized_objective(Bowl {
            target: vec![3.0, -1.0],
        });
        let v = [0.6, 0.8];
        let base = Bowl {
            target: vec![3.0, -1.0],
        }
        .evaluate(&v)
        .unwrap();
        let wrapped = p.evaluate(&v).unwrap();
        assert!((wrapped.value - base.value).abs() <= 1e-30);
    }

    #[test]
    fn penalty_at_squared_norm_two() {
        let target = vec![0.5, 0.5];
        let v = [1.0, 1.0];
        let base = Bowl { target: target.clone() }.evaluate(&v).unwrap();
        let wrapped = penalized_objective(Bowl { target }).evaluate(&v).unwrap();
        assert_eq!(wrapped.value, base.value - 1.0);
        let (gb, gw) = (base.gradient.unwrap(), wrapped.gradient.unwrap());
        for k in 0..2 {
            assert_eq!(gw[k], gb[k] - 4.0 * v[k]);
        }
    }

    #[test]
    fn start_vectors_are_unit_and_replayable() {
        let a = start_vectors(7, 4, 5);
        assert_eq!(a, start_vectors(7, 4, 5));
        assert_ne!(a, start_vectors(8, 4, 5));
        for v in &a {
            assert!((norm(v) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn single_restart_equals_single_run() {
        let cfg = OptimizerConfig::cg();
        let out = multi_restart(2, 1, 3, |v0| {
            optimize(&mut Bowl { target: vec![1.0, 2.0] }, v0, &cfg)
        })
        .unwrap();
        let direct = optimize(&mut Bowl { target: vec![1.0, 2.0] }, &start_vectors(3, 1, 2)[0], &cfg).unwrap();
        assert_eq!(out.best(), &direct);
    }

    #[test]
    fn all_failed_runs() {
        let err = multi_restart(2, 3, 0, |_| Err(MelcError::NonFiniteObjective)).unwrap_err();
        assert!(matches!(err, MelcError::AllRunsFailed));
    }

    #[test]
    fn rejects_invalid_wolfe_constants() {
        let cfg = OptimizerConfig {
            wolfe_c1: 0.5,
            wolfe_c2: 0.4,
            ..OptimizerConfig::cg()
        };
        assert!(cfg.validate().is_err());
    }
}
