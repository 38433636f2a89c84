mod common;

use common::*;
use melc::approx::{ip_bin, ip_discard, sorted_order, ApproxConfig, Ranked};
use melc::synthetic::{random_dataset, random_unit_vector};
use melc::{dcs_evaluate, ip_exact, variance_profile, DcsEvaluator, KdeParams, LabeledDataset};
use proptest::prelude::*;

fn exact() -> ApproxConfig {
    ApproxConfig::exact()
}

#[test]
fn exact_divergence_matches_direct_oracle() {
    for seed in 0..30 {
        let ds = random_dataset(seed, 2..=40, 2..=6).unwrap();
        let v = random_unit_vector(seed + 1000, ds.dim());
        for gamma in [0.5, 1.0, 2.0] {
            let got = dcs_evaluate(&ds, &v, KdeParams::new(gamma).unwrap(), exact()).unwrap();
            let want = oracle_dcs(&ds, &v, gamma);
            assert!(rel_err(got.ip_cross, want.ip_cross) < 1e-12, "seed {seed}");
            assert!(rel_err(got.ip_self_neg, want.ip_neg) < 1e-12, "seed {seed}");
            assert!(rel_err(got.ip_self_pos, want.ip_pos) < 1e-12, "seed {seed}");
            let scale = want.value.abs().max(1e-3);
            assert!((got.value - want.value).abs() / scale < 1e-10, "seed {seed}: {} vs {}", got.value, want.value);
        }
    }
}

#[test]
fn seeded_two_dimensional_instance() {
    let ds = random_dataset(77, 10..=10, 2..=2).unwrap();
    let got = dcs_evaluate(&ds, &[1.0, 0.0], KdeParams::new(1.0).unwrap(), exact()).unwrap();
    let want = oracle_dcs(&ds, &[1.0, 0.0], 1.0);
    assert!(rel_err(got.value, want.value) < 1e-12);
    assert!(got.value > 0.0);
}

#[test]
fn identical_classes_have_zero_divergence() {
    for seed in 0..20 {
        let ds = random_dataset(seed, 2..=30, 2..=5).unwrap();
        let same = LabeledDataset::new(ds.neg().clone(), ds.neg().clone()).unwrap();
        let v = random_unit_vector(seed, ds.dim());
        let d = dcs_evaluate(&same, &v, KdeParams::default(), exact()).unwrap();
        assert!(d.value.abs() < 1e-10, "{}", d.value);
    }
}

#[test]
fn divergence_is_scale_invariant() {
    for seed in 0..20 {
        let ds = random_dataset(seed, 2..=30, 2..=5).unwrap();
        let v = random_unit_vector(seed + 7, ds.dim());
        let base = dcs_evaluate(&ds, &v, KdeParams::default(), exact()).unwrap().value;
        for c in [0.5, 2.0, 10.0] {
            let cv: Vec<f64> = v.iter().map(|x| c * x).collect();
            let scaled = dcs_evaluate(&ds, &cv, KdeParams::default(), exact()).unwrap().value;
            assert!((scaled - base).abs() <= 1e-8 * base.abs().max(1.0), "c={c}: {scaled} vs {base}");
        }
    }
}

fn check_gradient(config: ApproxConfig, seeds: std::ops::Range<u64>) {
    for seed in seeds {
        let ds = random_dataset(seed, 3..=25, 2..=5).unwrap();
        let gamma = [0.5, 1.0, 2.0][seed as usize % 3];
        let v: Vec<f64> = random_unit_vector(seed + 31, ds.dim()).iter().map(|x| 1.3 * x).collect();
        let mut ev = DcsEvaluator::new(&ds, KdeParams::new(gamma).unwrap(), config).unwrap();
        let plan = ev.freeze(&v).unwrap().expect("non-degenerate");
        let at = ev.evaluate_frozen(&v, &plan, true).unwrap();
        let analytic = at.gradient.expect("gradient");
        let h = 1e-6 * common_norm(&v).max(1.0);
        let numeric = central_differences(|w| ev.evaluate_frozen(w, &plan, false).unwrap().value, &v, h);
        let worst = worst_gradient_error(&analytic, &numeric, 1e-5, 1e-8);
        assert!(worst <= 1.0, "{:?} seed {seed}: {analytic:?} vs {numeric:?}", config.mode);
    }
}

fn common_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[test]
fn exact_gradient_matches_finite_differences() {
    check_gradient(exact(), 0..20);
}

#[test]
fn frozen_discard_gradient_matches_finite_differences() {
    check_gradient(ApproxConfig::discard(0.05), 100..120);
}

#[test]
fn frozen_bin_gradient_matches_finite_differences() {
    check_gradient(ApproxConfig::bin(0.05), 200..220);
}

#[test]
fn frozen_exact_plan_equals_fresh_evaluation() {
    let ds = random_dataset(3, 10..=20, 3..=3).unwrap();
    let v = random_unit_vector(4, 3);
    let mut ev = DcsEvaluator::new(&ds, KdeParams::default(), exact()).unwrap();
    let plan = ev.freeze(&v).unwrap().unwrap();
    assert_eq!(ev.evaluate_frozen(&v, &plan, true).unwrap(), ev.evaluate(&v, true).unwrap());
}

struct Term {
    a: Vec<f64>,
    b: Vec<f64>,
    variance: f64,
}

/// The three potential terms of a random instance.
fn terms(ds: &LabeledDataset, v: &[f64], gamma: f64) -> Vec<(Term, bool)> {
    let prof = variance_profile(ds, v, KdeParams::new(gamma).unwrap()).unwrap();
    let neg = ds.neg().project(v).unwrap();
    let pos = ds.pos().project(v).unwrap();
    vec![
        (Term { a: neg.clone(), b: pos.clone(), variance: prof.v_cross }, false),
        (Term { a: neg.clone(), b: neg, variance: prof.v_self_neg }, true),
        (Term { a: pos.clone(), b: pos, variance: prof.v_self_pos }, true),
    ]
}

#[test]
fn discard_error_never_exceeds_epsilon() {
    let mut trials = 0;
    for seed in 0..200u64 {
        let ds = random_dataset(seed, 2..=60, 2..=6).unwrap();
        let v = random_unit_vector(seed ^ 0xabc, ds.dim());
        let gamma = [0.5, 1.0, 2.0][(seed % 3) as usize];
        let eps = [0.01, 0.05, 0.1][((seed / 3) % 3) as usize];
        for (t, _) in terms(&ds, &v, gamma) {
            let (oa, ob) = (sorted_order(&t.a), sorted_order(&t.b));
            let ra = Ranked::new(&t.a, &oa).unwrap();
            let rb = Ranked::new(&t.b, &ob).unwrap();
            let (approx, stats) = ip_discard(ra, rb, t.variance, eps, 1.0, None).unwrap();
            let exact = ip_exact(&t.a, &t.b, t.variance, None).unwrap();
            assert!((approx.value - exact.value).abs() <= eps, "seed {seed}");
            assert_eq!(stats.pairs_retained + stats.pairs_discarded, (t.a.len() * t.b.len()) as u64);
            assert_eq!(approx.exp_calls, stats.pairs_retained);
            trials += 1;
        }
    }
    assert_eq!(trials, 600);
}

#[test]
fn bin_error_is_small_relative_to_epsilon() {
    let mut errors = Vec::new();
    for seed in 0..200u64 {
        let ds = random_dataset(seed, 2..=60, 2..=6).unwrap();
        let v = random_unit_vector(seed ^ 0xabc, ds.dim());
        let gamma = [0.5, 1.0, 2.0][(seed % 3) as usize];
        let eps = [0.01, 0.05, 0.1][((seed / 3) % 3) as usize];
        let (pa, pb) = (ds.neg(), ds.pos());
        let prof = variance_profile(&ds, &v, KdeParams::new(gamma).unwrap()).unwrap();
        let neg = pa.project(&v).unwrap();
        let pos = pb.project(&v).unwrap();
        let (on, op) = (sorted_order(&neg), sorted_order(&pos));
        let rn = Ranked::new(&neg, &on).unwrap();
        let rp = Ranked::new(&pos, &op).unwrap();
        for (a, b, x, y, var) in [
            (rn, rp, pa, pb, prof.v_cross),
            (rn, rn, pa, pa, prof.v_self_neg),
            (rp, rp, pb, pb, prof.v_self_pos),
        ] {
            let (approx, _) = ip_bin(a, b, x, y, var, eps, None).unwrap();
            let exact = ip_exact(a.values, b.values, var, None).unwrap();
            errors.push((approx.value - exact.value).abs() / eps);
        }
    }
    errors.sort_by(f64::total_cmp);
    assert!(errors[errors.len() / 2] <= 1.0);
    assert!(*errors.last().unwrap() <= 5.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projection_is_linear(seed in 0u64..1000, a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let ds = random_dataset(seed, 2..=10, 2..=5).unwrap();
        let u = random_unit_vector(seed, ds.dim());
        let w = random_unit_vector(seed + 1, ds.dim());
        let combo: Vec<f64> = u.iter().zip(&w).map(|(x, y)| a * x + b * y).collect();
        let pc = ds.neg().project(&combo).unwrap();
        let pu = ds.neg().project(&u).unwrap();
        let pw = ds.neg().project(&w).unwrap();
        for i in 0..pc.len() {
            let want = a * pu[i] + b * pw[i];
            prop_assert!((pc[i] - want).abs() <= 1e-12 * (1.0 + want.abs() + pu[i].abs() + pw[i].abs()));
        }
    }

    #[test]
    fn variances_scale_quadratically(seed in 0u64..1000, c in 0.1f64..10.0) {
        let ds = random_dataset(seed, 2..=10, 2..=5).unwrap();
        let v = random_unit_vector(seed, ds.dim());
        let cv: Vec<f64> = v.iter().map(|x| c * x).collect();
        let p = variance_profile(&ds, &v, KdeParams::default()).unwrap();
        let q = variance_profile(&ds, &cv, KdeParams::default()).unwrap();
        prop_assert!(rel_err(q.v_cross, c * c * p.v_cross) < 1e-12);
        prop_assert!(rel_err(q.v_self_neg, c * c * p.v_self_neg) < 1e-12);
        prop_assert!(rel_err(q.v_self_pos, c * c * p.v_self_pos) < 1e-12);
    }

    #[test]
    fn potential_is_symmetric(a in prop::collection::vec(-5.0f64..5.0, 1..20),
                              b in prop::collection::vec(-5.0f64..5.0, 1..20),
                              var in 0.01f64..10.0) {
        let ab = ip_exact(&a, &b, var, None).unwrap().value;
        let ba = ip_exact(&b, &a, var, None).unwrap().value;
        prop_assert!((ab - ba).abs() <= 1e-14 * ab.abs().max(1e-300));
    }

    #[test]
    fn divergence_is_non_negative(seed in 0u64..1000) {
        let ds = random_dataset(seed, 2..=20, 2..=4).unwrap();
        let v = random_unit_vector(seed + 5, ds.dim());
        let d = dcs_evaluate(&ds, &v, KdeParams::default(), exact()).unwrap();
        prop_assert!(d.value >= -1e-12 || !d.is_finite());
    }
}
