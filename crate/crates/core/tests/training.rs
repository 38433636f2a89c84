use melc::optimize::{optimize, penalized_objective, start_vectors, DcsObjective, Objective};
use melc::synthetic::{random_dataset, random_unit_vector, BlobSpec};
use melc::{dcs_evaluate, fit, ApproxConfig, KdeParams, Label, LabeledDataset, OptimizerConfig};
use proptest::prelude::*;

fn blobs() -> LabeledDataset {
    BlobSpec::new(50, 2, 6.0, 2024).generate().unwrap()
}

#[test]
fn separable_blobs_are_learned() {
    for opt in [OptimizerConfig::cg(), OptimizerConfig::lbfgs()] {
        let model = fit(&blobs(), KdeParams::default(), ApproxConfig::exact(), &opt.with_seed(1), 3).unwrap();
        assert!((model.v.iter().map(|x| x * x).sum::<f64>().sqrt() - 1.0).abs() < 1e-12);
        assert!(model.evaluate(&blobs()).unwrap().bac >= 0.99);
    }
}

#[test]
fn indistinguishable_classes_give_chance_accuracy() {
    let ds = random_dataset(5, 40..=40, 2..=2).unwrap();
    let same = LabeledDataset::new(ds.neg().clone(), ds.neg().clone()).unwrap();
    for v in start_vectors(3, 5, 2) {
        let d = dcs_evaluate(&same, &v, KdeParams::default(), ApproxConfig::exact()).unwrap();
        assert!(d.value.abs() < 1e-10);
    }
    let model = fit(&same, KdeParams::default(), ApproxConfig::exact(), &OptimizerConfig::lbfgs(), 2).unwrap();
    assert!((model.v.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12);
    // identical densities tie everywhere, so everything is labelled positive
    assert_eq!(model.evaluate(&same).unwrap().bac, 0.5);
}

#[test]
fn zero_epsilon_discard_reproduces_exact_training() {
    let ds = BlobSpec::new(30, 3, 2.0, 8).generate().unwrap();
    for opt in [OptimizerConfig::cg(), OptimizerConfig::lbfgs()] {
        let opt = opt.with_seed(4);
        let a = fit(&ds, KdeParams::default(), ApproxConfig::exact(), &opt, 2).unwrap();
        let b = fit(&ds, KdeParams::default(), ApproxConfig::discard(0.0), &opt, 2).unwrap();
        assert_eq!(a.v, b.v);
        assert_eq!(a.training.unwrap().iterations, b.training.unwrap().iterations);
    }
}

fn oracle_label(model: &melc::MelcModel, x: &[f64]) -> Label {
    let t: f64 = model.v.iter().zip(x).map(|(a, b)| a * b).sum();
    let density = |samples: &[f64], h: f64| {
        samples.iter().map(|p| (-(t - p) * (t - p) / (2.0 * h * h)).exp()).sum::<f64>()
            / (samples.len() as f64 * h * (2.0 * std::f64::consts::PI).sqrt())
    };
    let neg = density(&model.train_proj_neg, model.h_neg);
    let pos = density(&model.train_proj_pos, model.h_pos);
    if neg > pos {
        Label::Neg
    } else {
        Label::Pos
    }
}

#[test]
fn predictions_match_direct_density_comparison() {
    let model = fit(&blobs(), KdeParams::default(), ApproxConfig::exact(), &OptimizerConfig::cg(), 2).unwrap();
    let held_out = BlobSpec::new(50, 2, 6.0, 99).generate().unwrap();
    for i in 0..held_out.len() {
        let x = held_out.get(i).0;
        assert_eq!(model.predict(x).unwrap(), oracle_label(&model, x), "point {i}");
    }
}

#[test]
fn flipping_the_direction_keeps_predictions() {
    let model = fit(&blobs(), KdeParams::default(), ApproxConfig::exact(), &OptimizerConfig::cg(), 1).unwrap();
    let flipped: Vec<f64> = model.v.iter().map(|x| -x).collect();
    let other = melc::MelcModel::from_direction(&blobs(), &flipped, 1.0).unwrap();
    let test = BlobSpec::new(40, 2, 3.0, 17).generate().unwrap();
    assert_eq!(model.predict_dataset(&test).unwrap(), other.predict_dataset(&test).unwrap());
}

#[test]
fn penalized_runs_stay_near_the_sphere() {
    let ds = BlobSpec::new(40, 2, 3.0, 11).generate().unwrap();
    for opt in [OptimizerConfig::cg(), OptimizerConfig::lbfgs()] {
        for v0 in start_vectors(12, 10, 2) {
            let mut obj = penalized_objective(DcsObjective::new(&ds, KdeParams::default(), ApproxConfig::exact()).unwrap());
            let run = optimize(&mut obj, &v0, &opt).unwrap();
            assert!((0.95..=1.05).contains(&run.final_norm), "{}", run.final_norm);
            assert!(run.value_history.windows(2).all(|w| w[1] >= w[0]));
        }
    }
}

#[test]
fn penalized_maximum_matches_sphere_grid() {
    let ds = BlobSpec::new(15, 2, 1.5, 3).generate().unwrap();
    let params = KdeParams::default();
    let mut grid_best = f64::NEG_INFINITY;
    for k in 0..10_000 {
        let theta = std::f64::consts::PI * k as f64 / 10_000.0;
        let v = [theta.cos(), theta.sin()];
        let d = dcs_evaluate(&ds, &v, params, ApproxConfig::exact()).unwrap().value;
        grid_best = grid_best.max(d);
    }
    let mut best = f64::NEG_INFINITY;
    for v0 in start_vectors(1, 10, 2) {
        let mut obj = penalized_objective(DcsObjective::new(&ds, params, ApproxConfig::exact()).unwrap());
        let run = optimize(&mut obj, &v0, &OptimizerConfig::lbfgs()).unwrap();
        best = best.max(run.value_final);
    }
    assert!((best - grid_best).abs() <= 1e-6, "{best} vs {grid_best}");
}

#[test]
fn fitting_is_deterministic() {
    let ds = BlobSpec::new(25, 3, 2.0, 6).generate().unwrap();
    let run = || fit(&ds, KdeParams::new(0.5).unwrap(), ApproxConfig::bin(0.05), &OptimizerConfig::cg().with_seed(9), 3).unwrap();
    assert_eq!(run(), run());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn penalty_vanishes_on_the_sphere(seed in 0u64..10_000) {
        let ds = random_dataset(seed, 3..=15, 2..=5).unwrap();
        let v = random_unit_vector(seed + 3, ds.dim());
        let mut base = DcsObjective::new(&ds, KdeParams::default(), ApproxConfig::exact()).unwrap();
        let mut wrapped = penalized_objective(DcsObjective::new(&ds, KdeParams::default(), ApproxConfig::exact()).unwrap());
        let b = base.evaluate(&v).unwrap();
        let w = wrapped.evaluate(&v).unwrap();
        prop_assert!((b.value - w.value).abs() <= 1e-30_f64.max(1e-15 * b.value.abs()));
        let excess = v.iter().map(|x| x * x).sum::<f64>() - 1.0;
        for ((gb, gw), vk) in b.gradient.unwrap().iter().zip(w.gradient.unwrap()).zip(&v) {
            prop_assert_eq!(gw, gb - 4.0 * vk * excess);
        }
    }
}
