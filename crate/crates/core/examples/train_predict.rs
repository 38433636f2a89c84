//! Fit a classifier with each evaluator, score it on held-out data, and
//! round-trip the model through JSON.
//!
//! cargo run --release --example train_predict

use melc::synthetic::BlobSpec;
use melc::{fit, ApproxConfig, KdeParams, MelcModel, OptimizerConfig};

fn main() -> melc::Result<()> {
    let train = BlobSpec::new(200, 5, 2.0, 1).generate()?;
    let test = BlobSpec::new(200, 5, 2.0, 2).generate()?;
    let opt = OptimizerConfig::lbfgs().with_seed(42);
    for approx in [ApproxConfig::exact(), ApproxConfig::discard(0.05), ApproxConfig::bin(0.05)] {
        let model = fit(&train, KdeParams::default(), approx, &opt, 3)?;
        let t = model.training.as_ref().unwrap();
        let m = model.evaluate(&test)?;
        println!(
            "{:>8}: test BAC {:.3}, {} iterations, {:.1}% of naive kernel calls, v = {:.3?}",
            approx.mode,
            m.bac,
            t.iterations,
            100.0 * t.exp_calls_total as f64 / t.naive_pairs_total as f64,
            model.v
        );
        let back = MelcModel::from_json(&model.to_json()?)?;
        assert_eq!(back, model);
    }
    let model = fit(&train, KdeParams::default(), ApproxConfig::exact(), &opt, 1)?;
    let x = test.pos().row(0);
    println!("\npoint {x:.2?}: densities {:.3?}, label {:?}", model.densities(x)?, model.predict(x)?);
    Ok(())
}
