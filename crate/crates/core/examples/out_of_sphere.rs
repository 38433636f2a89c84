//! Unconstrained maximization with the (‖v‖² − 1)² penalty keeps iterates near
//! the unit sphere; without it the scale-invariant objective lets ‖v‖ drift.
//!
//! cargo run --release --example out_of_sphere

use melc::optimize::{optimize, penalized_objective, start_vectors, DcsObjective};
use melc::synthetic::BlobSpec;
use melc::{ApproxConfig, KdeParams, OptimizerConfig};

fn main() -> melc::Result<()> {
    let ds = BlobSpec::new(60, 4, 2.5, 21).generate()?;
    let params = KdeParams::default();
    println!("{:>5} {:>8} {:>12} {:>12} {:>10}", "start", "method", "penalized", "bare", "D_CS");
    for (i, v0) in start_vectors(5, 6, ds.dim()).iter().enumerate() {
        for opt in [OptimizerConfig::cg(), OptimizerConfig::lbfgs()] {
            let base = DcsObjective::new(&ds, params, ApproxConfig::exact())?;
            let with = optimize(&mut penalized_objective(base), v0, &opt)?;
            let mut bare = DcsObjective::new(&ds, params, ApproxConfig::exact())?;
            let without = optimize(&mut bare, v0, &opt)?;
            println!(
                "{i:>5} {:>8} {:>12.4} {:>12.4} {:>10.4}",
                opt.method, with.final_norm, without.final_norm, with.value_final
            );
        }
    }
    Ok(())
}
