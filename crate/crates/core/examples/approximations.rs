//! Sort-and-discard and binning evaluators against the exact one: value,
//! error and how many kernel evaluations each spends.
//!
//! cargo run --release --example approximations

use melc::synthetic::{random_unit_vector, BlobSpec};
use melc::{dcs_evaluate, ApproxConfig, KdeParams};

fn main() -> melc::Result<()> {
    let ds = BlobSpec::new(1000, 3, 2.5, 3).generate()?;
    let v = random_unit_vector(11, ds.dim());
    let params = KdeParams::default();
    let exact = dcs_evaluate(&ds, &v, params, ApproxConfig::exact())?;
    println!("exact D_CS = {:.6} ({} kernel calls)\n", exact.value, exact.stats.exp_calls);
    println!("{:>8} {:>7} {:>12} {:>10} {:>8}", "mode", "ε", "D_CS", "|error|", "calls");
    for eps in [0.01, 0.05, 0.2] {
        for config in [ApproxConfig::discard(eps), ApproxConfig::bin(eps)] {
            let d = dcs_evaluate(&ds, &v, params, config)?;
            println!(
                "{:>8} {eps:>7} {:>12.6} {:>10.2e} {:>7.1}%",
                config.mode,
                d.value,
                (d.value - exact.value).abs(),
                100.0 * d.stats.ratio()
            );
        }
    }
    Ok(())
}
