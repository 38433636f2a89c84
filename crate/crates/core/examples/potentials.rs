//! Exact information potentials, the Cauchy-Schwarz divergence and its
//! gradient for a few projection directions.
//!
//! cargo run --example potentials

use melc::synthetic::BlobSpec;
use melc::{dcs_evaluate, ip_exact, variance_profile, ApproxConfig, KdeParams};

fn main() -> melc::Result<()> {
    let pv = ip_exact(&[0.0, 1.0], &[0.5], 1.0, None)?;
    println!("ip({{0, 1}}, {{0.5}}; V=1) = {:.6} using {} kernel calls", pv.value, pv.exp_calls);

    let ds = BlobSpec::new(40, 2, 3.0, 7).generate()?;
    let params = KdeParams::default();
    println!("\n{:>8} {:>10} {:>10} {:>10} {:>22}", "angle", "V_cross", "D_CS", "ip_cross", "gradient");
    for deg in [0.0f64, 30.0, 60.0, 90.0] {
        let t = deg.to_radians();
        let v = [t.cos(), t.sin()];
        let prof = variance_profile(&ds, &v, params)?;
        let d = dcs_evaluate(&ds, &v, params, ApproxConfig::exact())?;
        let g = d.gradient.unwrap_or_default();
        println!(
            "{deg:>8.0} {:>10.4} {:>10.4} {:>10.4e} {:>22}",
            prof.v_cross,
            d.value,
            d.ip_cross,
            format!("({:+.3}, {:+.3})", g[0], g[1])
        );
    }
    Ok(())
}
