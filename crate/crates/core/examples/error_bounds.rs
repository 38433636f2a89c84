//! Discard threshold T(ε) and bin width B(ε) at a few kernel variances.
//! Pass a path to also write the full table as CSV.
//!
//! cargo run --example error_bounds -- bounds.csv

use melc::approx::{bin_width, discard_threshold};
use melc::harness::{bounds_table, write_bounds, BoundsSpec};

fn main() -> melc::Result<()> {
    println!("{:>5} {:>6} {:>10} {:>10}", "V", "ε", "T", "B");
    for v in [0.5, 1.0, 2.0] {
        for eps in [0.01, 0.05, 0.1, 0.5] {
            println!(
                "{v:>5} {eps:>6} {:>10.4} {:>10.4}",
                discard_threshold(v, eps, 1.0),
                bin_width(v, eps)
            );
        }
    }
    if let Some(path) = std::env::args().nth(1) {
        let rows = bounds_table(&BoundsSpec::default())?;
        write_bounds(&path, &rows)?;
        println!("\nwrote {} rows to {path}", rows.len());
    }
    Ok(())
}
