//! A small cross-validated grid over γ, ε, evaluator and optimizer on two
//! synthetic datasets, with the aggregated reports written to a directory.
//!
//! cargo run --release --example cv_grid -- reports/

use melc::harness::{emit_reports, exp_call_ratios, mean_iterations, run_grid, GridSpec, NamedDataset};
use melc::synthetic::BlobSpec;

fn main() -> melc::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "grid-reports".into());
    std::fs::create_dir_all(&out)?;
    let datasets = vec![
        NamedDataset::new("blobs2", BlobSpec { sigma: 0.25, ..BlobSpec::new(150, 2, 2.5, 1) }.generate()?),
        NamedDataset::new("blobs6", BlobSpec { sigma: 0.25, ..BlobSpec::new(150, 6, 2.0, 2) }.generate()?),
    ];
    let spec = GridSpec {
        gammas: vec![0.5, 1.0],
        epsilons: vec![0.01, 0.1],
        folds: 3,
        restarts: 2,
        master_seed: 2024,
        ..GridSpec::default()
    };
    let records = run_grid(&datasets, &spec, Some(&std::path::Path::new(&out).join("records.csv")))?;
    println!("{} cells", records.len());
    for r in exp_call_ratios(&records) {
        println!("{:>7} {:>6} {:>8}: exp-call ratio {:.3}", r.dataset, r.optimizer, r.method, r.ratio);
    }
    for m in mean_iterations(&records) {
        println!("{:>7} {:>6} {:>8}: {:.1} iterations", m.dataset, m.optimizer, m.method, m.mean_iterations);
    }
    for p in emit_reports(&records, &out)? {
        println!("wrote {}", p.display());
    }
    Ok(())
}
