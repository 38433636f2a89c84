//! Parse a libSVM file (or a built-in sample) and split it into stratified folds.
//!
//! cargo run --example load_libsvm -- path/to/fourclass

use std::path::Path;

use melc::harness::{load_libsvm, parse_libsvm, stratified_kfold};

const SAMPLE: &str = "\
+1 1:0.5 3:-2
-1 2:1.0
+1 1:0.9 2:0.1 # trailing comment
-1 1:-0.3 3:0.7
+1 1:1.1 3:-1.5
-1 2:0.8 3:0.2
";

fn main() -> melc::Result<()> {
    let ds = match std::env::args().nth(1) {
        Some(path) => load_libsvm(&path)?,
        None => parse_libsvm(SAMPLE, Path::new("<sample>"))?,
    };
    println!("{} points in {} dimensions: {} negative, {} positive", ds.len(), ds.dim(), ds.n_neg(), ds.n_pos());
    for i in 0..ds.len().min(6) {
        let (x, y) = ds.get(i);
        println!("  {:+} {x:?}", y.as_i8());
    }
    let k = ds.n_neg().min(ds.n_pos()).min(5);
    for (f, fold) in stratified_kfold(&ds, k, 0)?.iter().enumerate() {
        println!("fold {f}: test {:?}", fold.test);
    }
    Ok(())
}
