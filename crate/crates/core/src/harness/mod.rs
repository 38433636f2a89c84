//! Experiment plumbing: dataset files, stratified folds, the γ × ε × method ×
//! optimizer grid and its CSV reports.

mod cv;
mod grid;
mod load;
mod report;

pub use cv::{stratified_kfold, Fold};
pub use grid::{
    load_manifest, mix_seed, run_grid, DatasetEntry, GridSpec, Manifest, NamedDataset, RunRecord, RECORD_COLUMNS,
};
pub use load::{load_csv, load_dataset, load_libsvm, parse_csv, parse_libsvm, DataFormat, LabelColumn};
pub use report::{
    bac_deltas, bounds_table, emit_reports, exp_call_ratios, mean_iterations, write_bounds, BacDelta, BoundRow,
    BoundsSpec, IterationMean, RatioRow,
};
