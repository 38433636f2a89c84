use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cv::{stratified_kfold, Fold};
use super::load::{load_dataset, DataFormat, LabelColumn};
use crate::approx::{ApproxConfig, Mode};
use crate::classify::{balanced_accuracy, fit_with_restarts};
use crate::dataset::LabeledDataset;
use crate::error::{MelcError, Result};
use crate::optimize::{Method, OptimizerConfig};
use crate::variance::KdeParams;

/// Hyperparameter grid and cross-validation protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub gammas: Vec<f64>,
    /// Only used by the approximate modes; exact runs once per cell.
    pub epsilons: Vec<f64>,
    pub methods: Vec<Mode>,
    pub optimizers: Vec<Method>,
    pub folds: usize,
    pub restarts: usize,
    pub master_seed: u64,
    pub max_iterations: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            gammas: vec![0.1, 0.5, 1.0, 1.5, 2.0],
            epsilons: vec![0.01, 0.02, 0.03, 0.05, 0.1, 0.2, 0.5],
            methods: vec![Mode::Exact, Mode::Discard, Mode::Bin],
            optimizers: vec![Method::Cg, Method::Lbfgs],
            folds: 5,
            restarts: 3,
            master_seed: 0,
            max_iterations: OptimizerConfig::cg().max_iterations,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(MelcError::InvalidConfig(m.to_string()));
        if self.gammas.is_empty() || self.gammas.iter().any(|g| !(*g > 0.0 && g.is_finite())) {
            return bad("gammas must be a non-empty list of positive reals");
        }
        let approx = self.methods.iter().any(|m| *m != Mode::Exact);
        if approx && self.epsilons.is_empty() {
            return bad("approximate methods need at least one epsilon");
        }
        if self.epsilons.iter().any(|e| !(*e >= 0.0 && e.is_finite())) {
            return bad("epsilons must be non-negative reals");
        }
        if self.optimizers.is_empty() {
            return bad("at least one optimizer is required");
        }
        if self.folds < 2 {
            return bad("folds must be at least 2");
        }
        if self.restarts == 0 {
            return bad("restarts must be at least 1");
        }
        if self.max_iterations == 0 {
            return bad("max_iterations must be at least 1");
        }
        Ok(())
    }

    /// ε values run for `mode`: a single 0 for exact.
    pub fn epsilons_for(&self, mode: Mode) -> Vec<f64> {
        match mode {
            Mode::Exact => vec![0.0],
            _ => self.epsilons.clone(),
        }
    }

    /// Number of records [`run_grid`] produces per dataset.
    pub fn cells_per_dataset(&self) -> usize {
        let per_fold: usize = self.methods.iter().map(|m| self.epsilons_for(*m).len()).sum();
        self.folds * self.gammas.len() * self.optimizers.len() * per_fold
    }
}

/// A dataset with the name used in reports.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedDataset {
    pub name: String,
    pub data: LabeledDataset,
}

impl NamedDataset {
    pub fn new(name: impl Into<String>, data: LabeledDataset) -> Self {
        Self { name: name.into(), data }
    }
}

/// One grid cell: a model trained on one fold and scored on its test split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub dataset_name: String,
    pub method: Mode,
    pub optimizer: Method,
    pub gamma: f64,
    /// 0 for exact runs.
    pub epsilon: f64,
    pub fold_index: usize,
    pub restart_seed: u64,
    /// Test-split balanced accuracy; NaN for failed cells.
    pub bac: f64,
    /// Summed over all restarts.
    pub exp_calls_actual: u64,
    pub exp_calls_naive: u64,
    /// Of the winning restart.
    pub iterations: usize,
    pub function_evaluations: usize,
    pub final_norm: f64,
    pub wall_time_ms: u64,
    pub converged: bool,
    /// Test split lacked a class.
    pub missing_class: bool,
    /// `ok`, or the error that stopped this cell.
    pub status: String,
}

/// CSV column order of [`RunRecord`].
pub const RECORD_COLUMNS: [&str; 17] = [
    "dataset_name",
    "method",
    "optimizer",
    "gamma",
    "epsilon",
    "fold_index",
    "restart_seed",
    "bac",
    "exp_calls_actual",
    "exp_calls_naive",
    "iterations",
    "function_evaluations",
    "final_norm",
    "wall_time_ms",
    "converged",
    "missing_class",
    "status",
];

impl RunRecord {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

/// SplitMix64 finalizer.
fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministically combines seed material into one seed.
pub fn mix_seed(parts: &[u64]) -> u64 {
    parts.iter().fold(0x6a09_e667_f3bc_c908, |acc, &p| splitmix(acc ^ splitmix(p)))
}

fn name_key(name: &str) -> u64 {
    name.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

fn method_key(m: Method) -> u64 {
    match m {
        Method::Cg => 1,
        Method::Lbfgs => 2,
    }
}

struct Cell {
    dataset: usize,
    fold: usize,
    gamma: f64,
    optimizer: Method,
    mode: Mode,
    epsilon: f64,
}

struct Prepared<'a> {
    data: &'a NamedDataset,
    folds: Vec<std::result::Result<(LabeledDataset, Fold), String>>,
}

fn prepare<'a>(ds: &'a NamedDataset, spec: &GridSpec) -> Prepared<'a> {
    let split_seed = mix_seed(&[spec.master_seed, name_key(&ds.name), 0xf01d]);
    let folds = match stratified_kfold(&ds.data, spec.folds, split_seed) {
        Ok(folds) => folds
            .into_iter()
            .map(|f| ds.data.subset(&f.train).map(|train| (train, f)).map_err(|e| e.to_string()))
            .collect(),
        Err(e) => (0..spec.folds).map(|_| Err(e.to_string())).collect(),
    };
    Prepared { data: ds, folds }
}

fn run_cell(prep: &Prepared<'_>, cell: &Cell, spec: &GridSpec) -> RunRecord {
    let start = Instant::now();
    let restart_seed = mix_seed(&[
        spec.master_seed,
        name_key(&prep.data.name),
        cell.fold as u64,
        cell.gamma.to_bits(),
        method_key(cell.optimizer),
    ]);
    let mut rec = RunRecord {
        dataset_name: prep.data.name.clone(),
        method: cell.mode,
        optimizer: cell.optimizer,
        gamma: cell.gamma,
        epsilon: cell.epsilon,
        fold_index: cell.fold,
        restart_seed,
        bac: f64::NAN,
        exp_calls_actual: 0,
        exp_calls_naive: 0,
        iterations: 0,
        function_evaluations: 0,
        final_norm: f64::NAN,
        wall_time_ms: 0,
        converged: false,
        missing_class: false,
        status: "ok".into(),
    };
    let (train, fold) = match &prep.folds[cell.fold] {
        Ok(split) => split,
        Err(message) => {
            rec.status = message.clone();
            return rec;
        }
    };
    let outcome = (|| {
        let params = KdeParams::new(cell.gamma)?;
        let approx = ApproxConfig::new(cell.mode, cell.epsilon);
        let mut opt = OptimizerConfig::new(cell.optimizer).with_seed(restart_seed);
        opt.max_iterations = spec.max_iterations;
        let (model, restarts) = fit_with_restarts(train, params, approx, &opt, spec.restarts)?;
        let data = &prep.data.data;
        let mut predictions = Vec::with_capacity(fold.test.len());
        let mut truth = Vec::with_capacity(fold.test.len());
        for &i in &fold.test {
            let (x, y) = data.get(i);
            predictions.push(model.predict(x)?);
            truth.push(y);
        }
        let metrics = balanced_accuracy(&predictions, &truth)?;
        Ok::<_, MelcError>((metrics, restarts))
    })();
    match outcome {
        Ok((metrics, restarts)) => {
            let totals = restarts.total_stats();
            let best = restarts.best();
            rec.bac = metrics.bac;
            rec.missing_class = metrics.missing_class;
            rec.exp_calls_actual = totals.exp_calls;
            rec.exp_calls_naive = totals.naive_pairs;
            rec.iterations = best.iterations;
            rec.function_evaluations = best.function_evaluations;
            rec.final_norm = best.final_norm;
            rec.converged = best.converged;
        }
        Err(e) => rec.status = e.to_string(),
    }
    rec.wall_time_ms = start.elapsed().as_millis() as u64;
    rec
}

fn enumerate_cells(datasets: &[NamedDataset], spec: &GridSpec) -> Vec<Cell> {
    let mut cells = Vec::new();
    for dataset in 0..datasets.len() {
        for fold in 0..spec.folds {
            for &gamma in &spec.gammas {
                for &optimizer in &spec.optimizers {
                    for &mode in &spec.methods {
                        for epsilon in spec.epsilons_for(mode) {
                            cells.push(Cell {
                                dataset,
                                fold,
                                gamma,
                                optimizer,
                                mode,
                                epsilon,
                            });
                        }
                    }
                }
            }
        }
    }
    cells
}

/// Runs every (dataset, fold, γ, optimizer, method, ε) cell, in parallel.
///
/// Record order is fixed by the loop order above regardless of scheduling.
/// When `output` is given, records are appended to that CSV file as each batch
/// of cells completes. Failed cells are recorded with their error in `status`.
pub fn run_grid(datasets: &[NamedDataset], spec: &GridSpec, output: Option<&Path>) -> Result<Vec<RunRecord>> {
    spec.validate()?;
    let prepared: Vec<Prepared<'_>> = datasets.iter().map(|d| prepare(d, spec)).collect();
    let cells = enumerate_cells(datasets, spec);
    let mut writer = match output {
        Some(path) => {
            let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
            w.write_record(RECORD_COLUMNS)?;
            w.flush()?;
            Some(w)
        }
        None => None,
    };
    let batch = 4 * rayon::current_num_threads().max(1);
    let mut records = Vec::with_capacity(cells.len());
    for chunk in cells.chunks(batch) {
        let done: Vec<RunRecord> = chunk
            .par_iter()
            .map(|cell| run_cell(&prepared[cell.dataset], cell, spec))
            .collect();
        if let Some(w) = writer.as_mut() {
            for r in &done {
                w.serialize(r)?;
            }
            w.flush()?;
        }
        records.extend(done);
    }
    Ok(records)
}

/// A dataset file listed in a grid manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetEntry {
    pub name: Option<String>,
    /// Relative paths are resolved against the manifest's directory.
    pub path: PathBuf,
    pub format: Option<DataFormat>,
    #[serde(default)]
    pub label_column: LabelColumn,
}

impl DatasetEntry {
    pub fn display_name(&self) -> String {
        self.name.clone().unwrap_or_else(|| {
            self.path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| self.path.display().to_string())
        })
    }
}

/// Grid manifest: datasets plus [`GridSpec`] overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    #[serde(rename = "dataset", default)]
    pub datasets: Vec<DatasetEntry>,
    #[serde(default)]
    pub grid: GridSpec,
}

impl Manifest {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    /// Loads every listed dataset, resolving paths against `base`.
    pub fn load_datasets(&self, base: &Path) -> Result<Vec<NamedDataset>> {
        self.datasets
            .iter()
            .map(|e| {
                let path = if e.path.is_absolute() { e.path.clone() } else { base.join(&e.path) };
                let format = e.format.unwrap_or_else(|| DataFormat::guess(&path));
                Ok(NamedDataset::new(e.display_name(), load_dataset(&path, format, &e.label_column)?))
            })
            .collect()
    }
}

/// Reads a manifest file and the datasets it lists.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<(Manifest, Vec<NamedDataset>)> {
    let path = path.as_ref();
    let manifest = Manifest::parse(&std::fs::read_to_string(path).map_err(MelcError::read(path))?)?;
    manifest.grid.validate()?;
    let base = path.parent().unwrap_or(Path::new("."));
    let datasets = manifest.load_datasets(base)?;
    Ok((manifest, datasets))
}

/// Writes records as CSV (the same layout `run_grid` streams).
pub(crate) fn write_records(path: &Path, records: &[RunRecord]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    w.write_record(RECORD_COLUMNS)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::BlobSpec;

    fn tiny_spec() -> GridSpec {
        GridSpec {
            gammas: vec![1.0],
            epsilons: vec![0.05, 0.2],
            methods: vec![Mode::Exact, Mode::Discard, Mode::Bin],
            optimizers: vec![Method::Cg],
            folds: 2,
            restarts: 1,
            master_seed: 5,
            max_iterations: 50,
        }
    }

    fn blobs() -> Vec<NamedDataset> {
        vec![NamedDataset::new("blobs", BlobSpec::new(12, 2, 4.0, 1).generate().unwrap())]
    }

    #[test]
    fn default_grid_counts() {
        let spec = GridSpec {
            methods: vec![Mode::Discard, Mode::Bin, Mode::Exact],
            optimizers: vec![Method::Cg],
            ..GridSpec::default()
        };
        assert_eq!(spec.cells_per_dataset(), 375);
    }

    #[test]
    fn records_and_streamed_csv_agree() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("runs.csv");
        let records = run_grid(&blobs(), &tiny_spec(), Some(&out)).unwrap();
        assert_eq!(records.len(), tiny_spec().cells_per_dataset());
        assert!(records.iter().all(RunRecord::is_ok));
        let mut rdr = csv::Reader::from_path(&out).unwrap();
        assert_eq!(rdr.headers().unwrap().iter().collect::<Vec<_>>(), RECORD_COLUMNS);
        let back: Vec<RunRecord> = rdr.deserialize().collect::<std::result::Result<_, _>>().unwrap();
        assert_eq!(back.len(), records.len());
        for (a, b) in back.iter().zip(&records) {
            assert_eq!((a.exp_calls_actual, a.restart_seed, a.bac), (b.exp_calls_actual, b.restart_seed, b.bac));
        }
    }

    #[test]
    fn grid_is_deterministic_and_shares_starts() {
        let a = run_grid(&blobs(), &tiny_spec(), None).unwrap();
        let b = run_grid(&blobs(), &tiny_spec(), None).unwrap();
        let strip = |r: &RunRecord| RunRecord { wall_time_ms: 0, ..r.clone() };
        assert_eq!(a.iter().map(strip).collect::<Vec<_>>(), b.iter().map(strip).collect::<Vec<_>>());
        for r in &a {
            let peer = a.iter().find(|s| s.fold_index == r.fold_index && s.method == Mode::Exact).unwrap();
            assert_eq!(r.restart_seed, peer.restart_seed);
        }
        assert!(a.iter().filter(|r| r.method == Mode::Discard).all(|r| r.exp_calls_actual <= r.exp_calls_naive));
    }

    #[test]
    fn empty_method_list() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("runs.csv");
        let spec = GridSpec { methods: vec![], ..tiny_spec() };
        assert!(run_grid(&blobs(), &spec, Some(&out)).unwrap().is_empty());
        assert_eq!(std::fs::read_to_string(&out).unwrap().lines().count(), 1);
    }

    #[test]
    fn failing_folds_are_flagged() {
        let spec = GridSpec { folds: 20, ..tiny_spec() };
        let records = run_grid(&blobs(), &spec, None).unwrap();
        assert_eq!(records.len(), spec.cells_per_dataset());
        assert!(records.iter().all(|r| !r.is_ok() && r.bac.is_nan()));
    }

    #[test]
    fn manifest_parsing() {
        let m = Manifest::parse(
            r#"
            [[dataset]]
            path = "data/fourclass"
            [[dataset]]
            name = "iris2"
            path = "iris.csv"
            label_column = "species"
            [grid]
            gammas = [1.0]
            folds = 3
            master_seed = 7
            "#,
        )
        .unwrap();
        assert_eq!(m.datasets[0].display_name(), "fourclass");
        assert_eq!(m.datasets[1].label_column, LabelColumn::Name("species".into()));
        assert_eq!(m.grid.folds, 3);
        assert_eq!(m.grid.epsilons, GridSpec::default().epsilons);
        assert!(Manifest::parse("[grid]\nbogus = 1\n").is_err());
    }

    #[test]
    fn seeds_mix_every_part() {
        assert_ne!(mix_seed(&[1, 2]), mix_seed(&[2, 1]));
        assert_ne!(mix_seed(&[0]), mix_seed(&[0, 0]));
    }
}
