use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::{Label, LabeledDataset};
use crate::error::{MelcError, Result};

/// On-disk dataset layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataFormat {
    Libsvm,
    Csv,
}

impl DataFormat {
    /// `.csv` files are CSV, everything else libSVM.
    pub fn guess(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => DataFormat::Csv,
            _ => DataFormat::Libsvm,
        }
    }
}

impl FromStr for DataFormat {
    type Err = MelcError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "libsvm" | "svmlight" => Ok(DataFormat::Libsvm),
            "csv" => Ok(DataFormat::Csv),
            _ => Err(MelcError::InvalidConfig(format!("unknown data format {s:?}"))),
        }
    }
}

/// Which CSV column holds the label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LabelColumn {
    Index(usize),
    Name(String),
}

impl Default for LabelColumn {
    fn default() -> Self {
        LabelColumn::Index(0)
    }
}

impl FromStr for LabelColumn {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(s.parse().map(LabelColumn::Index).unwrap_or_else(|_| LabelColumn::Name(s.to_string())))
    }
}

impl fmt::Display for LabelColumn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LabelColumn::Index(i) => write!(f, "{i}"),
            LabelColumn::Name(n) => f.pad(n),
        }
    }
}

/// Maps two distinct numeric labels to Neg (smaller) and Pos (larger).
fn binary_labels(raw: &[f64]) -> Result<Vec<Label>> {
    let mut distinct = raw.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() != 2 {
        return Err(MelcError::NotBinary(distinct.len()));
    }
    Ok(raw.iter().map(|&y| if y == distinct[0] { Label::Neg } else { Label::Pos }).collect())
}

fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> MelcError {
    MelcError::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn parse_real(token: &str, what: &str, path: &Path, line: usize) -> Result<f64> {
    match token.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        Ok(_) => Err(parse_error(path, line, format!("non-finite {what} {token:?}"))),
        Err(_) => Err(parse_error(path, line, format!("invalid {what} {token:?}"))),
    }
}

/// Reads a libSVM sparse file (`label idx:val ...`, 1-based ascending indices).
pub fn load_libsvm(path: impl AsRef<Path>) -> Result<LabeledDataset> {
    let path = path.as_ref();
    parse_libsvm(&std::fs::read_to_string(path).map_err(MelcError::read(path))?, path)
}

/// Parses libSVM text; `path` only labels error messages.
pub fn parse_libsvm(text: &str, path: &Path) -> Result<LabeledDataset> {
    let mut labels = Vec::new();
    let mut sparse: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut dim = 0;
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut tokens = content.split_whitespace();
        let label = tokens.next().expect("non-empty line has a token");
        labels.push(parse_real(label, "label", path, line)?);
        let mut row = Vec::new();
        let mut last = 0;
        for tok in tokens {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| parse_error(path, line, format!("expected index:value, got {tok:?}")))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| parse_error(path, line, format!("invalid feature index {idx:?}")))?;
            if idx == 0 {
                return Err(parse_error(path, line, "feature indices are 1-based"));
            }
            if idx <= last {
                return Err(parse_error(path, line, format!("feature index {idx} is not ascending")));
            }
            last = idx;
            row.push((idx - 1, parse_real(val, "feature value", path, line)?));
        }
        dim = dim.max(last);
        sparse.push(row);
    }
    if labels.is_empty() {
        return Err(MelcError::EmptyInput("dataset file"));
    }
    if dim == 0 {
        return Err(parse_error(path, 1, "no features in file"));
    }
    let rows: Vec<Vec<f64>> = sparse
        .into_iter()
        .map(|entries| {
            let mut row = vec![0.0; dim];
            for (i, x) in entries {
                row[i] = x;
            }
            row
        })
        .collect();
    LabeledDataset::from_labeled(&rows, &binary_labels(&labels)?)
}

/// Reads a numeric CSV table. A first row with any non-numeric field is a header.
pub fn load_csv(path: impl AsRef<Path>, label: &LabelColumn) -> Result<LabeledDataset> {
    let path = path.as_ref();
    parse_csv(std::fs::File::open(path).map_err(MelcError::read(path))?, path, label)
}

/// Parses CSV from any reader; `path` only labels error messages.
pub fn parse_csv(reader: impl std::io::Read, path: &Path, label: &LabelColumn) -> Result<LabeledDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut records = rdr.records();
    let first = match records.next() {
        Some(r) => r?,
        None => return Err(MelcError::EmptyInput("dataset file")),
    };
    let width = first.len();
    let is_header = first.iter().any(|f| f.parse::<f64>().is_err());
    let label_index = match label {
        LabelColumn::Index(i) if *i < width => *i,
        LabelColumn::Index(i) => {
            return Err(parse_error(path, 1, format!("label column {i} out of range for {width} columns")))
        }
        LabelColumn::Name(name) if is_header => first
            .iter()
            .position(|f| f == name)
            .ok_or_else(|| parse_error(path, 1, format!("no column named {name:?}")))?,
        LabelColumn::Name(name) => {
            return Err(parse_error(path, 1, format!("label column {name:?} given but the file has no header")))
        }
    };
    if width < 2 {
        return Err(parse_error(path, 1, "need a label column and at least one feature"));
    }
    let mut labels = Vec::new();
    let mut rows = Vec::new();
    let data = (!is_header).then_some(Ok(first)).into_iter().chain(records);
    for rec in data {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != width {
            return Err(MelcError::RaggedRows {
                path: path.to_path_buf(),
                line,
                expected: width,
                found: rec.len(),
            });
        }
        let mut row = Vec::with_capacity(width - 1);
        for (j, field) in rec.iter().enumerate() {
            if j == label_index {
                labels.push(parse_real(field, "label", path, line)?);
            } else {
                row.push(parse_real(field, "feature value", path, line)?);
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(MelcError::EmptyInput("dataset file"));
    }
    LabeledDataset::from_labeled(&rows, &binary_labels(&labels)?)
}

/// Loads either format; `label` is only used for CSV.
pub fn load_dataset(path: impl AsRef<Path>, format: DataFormat, label: &LabelColumn) -> Result<LabeledDataset> {
    match format {
        DataFormat::Libsvm => load_libsvm(path),
        DataFormat::Csv => load_csv(path, label),
    }
}
