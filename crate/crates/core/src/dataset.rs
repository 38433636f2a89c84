//! Labeled two-class point sets and linear projection.

use serde::{Deserialize, Serialize};

use crate::error::{MelcError, Result};

/// Class label. `Neg` is the −1 class, `Pos` the +1 class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    Neg,
    Pos,
}

impl Label {
    pub fn as_i8(self) -> i8 {
        match self {
            Label::Neg => -1,
            Label::Pos => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Label::Neg => "negative",
            Label::Pos => "positive",
        }
    }
}

/// Dense row-major storage for points of a common dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    data: Vec<f64>,
    dim: usize,
}

impl PointSet {
    pub fn from_flat(data: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(MelcError::InvalidConfig("point dimension must be positive".into()));
        }
        if !data.len().is_multiple_of(dim) {
            return Err(MelcError::DimensionMismatch {
                expected: dim,
                found: data.len() % dim,
            });
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(MelcError::NonFinite("point coordinates"));
        }
        Ok(Self { data, dim })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows
            .first()
            .map(|r| r.as_ref().len())
            .ok_or(MelcError::EmptyInput("point set"))?;
        let mut data = Vec::with_capacity(rows.len() * dim);
        for row in rows {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(MelcError::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::from_flat(data, dim)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    /// New point set holding the given rows, in the given order.
    pub fn select(&self, indices: &[usize]) -> PointSet {
        let mut data = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        PointSet {
            data,
            dim: self.dim,
        }
    }

    /// Inner product of `v` with every row.
    pub fn project(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.dim {
            return Err(MelcError::DimensionMismatch {
                expected: v.len(),
                found: self.dim,
            });
        }
        Ok(self.rows().map(|x| dot(x, v)).collect())
    }
}

/// Projects every point onto `v`. Order and length are preserved.
pub fn project<R: AsRef<[f64]>>(points: &[R], v: &[f64]) -> Result<Vec<f64>> {
    if points.is_empty() {
        return Err(MelcError::EmptyInput("points to project"));
    }
    points
        .iter()
        .map(|p| {
            let p = p.as_ref();
            if p.len() != v.len() {
                Err(MelcError::DimensionMismatch {
                    expected: v.len(),
                    found: p.len(),
                })
            } else {
                Ok(dot(p, v))
            }
        })
        .collect()
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// Checks that `v` is usable as a projection direction for `dim`-dimensional data.
pub(crate) fn check_direction(v: &[f64], dim: usize) -> Result<()> {
    if v.len() != dim {
        return Err(MelcError::DimensionMismatch {
            expected: dim,
            found: v.len(),
        });
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(MelcError::NonFinite("projection vector"));
    }
    if v.iter().all(|&x| x == 0.0) {
        return Err(MelcError::InvalidConfig("projection vector must be non-zero".into()));
    }
    Ok(())
}

/// Two point sets X− and X+ of a common dimension, each with at least two points.
///
/// Points are addressed globally as `0..n_neg` for the negative class followed by
/// `n_neg..n_neg + n_pos` for the positive class.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    neg: PointSet,
    pos: PointSet,
}

impl LabeledDataset {
    pub const MIN_CLASS_SIZE: usize = 2;

    pub fn new(neg: PointSet, pos: PointSet) -> Result<Self> {
        if neg.dim() != pos.dim() {
            return Err(MelcError::DimensionMismatch {
                expected: neg.dim(),
                found: pos.dim(),
            });
        }
        for (set, label) in [(&neg, Label::Neg), (&pos, Label::Pos)] {
            if set.len() < Self::MIN_CLASS_SIZE {
                return Err(MelcError::TooSmallClass {
                    class: label.name(),
                    size: set.len(),
                    required: Self::MIN_CLASS_SIZE,
                });
            }
        }
        Ok(Self { neg, pos })
    }

    pub fn from_rows<R: AsRef<[f64]>>(neg: &[R], pos: &[R]) -> Result<Self> {
        Self::new(PointSet::from_rows(neg)?, PointSet::from_rows(pos)?)
    }

    /// Builds a dataset from interleaved rows and labels.
    pub fn from_labeled<R: AsRef<[f64]>>(rows: &[R], labels: &[Label]) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(MelcError::LengthMismatch {
                left: rows.len(),
                right: labels.len(),
            });
        }
        let dim = rows
            .first()
            .map(|r| r.as_ref().len())
            .ok_or(MelcError::EmptyInput("dataset"))?;
        let (mut neg, mut pos) = (Vec::new(), Vec::new());
        for (row, label) in rows.iter().zip(labels) {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(MelcError::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            match label {
                Label::Neg => neg.extend_from_slice(row),
                Label::Pos => pos.extend_from_slice(row),
            }
        }
        Self::new(PointSet::from_flat(neg, dim)?, PointSet::from_flat(pos, dim)?)
    }

    pub fn dim(&self) -> usize {
        self.neg.dim()
    }

    pub fn neg(&self) -> &PointSet {
        &self.neg
    }

    pub fn pos(&self) -> &PointSet {
        &self.pos
    }

    pub fn class(&self, label: Label) -> &PointSet {
        match label {
            Label::Neg => &self.neg,
            Label::Pos => &self.pos,
        }
    }

    pub fn n_neg(&self) -> usize {
        self.neg.len()
    }

    pub fn n_pos(&self) -> usize {
        self.pos.len()
    }

    pub fn len(&self) -> usize {
        self.n_neg() + self.n_pos()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Point and label at a global index.
    pub fn get(&self, index: usize) -> (&[f64], Label) {
        if index < self.n_neg() {
            (self.neg.row(index), Label::Neg)
        } else {
            (self.pos.row(index - self.n_neg()), Label::Pos)
        }
    }

    /// Labels in global index order.
    pub fn labels(&self) -> Vec<Label> {
        let mut labels = vec![Label::Neg; self.n_neg()];
        labels.resize(self.len(), Label::Pos);
        labels
    }

    /// Sub-dataset made of the given global indices.
    pub fn subset(&self, indices: &[usize]) -> Result<LabeledDataset> {
        let n_neg = self.n_neg();
        let mut neg_idx = Vec::new();
        let mut pos_idx = Vec::new();
        for &i in indices {
            if i >= self.len() {
                return Err(MelcError::InvalidConfig(format!(
                    "index {i} out of range for dataset of {} points",
                    self.len()
                )));
            }
            if i < n_neg {
                neg_idx.push(i);
            } else {
                pos_idx.push(i - n_neg);
            }
        }
        Self::new(self.neg.select(&neg_idx), self.pos.select(&pos_idx))
    }
}
