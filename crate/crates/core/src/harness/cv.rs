use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::{Label, LabeledDataset};
use crate::error::{MelcError, Result};

/// One train/test split of global dataset indices, each sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Stratified k-fold split: each class is shuffled with `seed` and dealt
/// round-robin into the folds, the positive class continuing where the
/// negative class stopped so total fold sizes also differ by at most one.
pub fn stratified_kfold(dataset: &LabeledDataset, k: usize, seed: u64) -> Result<Vec<Fold>> {
    if k < 2 {
        return Err(MelcError::InvalidConfig(format!("need at least 2 folds, got {k}")));
    }
    for label in [Label::Neg, Label::Pos] {
        let size = dataset.class(label).len();
        if size < k {
            return Err(MelcError::TooFewPointsPerClass {
                class: label.name(),
                size,
                folds: k,
            });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0; dataset.len()];
    let mut slot = 0;
    for range in [0..dataset.n_neg(), dataset.n_neg()..dataset.len()] {
        let mut idx: Vec<usize> = range.collect();
        idx.shuffle(&mut rng);
        for i in idx {
            assignment[i] = slot % k;
            slot += 1;
        }
    }
    Ok((0..k)
        .map(|f| {
            let (test, train) = (0..dataset.len()).partition(|&i| assignment[i] == f);
            Fold { train, test }
        })
        .collect())
}
