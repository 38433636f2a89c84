//! Seeded synthetic two-class data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::dataset::{LabeledDataset, PointSet};
use crate::error::Result;

/// Two isotropic Gaussian blobs whose means are `separation` apart along the
/// first axis (in units of `sigma`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlobSpec {
    pub n_neg: usize,
    pub n_pos: usize,
    pub dim: usize,
    pub separation: f64,
    pub sigma: f64,
    pub seed: u64,
}

impl BlobSpec {
    pub fn new(n_per_class: usize, dim: usize, separation: f64, seed: u64) -> Self {
        Self {
            n_neg: n_per_class,
            n_pos: n_per_class,
            dim,
            separation,
            sigma: 1.0,
            seed,
        }
    }

    pub fn generate(&self) -> Result<LabeledDataset> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let noise = Normal::new(0.0, self.sigma).expect("sigma is finite and positive");
        let half = 0.5 * self.separation * self.sigma;
        let mut class = |n: usize, offset: f64| {
            let mut data = Vec::with_capacity(n * self.dim);
            for _ in 0..n {
                for k in 0..self.dim {
                    let shift = if k == 0 { offset } else { 0.0 };
                    data.push(shift + noise.sample(&mut rng));
                }
            }
            PointSet::from_flat(data, self.dim)
        };
        let neg = class(self.n_neg, -half)?;
        let pos = class(self.n_pos, half)?;
        LabeledDataset::new(neg, pos)
    }
}

/// A small random dataset: class sizes in `n_range`, dimension in `d_range`,
/// class means drawn from a standard normal and per-axis scales in [0.5, 2).
pub fn random_dataset(
    seed: u64,
    n_range: std::ops::RangeInclusive<usize>,
    d_range: std::ops::RangeInclusive<usize>,
) -> Result<LabeledDataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = rng.gen_range(d_range);
    let class = |rng: &mut ChaCha8Rng| {
        let n = rng.gen_range(n_range.clone());
        let mean: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let scale: Vec<f64> = (0..dim).map(|_| rng.gen_range(0.5..2.0)).collect();
        let mut data = Vec::with_capacity(n * dim);
        for _ in 0..n {
            for k in 0..dim {
                let z: f64 = StandardNormal.sample(rng);
                data.push(mean[k] + scale[k] * z);
            }
        }
        PointSet::from_flat(data, dim)
    };
    let neg = class(&mut rng)?;
    let pos = class(&mut rng)?;
    LabeledDataset::new(neg, pos)
}

/// A seeded random unit vector.
pub fn random_unit_vector(seed: u64, dim: usize) -> Vec<f64> {
    crate::optimize::start_vectors(seed, 1, dim).remove(0)
}
