use rand_distr::{Distribution, StandardNormal};

use super::Dataset;
use crate::nn::Matrix;
use crate::rng::seeded;
use crate::Result;

/// Two isotropic unit-variance Gaussian classes. The minority mean sits at
/// `separation` along the first axis; the majority mean is the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianBlobs {
    pub n: usize,
    pub imbalance_ratio: f64,
    pub separation: f64,
    pub dim: usize,
}

impl GaussianBlobs {
    pub fn new(n: usize, imbalance_ratio: f64, separation: f64) -> Self {
        GaussianBlobs {
            n,
            imbalance_ratio,
            separation,
            dim: 2,
        }
    }

    pub fn minority_count(&self) -> usize {
        ((self.n as f64 / (self.imbalance_ratio + 1.0)).round() as usize).max(1)
    }

    /// Rows are interleaved at random positions so slicing never isolates a class.
    pub fn generate(&self, seed: u64) -> Result<Dataset> {
        let mut rng = seeded(seed);
        let n_min = self.minority_count();
        let mut labels: Vec<u8> = (0..self.n).map(|i| u8::from(i < n_min)).collect();
        rand::seq::SliceRandom::shuffle(labels.as_mut_slice(), &mut rng);
        let mut values = Vec::with_capacity(self.n * self.dim);
        for &y in &labels {
            for j in 0..self.dim {
                let z: f64 = StandardNormal.sample(&mut rng);
                let shift = if y == 1 && j == 0 { self.separation } else { 0.0 };
                values.push(z + shift);
            }
        }
        let names = (0..self.dim).map(|j| format!("x{j}")).collect();
        Dataset::new(
            format!("blobs_ir{}_n{}", self.imbalance_ratio, self.n),
            Matrix::from_vec(self.n, self.dim, values)?,
            labels,
            names,
        )
    }
}
