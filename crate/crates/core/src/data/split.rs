use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::nn::Matrix;
use crate::{Error, Result};

/// Z-score parameters fitted on a training partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    /// Per-feature mean and population standard deviation.
    pub fn fit(train: &Matrix) -> Result<Self> {
        if train.rows() == 0 {
            return Err(Error::invalid("cannot standardize on an empty partition"));
        }
        let n = train.rows() as f64;
        let d = train.cols();
        let mut mean = vec![0.0; d];
        for row in train.row_iter() {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for row in train.row_iter() {
            for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let std = var.into_iter().map(|s| (s / n).sqrt()).collect();
        Ok(Standardizer { mean, std })
    }

    /// Applies the fitted transform; zero-variance features become 0.
    pub fn transform(&self, m: &Matrix) -> Result<Matrix> {
        if m.cols() != self.mean.len() {
            return Err(Error::Shape(format!(
                "standardizer fitted on {} features, got {}",
                self.mean.len(),
                m.cols()
            )));
        }
        let mut out = m.clone();
        for r in 0..out.rows() {
            for (j, v) in out.row_mut(r).iter_mut().enumerate() {
                *v = if self.std[j] > 0.0 { (*v - self.mean[j]) / self.std[j] } else { 0.0 };
            }
        }
        Ok(out)
    }
}

/// `k` disjoint folds covering every row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldSplit {
    pub folds: Vec<Vec<usize>>,
    pub stratified: bool,
}

impl FoldSplit {
    pub fn k(&self) -> usize {
        self.folds.len()
    }

    pub fn test_indices(&self, fold: usize) -> &[usize] {
        &self.folds[fold]
    }

    /// Every row outside `fold`, ascending.
    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = self
            .folds
            .iter()
            .enumerate()
            .filter(|(f, _)| *f != fold)
            .flat_map(|(_, rows)| rows.iter().copied())
            .collect();
        idx.sort_unstable();
        idx
    }
}

/// Shuffles each class and deals its rows round-robin into `k` folds.
///
/// Dealing continues from the fold where the previous class stopped so the
/// fold sizes differ by at most one.
pub fn stratified_kfold<R: Rng + ?Sized>(labels: &[u8], k: usize, rng: &mut R) -> Result<FoldSplit> {
    if k < 2 {
        return Err(Error::invalid(format!("k-fold needs k >= 2, got {k}")));
    }
    let mut folds = vec![Vec::new(); k];
    let mut next = 0;
    for class in 0..2u8 {
        let mut members: Vec<usize> = labels.iter().enumerate().filter(|(_, &y)| y == class).map(|(i, _)| i).collect();
        if members.len() < k {
            return Err(Error::invalid(format!(
                "class {class} has {} samples, fewer than k = {k}",
                members.len()
            )));
        }
        members.shuffle(rng);
        for i in members {
            folds[next].push(i);
            next = (next + 1) % k;
        }
    }
    if let Some(&bad) = labels.iter().find(|&&y| y > 1) {
        return Err(Error::InvalidLabel(bad));
    }
    folds.iter_mut().for_each(|f| f.sort_unstable());
    Ok(FoldSplit { folds, stratified: true })
}

/// Carves a stratified early-stopping subset out of `indices`.
///
/// Each class sends `round(n_c * val_fraction)` rows to validation, clamped
/// to `[1, n_c - 1]`. A class with a single row keeps it in training.
/// Returns `(train, validation)`, both ascending.
pub fn train_val_split<R: Rng + ?Sized>(
    indices: &[usize],
    labels: &[u8],
    val_fraction: f64,
    rng: &mut R,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(val_fraction > 0.0 && val_fraction < 1.0) {
        return Err(Error::invalid(format!("validation fraction {val_fraction} outside (0, 1)")));
    }
    let mut train = Vec::with_capacity(indices.len());
    let mut val = Vec::new();
    for class in 0..2u8 {
        let mut members: Vec<usize> = indices.iter().copied().filter(|&i| labels[i] == class).collect();
        match members.len() {
            0 => return Err(Error::invalid(format!("class {class} absent from the training partition"))),
            1 => {
                log::warn!("class {class} has a single training row; it stays out of the validation split");
                train.extend(members);
            }
            n => {
                let n_val = ((n as f64 * val_fraction).round() as usize).clamp(1, n - 1);
                members.shuffle(rng);
                val.extend_from_slice(&members[..n_val]);
                train.extend_from_slice(&members[n_val..]);
            }
        }
    }
    train.sort_unstable();
    val.sort_unstable();
    Ok((train, val))
}
