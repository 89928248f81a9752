//! Classical imbalance handling applied to a training partition.
//!
//! All transforms keep the original row order for the rows they retain and
//! append any oversampled duplicates at the end.

use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::nn::Matrix;
use crate::objectives::{ClassCounts, Objective};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MethodId {
    #[serde(rename = "ERM")]
    Erm,
    #[serde(rename = "GDRO")]
    Gdro,
    #[serde(rename = "ROS")]
    Ros,
    #[serde(rename = "RUS")]
    Rus,
    #[serde(rename = "COST")]
    Cost,
    #[serde(rename = "RUSROS")]
    Rusros,
}

impl MethodId {
    pub const ALL: [MethodId; 6] = [
        MethodId::Erm,
        MethodId::Gdro,
        MethodId::Ros,
        MethodId::Rus,
        MethodId::Cost,
        MethodId::Rusros,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            MethodId::Erm => "ERM",
            MethodId::Gdro => "GDRO",
            MethodId::Ros => "ROS",
            MethodId::Rus => "RUS",
            MethodId::Cost => "COST",
            MethodId::Rusros => "RUSROS",
        }
    }

    /// Every method except group DRO trains with the ERM objective.
    pub fn objective(&self) -> Objective {
        match self {
            MethodId::Gdro => Objective::Gdro,
            _ => Objective::Erm,
        }
    }
}

impl fmt::Display for MethodId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MethodId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MethodId::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::invalid(format!("unknown method {s:?}")))
    }
}

/// How COST turns class counts into loss weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostWeighting {
    /// `N / (C · N_c)`: inverse frequency with mean per-sample weight 1.
    #[default]
    Normalized,
    /// `1 / N_c`.
    Raw,
}

pub fn cost_weights(counts: &ClassCounts, mode: CostWeighting) -> Result<[f64; 2]> {
    if !counts.has_both() {
        return Err(Error::invalid("cost weights need both class counts >= 1"));
    }
    let n = counts.total() as f64;
    let w = |c: usize| match mode {
        CostWeighting::Normalized => n / (2.0 * counts.get(c) as f64),
        CostWeighting::Raw => 1.0 / counts.get(c) as f64,
    };
    Ok([w(0), w(1)])
}

fn class_indices(labels: &[u8]) -> Result<[Vec<usize>; 2]> {
    let mut idx = [Vec::new(), Vec::new()];
    for (i, &y) in labels.iter().enumerate() {
        match y {
            0 | 1 => idx[y as usize].push(i),
            other => return Err(Error::InvalidLabel(other)),
        }
    }
    if idx[0].is_empty() || idx[1].is_empty() {
        return Err(Error::SingleClass);
    }
    Ok(idx)
}

fn check_rows(features: &Matrix, labels: &[u8]) -> Result<()> {
    if features.rows() != labels.len() {
        return Err(Error::Shape(format!(
            "{} feature rows for {} labels",
            features.rows(),
            labels.len()
        )));
    }
    Ok(())
}

fn gather(features: &Matrix, labels: &[u8], rows: &[usize]) -> (Matrix, Vec<u8>) {
    (features.select_rows(rows), rows.iter().map(|&i| labels[i]).collect())
}

/// Indices of `pool` drawn uniformly with replacement.
fn draw_with_replacement<R: Rng + ?Sized>(pool: &[usize], n: usize, rng: &mut R) -> Vec<usize> {
    (0..n).map(|_| pool[rng.random_range(0..pool.len())]).collect()
}

/// Keeps `keep` of `pool` uniformly without replacement, preserving order.
fn subsample<R: Rng + ?Sized>(pool: &[usize], keep: usize, rng: &mut R) -> Vec<usize> {
    let mut chosen: Vec<usize> = sample(rng, pool.len(), keep).into_iter().collect();
    chosen.sort_unstable();
    chosen.into_iter().map(|i| pool[i]).collect()
}

fn majority_minority(idx: &[Vec<usize>; 2]) -> (usize, usize) {
    if idx[1].len() <= idx[0].len() {
        (0, 1)
    } else {
        (1, 0)
    }
}

/// ROS: minority rows drawn with replacement and appended until the classes
/// are the same size.
pub fn random_oversample<R: Rng + ?Sized>(features: &Matrix, labels: &[u8], rng: &mut R) -> Result<(Matrix, Vec<u8>)> {
    check_rows(features, labels)?;
    let idx = class_indices(labels)?;
    let (maj, min) = majority_minority(&idx);
    let mut rows: Vec<usize> = (0..labels.len()).collect();
    rows.extend(draw_with_replacement(&idx[min], idx[maj].len() - idx[min].len(), rng));
    Ok(gather(features, labels, &rows))
}

/// RUS: majority rows subsampled without replacement to the minority count.
pub fn random_undersample<R: Rng + ?Sized>(features: &Matrix, labels: &[u8], rng: &mut R) -> Result<(Matrix, Vec<u8>)> {
    check_rows(features, labels)?;
    let idx = class_indices(labels)?;
    let (maj, min) = majority_minority(&idx);
    let kept = subsample(&idx[maj], idx[min].len(), rng);
    let mut rows: Vec<usize> = kept.into_iter().chain(idx[min].iter().copied()).collect();
    rows.sort_unstable();
    Ok(gather(features, labels, &rows))
}

/// RUSROS: keep `ceil(N_maj / 2)` majority rows, then oversample the
/// minority to match.
pub fn rus_ros_hybrid<R: Rng + ?Sized>(features: &Matrix, labels: &[u8], rng: &mut R) -> Result<(Matrix, Vec<u8>)> {
    check_rows(features, labels)?;
    let idx = class_indices(labels)?;
    let (maj, min) = majority_minority(&idx);
    if idx[maj].len() < 2 {
        return Err(Error::invalid("majority class needs at least 2 rows"));
    }
    let target = idx[maj].len().div_ceil(2);
    let kept = subsample(&idx[maj], target, rng);
    let mut rows: Vec<usize> = kept.into_iter().chain(idx[min].iter().copied()).collect();
    rows.sort_unstable();
    if idx[min].len() < target {
        rows.extend(draw_with_replacement(&idx[min], target - idx[min].len(), rng));
    } else if idx[min].len() > target {
        // minority larger than half the majority: trim it to parity as well
        let keep_min = subsample(&idx[min], target, rng);
        rows = rows.into_iter().filter(|i| labels[*i] as usize != min).chain(keep_min).collect();
        rows.sort_unstable();
    }
    Ok(gather(features, labels, &rows))
}
