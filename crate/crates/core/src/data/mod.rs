//! Dataset ingestion, profiling and split generation.

mod csv_io;
mod keel;
mod silhouette;
mod split;
mod synthetic;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use csv_io::{load_csv, write_csv, LabelColumn};
pub use keel::{load_keel_dat, parse_keel};
pub use silhouette::silhouette_coefficient;
pub use split::{stratified_kfold, train_val_split, FoldSplit, Standardizer};
pub use synthetic::GaussianBlobs;

pub use crate::objectives::ClassCounts;
use crate::nn::Matrix;
use crate::rng::seeded;
use crate::{Error, Result};

/// Binary classification data with the minority class encoded as label 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub name: String,
    pub features: Matrix,
    pub labels: Vec<u8>,
    pub feature_names: Vec<String>,
    pub counts: ClassCounts,
}

impl Dataset {
    pub fn new(name: impl Into<String>, features: Matrix, labels: Vec<u8>, feature_names: Vec<String>) -> Result<Self> {
        if features.rows() != labels.len() {
            return Err(Error::Shape(format!(
                "{} feature rows for {} labels",
                features.rows(),
                labels.len()
            )));
        }
        if feature_names.len() != features.cols() {
            return Err(Error::Shape(format!(
                "{} feature names for {} columns",
                feature_names.len(),
                features.cols()
            )));
        }
        if !features.is_finite() {
            return Err(Error::invalid("features contain non-finite values"));
        }
        let counts = ClassCounts::from_labels(&labels)?;
        Ok(Dataset {
            name: name.into(),
            features,
            labels,
            feature_names,
            counts,
        })
    }

    /// Builds a dataset from textual class labels.
    ///
    /// With `positive` given, that label becomes class 1. Otherwise the
    /// labels `positive`/`negative` (case-insensitive) map by name, and any
    /// other pair maps its minority label to 1 (the lexicographically larger
    /// label on a tie).
    pub fn from_text_labels(
        name: impl Into<String>,
        features: Matrix,
        raw_labels: &[String],
        feature_names: Vec<String>,
        positive: Option<&str>,
    ) -> Result<Self> {
        let mut tally: BTreeMap<&str, usize> = BTreeMap::new();
        for l in raw_labels {
            *tally.entry(l.as_str()).or_default() += 1;
        }
        if tally.len() > 2 {
            return Err(Error::invalid(format!(
                "expected a binary class column, found {} labels: {:?}",
                tally.len(),
                tally.keys().collect::<Vec<_>>()
            )));
        }
        let positive_label: String = if let Some(p) = positive {
            if !tally.contains_key(p) {
                return Err(Error::invalid(format!("positive label {p:?} not present")));
            }
            p.to_string()
        } else if let Some(p) = tally.keys().find(|k| k.eq_ignore_ascii_case("positive")) {
            p.to_string()
        } else if tally.len() == 2 && tally.keys().any(|k| k.eq_ignore_ascii_case("negative")) {
            tally.keys().find(|k| !k.eq_ignore_ascii_case("negative")).unwrap().to_string()
        } else {
            // BTreeMap iterates in ascending order, so `>=` prefers the larger label on ties
            let mut best: Option<(&str, usize)> = None;
            for (&label, &count) in &tally {
                if best.is_none_or(|(_, c)| count <= c) {
                    best = Some((label, count));
                }
            }
            best.map(|(l, _)| l.to_string()).unwrap_or_default()
        };
        let labels = raw_labels.iter().map(|l| u8::from(*l == positive_label)).collect();
        Dataset::new(name, features, labels, feature_names)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.features.cols()
    }

    pub fn subset(&self, rows: &[usize]) -> (Matrix, Vec<u8>) {
        (self.features.select_rows(rows), rows.iter().map(|&i| self.labels[i]).collect())
    }
}

/// Majority count over minority count.
pub fn imbalance_ratio(counts: &ClassCounts) -> Result<f64> {
    if counts.minority() == 0 {
        return Err(Error::invalid("imbalance ratio needs a non-empty minority class"));
    }
    Ok(counts.majority() as f64 / counts.minority() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetProfile {
    pub name: String,
    pub n_samples: usize,
    pub n_features: usize,
    pub n_majority: usize,
    pub n_minority: usize,
    pub pct_majority: f64,
    pub pct_minority: f64,
    pub imbalance_ratio: f64,
    pub silhouette: f64,
}

/// Size, class balance and class separability of a dataset. The silhouette
/// is computed on z-scored features, on at most `silhouette_cap` rows.
pub fn profile(dataset: &Dataset, silhouette_cap: usize, seed: u64) -> Result<DatasetProfile> {
    let c = dataset.counts;
    let n = c.total() as f64;
    let standardized = Standardizer::fit(&dataset.features)?.transform(&dataset.features)?;
    let silhouette = silhouette_coefficient(&standardized, &dataset.labels, silhouette_cap, &mut seeded(seed))?;
    Ok(DatasetProfile {
        name: dataset.name.clone(),
        n_samples: c.total(),
        n_features: dataset.n_features(),
        n_majority: c.majority(),
        n_minority: c.minority(),
        pct_majority: 100.0 * c.majority() as f64 / n,
        pct_minority: 100.0 * c.minority() as f64 / n,
        imbalance_ratio: imbalance_ratio(&c)?,
        silhouette,
    })
}

/// Loads a `.dat` file as KEEL and anything else as CSV with the class in
/// the last column.
pub fn load_any(path: &std::path::Path) -> Result<Dataset> {
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("dat") => load_keel_dat(path),
        _ => load_csv(path, &LabelColumn::Last, None),
    }
}
