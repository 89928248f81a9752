use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::imbalance::{CostWeighting, MethodId};
use crate::{Error, Result};

/// Network depth: fixed, or chosen per dataset by the tuner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "DepthRepr", into = "DepthRepr")]
pub enum DepthChoice {
    #[default]
    Tune,
    Fixed(usize),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum DepthRepr {
    Fixed(usize),
    Keyword(String),
}

impl TryFrom<DepthRepr> for DepthChoice {
    type Error = String;

    fn try_from(r: DepthRepr) -> std::result::Result<Self, String> {
        match r {
            DepthRepr::Fixed(d) => Ok(DepthChoice::Fixed(d)),
            DepthRepr::Keyword(s) if s == "tune" => Ok(DepthChoice::Tune),
            DepthRepr::Keyword(s) => Err(format!("depth must be a number or \"tune\", got {s:?}")),
        }
    }
}

impl From<DepthChoice> for DepthRepr {
    fn from(d: DepthChoice) -> Self {
        match d {
            DepthChoice::Tune => DepthRepr::Keyword("tune".into()),
            DepthChoice::Fixed(n) => DepthRepr::Fixed(n),
        }
    }
}

/// Minibatch size: `ceil(N / 50)` clamped to `[8, 1024]`, or a fixed size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "BatchRepr", into = "BatchRepr")]
pub enum BatchSizeRule {
    #[default]
    Auto,
    Fixed(usize),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum BatchRepr {
    Fixed(usize),
    Keyword(String),
}

impl TryFrom<BatchRepr> for BatchSizeRule {
    type Error = String;

    fn try_from(r: BatchRepr) -> std::result::Result<Self, String> {
        match r {
            BatchRepr::Fixed(b) => Ok(BatchSizeRule::Fixed(b)),
            BatchRepr::Keyword(s) if s == "auto" => Ok(BatchSizeRule::Auto),
            BatchRepr::Keyword(s) => Err(format!("batch_size must be a number or \"auto\", got {s:?}")),
        }
    }
}

impl From<BatchSizeRule> for BatchRepr {
    fn from(b: BatchSizeRule) -> Self {
        match b {
            BatchSizeRule::Auto => BatchRepr::Keyword("auto".into()),
            BatchSizeRule::Fixed(n) => BatchRepr::Fixed(n),
        }
    }
}

pub const AUTO_BATCH_MIN: usize = 8;
pub const AUTO_BATCH_MAX: usize = 1024;

impl BatchSizeRule {
    pub fn resolve(&self, n_samples: usize) -> usize {
        match *self {
            BatchSizeRule::Auto => n_samples.div_ceil(50).clamp(AUTO_BATCH_MIN, AUTO_BATCH_MAX),
            BatchSizeRule::Fixed(b) => b,
        }
    }
}

fn default_methods() -> Vec<MethodId> {
    MethodId::ALL.to_vec()
}
fn default_width() -> usize {
    50
}
fn default_dropout() -> f64 {
    0.5
}
fn default_learning_rate() -> f64 {
    0.001
}
fn default_patience() -> usize {
    10
}
fn default_max_epochs() -> usize {
    200
}
fn default_folds() -> usize {
    10
}
fn default_repetitions() -> usize {
    5
}
fn default_val_fraction() -> f64 {
    0.1
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}
fn default_tune_folds() -> usize {
    5
}
fn default_tune_depths() -> Vec<usize> {
    (2..=6).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub datasets: Vec<PathBuf>,
    #[serde(default = "default_methods")]
    pub methods: Vec<MethodId>,
    #[serde(default)]
    pub depth: DepthChoice,
    #[serde(default = "default_width")]
    pub width: usize,
    #[serde(default = "default_dropout")]
    pub dropout: f64,
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
    #[serde(default = "default_patience")]
    pub patience: usize,
    #[serde(default = "default_max_epochs")]
    pub max_epochs: usize,
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default)]
    pub batch_size: BatchSizeRule,
    /// Per-dataset batch size, keyed by dataset name.
    #[serde(default)]
    pub batch_size_overrides: BTreeMap<String, usize>,
    #[serde(default = "default_val_fraction")]
    pub val_fraction: f64,
    #[serde(default)]
    pub cost_weighting: CostWeighting,
    #[serde(default = "default_tune_folds")]
    pub tune_folds: usize,
    #[serde(default = "default_tune_depths")]
    pub tune_depths: Vec<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub workers: Option<usize>,
}

impl ExperimentConfig {
    pub fn new(datasets: Vec<PathBuf>, output_dir: PathBuf) -> Self {
        ExperimentConfig {
            datasets,
            methods: default_methods(),
            depth: DepthChoice::Tune,
            width: default_width(),
            dropout: default_dropout(),
            learning_rate: default_learning_rate(),
            patience: default_patience(),
            max_epochs: default_max_epochs(),
            folds: default_folds(),
            repetitions: default_repetitions(),
            batch_size: BatchSizeRule::Auto,
            batch_size_overrides: BTreeMap::new(),
            val_fraction: default_val_fraction(),
            cost_weighting: CostWeighting::Normalized,
            tune_folds: default_tune_folds(),
            tune_depths: default_tune_depths(),
            seed: 0,
            output_dir,
            workers: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a JSON config. Relative dataset and output paths are resolved
    /// against the config file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_json(&text)?;
        if let Some(base) = path.parent() {
            for d in &mut cfg.datasets {
                if d.is_relative() {
                    *d = base.join(&*d);
                }
            }
            if cfg.output_dir.is_relative() {
                cfg.output_dir = base.join(&cfg.output_dir);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::invalid(m.to_string()));
        if self.repetitions < 1 {
            return bad("repetitions must be >= 1");
        }
        if self.folds < 2 {
            return bad("folds must be >= 2");
        }
        if self.methods.is_empty() {
            return bad("at least one method is required");
        }
        if self.patience < 1 || self.max_epochs < 1 {
            return bad("patience and max_epochs must be >= 1");
        }
        if !(self.val_fraction > 0.0 && self.val_fraction < 1.0) {
            return bad("val_fraction must lie in (0, 1)");
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad("dropout must lie in [0, 1)");
        }
        if self.width < 1 || !(self.learning_rate > 0.0) {
            return bad("width and learning_rate must be positive");
        }
        if let DepthChoice::Fixed(0) = self.depth {
            return bad("depth must be >= 1");
        }
        if let BatchSizeRule::Fixed(b) = self.batch_size {
            if b < 2 {
                return bad("batch_size must be >= 2");
            }
        }
        if self.batch_size_overrides.values().any(|&b| b < 2) {
            return bad("batch size overrides must be >= 2");
        }
        if self.tune_folds < 2 || self.tune_depths.is_empty() || self.tune_depths.contains(&0) {
            return bad("tune_folds must be >= 2 and tune_depths non-empty and positive");
        }
        Ok(())
    }

    pub fn batch_size_for(&self, dataset: &str, n_samples: usize) -> usize {
        self.batch_size_overrides
            .get(dataset)
            .copied()
            .unwrap_or_else(|| self.batch_size.resolve(n_samples))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn defaults_from_minimal_json() {
        let cfg = ExperimentConfig::from_json(r#"{"datasets": ["a.dat"]}"#).unwrap();
        assert_eq!(cfg.methods.len(), 6);
        assert_eq!(cfg.depth, DepthChoice::Tune);
        assert_eq!((cfg.width, cfg.patience, cfg.max_epochs, cfg.folds, cfg.repetitions), (50, 10, 200, 10, 5));
        assert_eq!(cfg.dropout, 0.5);
        assert_eq!(cfg.learning_rate, 0.001);
        assert_eq!(cfg.batch_size, BatchSizeRule::Auto);
    }

    #[test]
    fn depth_and_batch_forms() {
        let cfg = ExperimentConfig::from_json(r#"{"datasets": [], "depth": 3, "batch_size": 16, "methods": ["ERM", "GDRO"]}"#).unwrap();
        assert_eq!(cfg.depth, DepthChoice::Fixed(3));
        assert_eq!(cfg.batch_size, BatchSizeRule::Fixed(16));
        assert_eq!(cfg.methods, vec![MethodId::Erm, MethodId::Gdro]);
        assert!(ExperimentConfig::from_json(r#"{"datasets": [], "depth": "deep"}"#).is_err());
        let round = serde_json::to_string(&cfg).unwrap();
        assert_eq!(ExperimentConfig::from_json(&round).unwrap(), cfg);
    }

    #[test]
    fn unknown_keys_and_invalid_values_rejected() {
        assert!(ExperimentConfig::from_json(r#"{"datasets": [], "epochs": 3}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"datasets": [], "folds": 1}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"datasets": [], "repetitions": 0}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"datasets": [], "methods": ["SMOTE"]}"#).is_err());
    }

    #[test]
    fn auto_batch_examples() {
        assert_eq!(BatchSizeRule::Auto.resolve(306), 8);
        assert_eq!(BatchSizeRule::Auto.resolve(768), 16);
        assert_eq!(BatchSizeRule::Auto.resolve(2000), 40);
        assert_eq!(BatchSizeRule::Auto.resolve(145_751), 1024);
        let mut cfg = ExperimentConfig::new(vec![], "out".into());
        cfg.batch_size_overrides.insert("pima".into(), 32);
        assert_eq!(cfg.batch_size_for("pima", 768), 32);
        assert_eq!(cfg.batch_size_for("other", 768), 16);
    }

    proptest! {
        #[test]
        fn auto_batch_within_band(n in 256usize..=102_400) {
            let b = BatchSizeRule::Auto.resolve(n) as f64;
            prop_assert!(b >= n as f64 / 100.0);
            prop_assert!(b <= n as f64 / 32.0);
        }
    }
}
