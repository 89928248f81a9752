use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::pool::parallel_map;
use super::runner::{fit_and_predict, JobPlan};
use crate::data::{stratified_kfold, train_val_split, Dataset};
use crate::imbalance::MethodId;
use crate::metrics::roc_auc;
use crate::rng::{derive_seed, seeded};
use crate::{Error, Result};

/// Fraction of the data held out from tuning altogether.
const TUNE_HOLDOUT: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthScore {
    pub depth: usize,
    pub mean_auc: f64,
    pub fold_aucs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneReport {
    pub dataset: String,
    pub seed: u64,
    pub folds: usize,
    pub depths: Vec<DepthScore>,
    pub selected_depth: usize,
}

impl TuneReport {
    /// Whether this report was produced under the same tuning settings.
    pub(crate) fn matches(&self, config: &ExperimentConfig) -> bool {
        let mut wanted = config.tune_depths.clone();
        wanted.sort_unstable();
        wanted.dedup();
        self.seed == config.seed
            && self.folds == config.tune_folds
            && self.depths.iter().map(|d| d.depth).eq(wanted)
    }
}

/// Picks a depth by mean validation-fold ROC-AUC of ERM training over
/// k-fold CV on a stratified 80% partition. Ties go to the shallower depth.
pub fn tune_architecture(dataset: &Dataset, config: &ExperimentConfig, workers: usize) -> Result<TuneReport> {
    let mut depths = config.tune_depths.clone();
    depths.sort_unstable();
    depths.dedup();
    if depths.is_empty() {
        return Err(Error::invalid("no candidate depths"));
    }
    let all: Vec<usize> = (0..dataset.len()).collect();
    let (tuning, _) = train_val_split(
        &all,
        &dataset.labels,
        TUNE_HOLDOUT,
        &mut seeded(derive_seed(config.seed, &[&dataset.name, "tune", "partition"])),
    )?;
    let tuning_labels: Vec<u8> = tuning.iter().map(|&i| dataset.labels[i]).collect();
    let k = config.tune_folds;
    let split = stratified_kfold(
        &tuning_labels,
        k,
        &mut seeded(derive_seed(config.seed, &[&dataset.name, "tune", "split"])),
    )?;
    let plans = (0..k)
        .map(|fold| {
            let test: Vec<usize> = split.test_indices(fold).iter().map(|&i| tuning[i]).collect();
            let rest: Vec<usize> = split.train_indices(fold).iter().map(|&i| tuning[i]).collect();
            let (fit, val) = train_val_split(
                &rest,
                &dataset.labels,
                config.val_fraction,
                &mut seeded(derive_seed(config.seed, &[&dataset.name, "tune", "val", &fold.to_string()])),
            )?;
            Ok(JobPlan { test, fit, val })
        })
        .collect::<Result<Vec<_>>>()?;

    let aucs = parallel_map(depths.len() * k, workers, |i| {
        let (depth, fold) = (depths[i / k], i % k);
        let seed = derive_seed(
            config.seed,
            &[&dataset.name, "tune", &depth.to_string(), &fold.to_string()],
        );
        let plan = &plans[fold];
        let (probs, _) = fit_and_predict(dataset, plan, MethodId::Erm, depth, config, seed)?;
        let labels: Vec<u8> = plan.test.iter().map(|&i| dataset.labels[i]).collect();
        roc_auc(&probs, &labels)
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;

    let scores: Vec<DepthScore> = depths
        .iter()
        .zip(aucs.chunks(k))
        .map(|(&depth, fold_aucs)| DepthScore {
            depth,
            mean_auc: fold_aucs.iter().sum::<f64>() / k as f64,
            fold_aucs: fold_aucs.to_vec(),
        })
        .collect();
    Ok(TuneReport {
        dataset: dataset.name.clone(),
        seed: config.seed,
        folds: k,
        selected_depth: select_depth(&scores),
        depths: scores,
    })
}

/// Depth with the highest mean AUC; the first (shallowest) wins ties.
fn select_depth(scores: &[DepthScore]) -> usize {
    let mut best = &scores[0];
    for s in &scores[1..] {
        if s.mean_auc > best.mean_auc {
            best = s;
        }
    }
    best.depth
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::GaussianBlobs;

    #[test]
    fn separable_data_selects_shallowest() {
        let blobs = GaussianBlobs {
            dim: 1,
            ..GaussianBlobs::new(200, 3.0, 12.0)
        };
        let data = blobs.generate(5).unwrap();
        let mut cfg = ExperimentConfig::new(vec![], "unused".into());
        cfg.max_epochs = 30;
        cfg.dropout = 0.0;
        let report = tune_architecture(&data, &cfg, 2).unwrap();
        assert_eq!(report.depths.len(), 5);
        for d in &report.depths {
            assert_eq!(d.fold_aucs.len(), 5);
            assert_eq!(d.mean_auc, 1.0, "depth {}", d.depth);
        }
        assert_eq!(report.selected_depth, 2);
        assert!(report.matches(&cfg));
    }

    #[test]
    fn ties_go_shallow() {
        let s = |depth, mean_auc| DepthScore {
            depth,
            mean_auc,
            fold_aucs: vec![],
        };
        assert_eq!(select_depth(&[s(2, 0.9), s(3, 0.95), s(4, 0.95)]), 3);
        assert_eq!(select_depth(&[s(2, 1.0), s(3, 1.0)]), 2);
        assert_eq!(select_depth(&[s(2, 0.5), s(3, 0.4)]), 2);
    }

    #[test]
    fn too_small_for_five_folds() {
        let data = GaussianBlobs::new(60, 14.0, 2.0).generate(0).unwrap();
        let cfg = ExperimentConfig::new(vec![], "unused".into());
        assert!(tune_architecture(&data, &cfg, 1).is_err());
    }
}
