use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::aggregate::Aggregates;
use crate::metrics::Metric;
use crate::stats::{
    cd_diagram_svg_with, cliques, friedman_test, mean_ranks, pairwise_wilcoxon_holm, CdLayout, Clique,
    FriedmanResult, PairwiseResult, RankMatrix, ScoreTable,
};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub metric: Metric,
    pub alpha: f64,
    pub table: ScoreTable,
    pub ranks: RankMatrix,
    /// Absent with fewer than two datasets.
    pub friedman: Option<FriedmanResult>,
    pub pairwise: Vec<PairwiseResult>,
    pub cliques: Vec<Clique>,
    #[serde(skip)]
    pub svg: String,
}

/// Friedman test, Holm-corrected pairwise Wilcoxon tests and the CD diagram
/// over per-dataset means. Only methods present on every dataset are used.
pub fn stats_report(aggregates: &Aggregates, metric: Metric, alpha: f64) -> Result<StatsReport> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!("alpha {alpha} outside (0, 1)")));
    }
    let methods: Vec<_> = aggregates
        .methods
        .iter()
        .copied()
        .filter(|m| aggregates.datasets.iter().all(|d| d.methods.contains_key(m)))
        .collect();
    if methods.len() < 2 || aggregates.datasets.is_empty() {
        return Err(Error::invalid(
            "need at least two methods with results on every dataset",
        ));
    }
    let scores = aggregates
        .datasets
        .iter()
        .map(|d| methods.iter().map(|m| d.methods[m][&metric].mean).collect())
        .collect();
    let table = ScoreTable::new(
        methods.iter().map(|m| m.to_string()).collect(),
        aggregates.datasets.iter().map(|d| d.dataset.clone()).collect(),
        scores,
    )?;
    let ranks = mean_ranks(&table, true);
    let friedman = if table.datasets.len() >= 2 {
        Some(friedman_test(&ranks)?)
    } else {
        None
    };
    let pairwise = pairwise_wilcoxon_holm(&table, alpha)?;
    let cliques = cliques(&ranks, &pairwise);
    let svg = cd_diagram_svg_with(&ranks, &pairwise, &CdLayout::default(), Some(metric.as_str()));
    Ok(StatsReport {
        metric,
        alpha,
        table,
        ranks,
        friedman,
        pairwise,
        cliques,
        svg,
    })
}

/// Writes `stats_<metric>.json` and `cd_<metric>.svg` into `dir`.
pub fn write_stats_outputs(report: &StatsReport, dir: &Path) -> Result<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let json = dir.join(format!("stats_{}.json", report.metric));
    let svg = dir.join(format!("cd_{}.svg", report.metric));
    std::fs::write(&json, serde_json::to_string_pretty(report)?).map_err(|e| Error::io(&json, e))?;
    std::fs::write(&svg, &report.svg).map_err(|e| Error::io(&svg, e))?;
    Ok((json, svg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::aggregate::aggregate;
    use crate::harness::records::{ExperimentRecord, RECORD_VERSION};
    use crate::imbalance::MethodId;
    use crate::metrics::EvalScores;

    fn rec(dataset: usize, method: MethodId, v: f64) -> ExperimentRecord {
        ExperimentRecord {
            v: RECORD_VERSION,
            dataset: format!("d{dataset}"),
            method,
            fold: 0,
            repetition: 0,
            seed: 0,
            depth: 2,
            scores: Some(EvalScores {
                f1: v,
                g_mean: v,
                pr_auc: v,
                roc_auc: v,
                precision: v,
                recall: v,
            }),
            epochs_run: 1,
            wall_time_s: 0.0,
            error: None,
        }
    }

    #[test]
    fn identical_methods() {
        let recs: Vec<_> = (0..5)
            .flat_map(|d| [MethodId::Erm, MethodId::Gdro, MethodId::Ros].map(|m| rec(d, m, 0.1 * d as f64)))
            .collect();
        let r = stats_report(&aggregate(&recs), Metric::GMean, 0.05).unwrap();
        assert!((r.friedman.unwrap().p_value - 1.0).abs() < 1e-12);
        assert!(r.pairwise.iter().all(|p| !p.significant));
        assert_eq!(r.cliques.len(), 1);
    }

    #[test]
    fn dominant_method_on_eight_datasets() {
        let recs: Vec<_> = (0..8)
            .flat_map(|d| [rec(d, MethodId::Gdro, 0.8 + 0.01 * d as f64), rec(d, MethodId::Erm, 0.5 + 0.02 * d as f64)])
            .collect();
        let r = stats_report(&aggregate(&recs), Metric::GMean, 0.05).unwrap();
        assert_eq!(r.pairwise.len(), 1);
        assert!((r.pairwise[0].p_value - 2.0 / 256.0).abs() < 1e-12);
        assert!(r.pairwise[0].significant);
        assert!(r.cliques.is_empty());
    }

    #[test]
    fn writes_json_and_svg() {
        let recs: Vec<_> = (0..3)
            .flat_map(|d| [rec(d, MethodId::Erm, 0.3), rec(d, MethodId::Rus, 0.2 + d as f64 * 0.1)])
            .collect();
        let r = stats_report(&aggregate(&recs), Metric::F1, 0.05).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let (json, svg) = write_stats_outputs(&r, dir.path()).unwrap();
        assert!(json.ends_with("stats_f1.json") && svg.ends_with("cd_f1.svg"));
        let back: StatsReport = serde_json::from_str(&std::fs::read_to_string(json).unwrap()).unwrap();
        assert_eq!(back.table, r.table);
        assert!(std::fs::read_to_string(svg).unwrap().starts_with("<"));
    }
}
