use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::records::{latest_by_key, ExperimentRecord};
use crate::imbalance::MethodId;
use crate::metrics::{EvalScores, Metric};

/// Mean and sample standard deviation (n − 1 denominator; 0 when n = 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Option<Self> {
        let n = values.len();
        if n == 0 {
            return None;
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Some(MeanStd { mean, std, n })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetAggregate {
    pub dataset: String,
    pub methods: BTreeMap<MethodId, BTreeMap<Metric, MeanStd>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub methods: Vec<MethodId>,
    pub datasets: Vec<DatasetAggregate>,
    /// Mean over datasets of the per-dataset means.
    pub overall: BTreeMap<MethodId, BTreeMap<Metric, f64>>,
    /// Datasets on which each method has the highest per-dataset mean.
    pub rank_first: BTreeMap<Metric, BTreeMap<MethodId, usize>>,
    pub failed_records: usize,
}

impl Aggregates {
    pub fn mean(&self, dataset: &str, method: MethodId, metric: Metric) -> Option<f64> {
        self.datasets
            .iter()
            .find(|d| d.dataset == dataset)
            .and_then(|d| d.methods.get(&method))
            .and_then(|m| m.get(&metric))
            .map(|s| s.mean)
    }
}

/// Summarizes records per (dataset, method, metric). The latest record per
/// job key is used; failed records are counted but not aggregated.
pub fn aggregate(records: &[ExperimentRecord]) -> Aggregates {
    let records = latest_by_key(records.to_vec());
    let failed_records = records.iter().filter(|r| !r.is_ok()).count();
    let mut grouped: BTreeMap<&str, BTreeMap<MethodId, Vec<EvalScores>>> = BTreeMap::new();
    for r in &records {
        if let Some(s) = r.scores.filter(|_| r.error.is_none()) {
            grouped.entry(&r.dataset).or_default().entry(r.method).or_default().push(s);
        }
    }

    let datasets: Vec<DatasetAggregate> = grouped
        .iter()
        .map(|(name, by_method)| DatasetAggregate {
            dataset: name.to_string(),
            methods: by_method
                .iter()
                .map(|(&m, scores)| {
                    let metrics = Metric::ALL
                        .into_iter()
                        .filter_map(|metric| {
                            let v: Vec<f64> = scores.iter().map(|s| s.get(metric)).collect();
                            MeanStd::of(&v).map(|ms| (metric, ms))
                        })
                        .collect();
                    (m, metrics)
                })
                .collect(),
        })
        .collect();

    let mut methods: Vec<MethodId> = datasets.iter().flat_map(|d| d.methods.keys().copied()).collect();
    methods.sort_unstable();
    methods.dedup();

    let mut overall = BTreeMap::new();
    for &m in &methods {
        let per_metric = Metric::ALL
            .into_iter()
            .filter_map(|metric| {
                let means: Vec<f64> = datasets
                    .iter()
                    .filter_map(|d| d.methods.get(&m).map(|x| x[&metric].mean))
                    .collect();
                MeanStd::of(&means).map(|s| (metric, s.mean))
            })
            .collect();
        overall.insert(m, per_metric);
    }

    let mut rank_first = BTreeMap::new();
    for metric in Metric::ALL {
        let mut counts: BTreeMap<MethodId, usize> = methods.iter().map(|&m| (m, 0)).collect();
        for d in &datasets {
            let best = d.methods.values().map(|x| x[&metric].mean).fold(f64::NEG_INFINITY, f64::max);
            for (m, x) in &d.methods {
                if x[&metric].mean == best {
                    *counts.get_mut(m).unwrap() += 1;
                }
            }
        }
        rank_first.insert(metric, counts);
    }

    Aggregates {
        methods,
        datasets,
        overall,
        rank_first,
        failed_records,
    }
}
