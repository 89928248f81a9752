use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{DepthChoice, ExperimentConfig};
use super::records::{latest_by_key, read_records, ExperimentRecord, JobKey, RecordSink, RECORD_VERSION};
use super::tune::{tune_architecture, TuneReport};
use crate::data::{load_any, stratified_kfold, train_val_split, Dataset, Standardizer};
use crate::imbalance::{cost_weights, random_oversample, random_undersample, rus_ros_hybrid, MethodId};
use crate::metrics::EvalScores;
use crate::nn::{MlpConfig, MlpModel};
use crate::objectives::{train, ClassCounts, Split, TrainConfig, TrainReport};
use crate::rng::{derive_seed, seeded};
use crate::{Error, Result};

pub const RECORDS_FILE: &str = "records.jsonl";
pub const WORKERS_ENV: &str = "IMBENCH_WORKERS";

/// Row indices used by one (repetition, fold) job.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JobPlan {
    /// Held-out fold, scored once after training.
    pub test: Vec<usize>,
    /// Rows the model is fitted on (before any resampling).
    pub fit: Vec<usize>,
    /// Early-stopping rows.
    pub val: Vec<usize>,
}

impl JobPlan {
    /// `fit` and `val` together: the training partition of the fold.
    pub fn training_partition(&self) -> Vec<usize> {
        let mut rows: Vec<usize> = self.fit.iter().chain(&self.val).copied().collect();
        rows.sort_unstable();
        rows
    }
}

/// Index bookkeeping for one job. The fold split depends only on the
/// repetition and the early-stopping split only on (repetition, fold), so
/// every method sees the same rows.
pub fn plan_job(dataset: &Dataset, config: &ExperimentConfig, repetition: usize, fold: usize) -> Result<JobPlan> {
    let rep = repetition.to_string();
    let folds = stratified_kfold(
        &dataset.labels,
        config.folds,
        &mut seeded(derive_seed(config.seed, &[&dataset.name, "split", &rep])),
    )?;
    if fold >= folds.k() {
        return Err(Error::invalid(format!("fold {fold} out of range for k = {}", folds.k())));
    }
    let test = folds.test_indices(fold).to_vec();
    let training = folds.train_indices(fold);
    let (fit, val) = train_val_split(
        &training,
        &dataset.labels,
        config.val_fraction,
        &mut seeded(derive_seed(config.seed, &[&dataset.name, "val", &rep, &fold.to_string()])),
    )?;
    Ok(JobPlan { test, fit, val })
}

/// Standardizes on the training partition, applies the method, trains and
/// returns minority probabilities for `plan.test`.
pub(crate) fn fit_and_predict(
    dataset: &Dataset,
    plan: &JobPlan,
    method: MethodId,
    depth: usize,
    config: &ExperimentConfig,
    seed: u64,
) -> Result<(Vec<f64>, TrainReport)> {
    let scaler = Standardizer::fit(&dataset.features.select_rows(&plan.training_partition()))?;
    let part = |rows: &[usize]| -> Result<(crate::Matrix, Vec<u8>)> {
        let (x, y) = dataset.subset(rows);
        Ok((scaler.transform(&x)?, y))
    };
    let (fit_x, fit_y) = part(&plan.fit)?;
    let (val_x, val_y) = part(&plan.val)?;
    let (test_x, _) = part(&plan.test)?;

    let mut rng = seeded(seed);
    let (fit_x, fit_y) = match method {
        MethodId::Ros => random_oversample(&fit_x, &fit_y, &mut rng)?,
        MethodId::Rus => random_undersample(&fit_x, &fit_y, &mut rng)?,
        MethodId::Rusros => rus_ros_hybrid(&fit_x, &fit_y, &mut rng)?,
        _ => (fit_x, fit_y),
    };
    let class_weights = match method {
        MethodId::Cost => Some(cost_weights(&ClassCounts::from_labels(&fit_y)?, config.cost_weighting)?),
        _ => None,
    };

    let arch = MlpConfig::new(dataset.n_features(), depth)
        .with_width(config.width)
        .with_dropout(config.dropout);
    let mut model = MlpModel::new(&arch, &mut rng)?;
    let train_config = TrainConfig {
        objective: method.objective(),
        epochs: config.max_epochs,
        batch_size: config.batch_size_for(&dataset.name, dataset.len()),
        learning_rate: config.learning_rate,
        patience: config.patience,
        class_weights,
        seed: derive_seed(seed, &["train"]),
    };
    let report = train(
        &mut model,
        Split::new(&fit_x, &fit_y),
        Split::new(&val_x, &val_y),
        &train_config,
    )?;
    Ok((model.predict_proba(&test_x)?, report))
}

/// Runs one job. Failures are returned as a record with `error` set.
pub fn run_job(
    dataset: &Dataset,
    config: &ExperimentConfig,
    method: MethodId,
    repetition: usize,
    fold: usize,
    depth: usize,
) -> ExperimentRecord {
    let seed = derive_seed(
        config.seed,
        &[&dataset.name, method.as_str(), &repetition.to_string(), &fold.to_string()],
    );
    let start = Instant::now();
    let outcome = plan_job(dataset, config, repetition, fold).and_then(|plan| {
        let (probs, report) = fit_and_predict(dataset, &plan, method, depth, config, seed)?;
        let test_labels: Vec<u8> = plan.test.iter().map(|&i| dataset.labels[i]).collect();
        Ok((EvalScores::compute(&probs, &test_labels, 0.5)?, report.epochs_run))
    });
    let (scores, epochs_run, error) = match outcome {
        Ok((s, e)) => (Some(s), e, None),
        Err(e) => (None, 0, Some(e.to_string())),
    };
    ExperimentRecord {
        v: RECORD_VERSION,
        dataset: dataset.name.clone(),
        method,
        fold,
        repetition,
        seed,
        depth,
        scores,
        epochs_run,
        wall_time_s: start.elapsed().as_secs_f64(),
        error,
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads; `IMBENCH_WORKERS` takes precedence.
    pub workers: Option<usize>,
    /// Stop dispatching after this many new jobs (simulates an interruption).
    pub stop_after: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub records_path: PathBuf,
    pub total_jobs: usize,
    /// Jobs already complete in the records file before this run.
    pub skipped: usize,
    pub completed: usize,
    pub failed: usize,
    /// Jobs left undone because of `stop_after`.
    pub remaining: usize,
    pub depths: BTreeMap<String, usize>,
}

/// Worker count: `IMBENCH_WORKERS`, then `requested`, then the number of
/// available cores.
pub fn resolve_workers(requested: Option<usize>) -> usize {
    let from_env = std::env::var(WORKERS_ENV).ok().and_then(|v| match v.trim().parse::<usize>() {
        Ok(n) if n > 0 => Some(n),
        _ => {
            log::warn!("ignoring {WORKERS_ENV}={v:?}");
            None
        }
    });
    from_env
        .or(requested)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .max(1)
}

fn tune_path(output_dir: &Path, dataset: &str) -> PathBuf {
    output_dir.join(format!("tune_{dataset}.json"))
}

fn resolve_depth(dataset: &Dataset, config: &ExperimentConfig, workers: usize) -> Result<usize> {
    match config.depth {
        DepthChoice::Fixed(d) => Ok(d),
        DepthChoice::Tune => {
            let path = tune_path(&config.output_dir, &dataset.name);
            if let Ok(text) = std::fs::read_to_string(&path) {
                if let Ok(cached) = serde_json::from_str::<TuneReport>(&text) {
                    if cached.matches(config) {
                        return Ok(cached.selected_depth);
                    }
                }
            }
            let report = tune_architecture(dataset, config, workers)?;
            std::fs::write(&path, serde_json::to_string_pretty(&report)?).map_err(|e| Error::io(&path, e))?;
            log::info!("{}: selected depth {}", dataset.name, report.selected_depth);
            Ok(report.selected_depth)
        }
    }
}

struct Job<'a> {
    dataset: &'a Dataset,
    depth: usize,
    method: MethodId,
    repetition: usize,
    fold: usize,
}

/// Runs every (dataset, method, repetition, fold) job not already complete
/// in `<output_dir>/records.jsonl`, appending one record per job.
pub fn run_experiment(config: &ExperimentConfig, options: &RunOptions) -> Result<RunSummary> {
    config.validate()?;
    let workers = resolve_workers(options.workers.or(config.workers));
    std::fs::create_dir_all(&config.output_dir).map_err(|e| Error::io(&config.output_dir, e))?;
    let records_path = config.output_dir.join(RECORDS_FILE);

    let datasets = config.datasets.iter().map(|p| load_any(p)).collect::<Result<Vec<_>>>()?;
    let mut names = HashSet::new();
    for d in &datasets {
        if !names.insert(d.name.as_str()) {
            return Err(Error::invalid(format!("dataset name {:?} appears twice", d.name)));
        }
    }
    let mut depths = BTreeMap::new();
    for d in &datasets {
        depths.insert(d.name.clone(), resolve_depth(d, config, workers)?);
    }

    let done: HashSet<JobKey> = latest_by_key(read_records(&records_path)?)
        .into_iter()
        .filter(ExperimentRecord::is_ok)
        .map(|r| r.key())
        .collect();
    let mut jobs = Vec::new();
    let mut total = 0;
    for d in &datasets {
        for &method in &config.methods {
            for repetition in 0..config.repetitions {
                for fold in 0..config.folds {
                    total += 1;
                    let key = JobKey {
                        dataset: d.name.clone(),
                        method,
                        fold,
                        repetition,
                    };
                    if !done.contains(&key) {
                        jobs.push(Job {
                            dataset: d,
                            depth: depths[&d.name],
                            method,
                            repetition,
                            fold,
                        });
                    }
                }
            }
        }
    }
    let skipped = total - jobs.len();
    let budget = options.stop_after.unwrap_or(usize::MAX).min(jobs.len());
    log::info!(
        "{} jobs ({skipped} already done), running {budget} on {workers} worker(s)",
        total
    );

    let mut sink = RecordSink::open(&records_path)?;
    let next = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel::<ExperimentRecord>();
    let mut completed = 0;
    let mut failed = 0;
    let mut write_error = None;
    std::thread::scope(|s| {
        for _ in 0..workers.min(budget.max(1)) {
            let tx = tx.clone();
            let (next, jobs) = (&next, &jobs);
            s.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= budget {
                    break;
                }
                let j = &jobs[i];
                let record = run_job(j.dataset, config, j.method, j.repetition, j.fold, j.depth);
                if tx.send(record).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        for record in rx {
            if let Some(err) = &record.error {
                failed += 1;
                log::error!(
                    "{} {} rep {} fold {} failed: {err}",
                    record.dataset,
                    record.method,
                    record.repetition,
                    record.fold
                );
            }
            completed += 1;
            if write_error.is_none() {
                if let Err(e) = sink.append(&record) {
                    write_error = Some(e);
                    next.store(usize::MAX / 2, Ordering::Relaxed);
                }
            }
        }
    });
    if let Some(e) = write_error {
        return Err(e);
    }
    Ok(RunSummary {
        records_path,
        total_jobs: total,
        skipped,
        completed,
        failed,
        remaining: jobs.len() - completed,
        depths,
    })
}
