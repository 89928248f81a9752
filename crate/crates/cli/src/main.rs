//! `imbench`: inspect datasets, tune depth, run experiments and report.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use imbench::data::{load_any, profile};
use imbench::harness::{
    aggregate, read_records, resolve_workers, run_experiment, stats_report, tune_architecture, write_stats_outputs,
    Aggregates, ExperimentConfig, RunOptions,
};
use imbench::metrics::Metric;

#[derive(Parser)]
#[command(name = "imbench", version, about = "Deep imbalanced classification benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print size, class balance, imbalance ratio and silhouette of a dataset.
    Inspect {
        data: PathBuf,
        /// Emit JSON only.
        #[arg(long)]
        json: bool,
        /// Row cap for the silhouette computation.
        #[arg(long, default_value_t = 5000)]
        silhouette_cap: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Select the network depth by cross-validated ROC-AUC.
    Tune {
        data: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Also write the report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run (or resume) the full job matrix of a config.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
        /// Stop after this many new jobs; rerun to resume.
        #[arg(long)]
        stop_after: Option<usize>,
    },
    /// Per-dataset mean and std of every metric, overall means, rank-first counts.
    Aggregate {
        #[arg(long)]
        records: PathBuf,
        /// Write the aggregates JSON here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Friedman test, pairwise Wilcoxon with Holm, and a CD diagram.
    Stats {
        #[arg(long)]
        records: PathBuf,
        #[arg(long, default_value = "g_mean")]
        metric: String,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_aggregates(records: &Path) -> Result<Aggregates> {
    if !records.exists() {
        bail!("{} does not exist", records.display());
    }
    let recs = read_records(records)?;
    if recs.is_empty() {
        bail!("{} holds no records", records.display());
    }
    Ok(aggregate(&recs))
}

fn print_table(agg: &Aggregates) {
    let metrics = [Metric::F1, Metric::GMean, Metric::PrAuc, Metric::RocAuc];
    print!("{:<12} {:<7}", "dataset", "method");
    for m in metrics {
        print!(" {:>15}", m.as_str());
    }
    println!();
    for d in &agg.datasets {
        for (method, scores) in &d.methods {
            print!("{:<12} {:<7}", d.dataset, method.as_str());
            for m in metrics {
                let s = scores[&m];
                print!(" {:>7.2} ± {:>5.2}", 100.0 * s.mean, 100.0 * s.std);
            }
            println!();
        }
    }
    println!();
    for (method, overall) in &agg.overall {
        print!("{:<12} {:<7}", "overall", method.as_str());
        for m in metrics {
            print!(" {:>7.2} ({:>2}x1st)", 100.0 * overall[&m], agg.rank_first[&m][method]);
        }
        println!();
    }
    if agg.failed_records > 0 {
        println!("\n{} failed record(s) excluded", agg.failed_records);
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Inspect {
            data,
            json,
            silhouette_cap,
            seed,
        } => {
            let ds = load_any(&data)?;
            let p = profile(&ds, silhouette_cap, seed)?;
            if !json {
                println!("dataset      {}", p.name);
                println!("samples      {}", p.n_samples);
                println!("features     {}", p.n_features);
                println!("majority     {} ({:.2}%)", p.n_majority, p.pct_majority);
                println!("minority     {} ({:.2}%)", p.n_minority, p.pct_minority);
                println!("IR           {:.2}", p.imbalance_ratio);
                println!("silhouette   {:.4}", p.silhouette);
            }
            println!("{}", serde_json::to_string(&p)?);
        }
        Command::Tune { data, config, out } => {
            let cfg = match config {
                Some(path) => ExperimentConfig::load(&path)?,
                None => ExperimentConfig::new(vec![data.clone()], "results".into()),
            };
            let ds = load_any(&data)?;
            let report = tune_architecture(&ds, &cfg, resolve_workers(cfg.workers))?;
            for d in &report.depths {
                eprintln!("depth {}  mean AUC {:.4}", d.depth, d.mean_auc);
            }
            eprintln!("selected depth {}", report.selected_depth);
            let text = serde_json::to_string_pretty(&report)?;
            if let Some(path) = out {
                std::fs::write(&path, &text).with_context(|| format!("writing {}", path.display()))?;
            }
            println!("{text}");
        }
        Command::Run {
            config,
            workers,
            stop_after,
        } => {
            let cfg = ExperimentConfig::load(&config)?;
            let summary = run_experiment(&cfg, &RunOptions { workers, stop_after })?;
            eprintln!(
                "{} jobs: {} already done, {} run, {} failed, {} remaining -> {}",
                summary.total_jobs,
                summary.skipped,
                summary.completed,
                summary.failed,
                summary.remaining,
                summary.records_path.display()
            );
            if summary.failed > 0 {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Aggregate { records, out } => {
            let agg = load_aggregates(&records)?;
            match out {
                Some(path) => {
                    std::fs::write(&path, serde_json::to_string_pretty(&agg)?)
                        .with_context(|| format!("writing {}", path.display()))?;
                    print_table(&agg);
                }
                None => println!("{}", serde_json::to_string_pretty(&agg)?),
            }
        }
        Command::Stats {
            records,
            metric,
            alpha,
            out,
        } => {
            let metric: Metric = metric.parse()?;
            let agg = load_aggregates(&records)?;
            let report = stats_report(&agg, metric, alpha)?;
            let (json, svg) = write_stats_outputs(&report, &out)?;
            if let Some(f) = &report.friedman {
                println!("Friedman chi2 = {:.4}, df = {}, p = {:.5}", f.statistic, f.df, f.p_value);
            }
            for p in &report.pairwise {
                println!(
                    "{:<7} vs {:<7} p = {:.5}{}",
                    p.method_a,
                    p.method_b,
                    p.p_value,
                    if p.significant { "  *" } else { "" }
                );
            }
            println!("wrote {} and {}", json.display(), svg.display());
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
