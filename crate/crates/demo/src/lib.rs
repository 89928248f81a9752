//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Every export takes plain numbers or text and returns JSON or SVG text.

use imbench::data::{train_val_split, GaussianBlobs, Standardizer};
use imbench::metrics::{pr_auc, pr_curve, roc_auc, roc_curve, EvalScores};
use imbench::nn::{MlpConfig, MlpModel};
use imbench::objectives::{train, Objective, Split, TrainConfig};
use imbench::rng::{derive_seed, seeded};
use imbench::stats::{cd_diagram_svg_with, friedman_test, mean_ranks, pairwise_wilcoxon_holm, CdLayout, ScoreTable};
use imbench::Matrix;
use serde::Serialize;
use wasm_bindgen::prelude::*;

const GRID: usize = 40;

#[derive(Serialize)]
struct MethodResult {
    method: &'static str,
    epochs: usize,
    scores: EvalScores,
    /// Minority probability on a GRID × GRID lattice, row-major from the
    /// bottom-left corner.
    grid: Vec<f64>,
}

#[derive(Serialize)]
struct BlobsResult {
    bounds: [f64; 4],
    grid_size: usize,
    points: Vec<[f64; 2]>,
    labels: Vec<u8>,
    methods: Vec<MethodResult>,
}

/// Trains ERM and group DRO on a two-Gaussian set and scores both on a
/// held-out 30%.
pub fn compare_objectives_json(
    n: usize,
    imbalance_ratio: f64,
    separation: f64,
    depth: usize,
    epochs: usize,
    seed: u64,
) -> Result<String, String> {
    let data = GaussianBlobs::new(n, imbalance_ratio, separation)
        .generate(seed)
        .map_err(|e| e.to_string())?;
    let all: Vec<usize> = (0..data.len()).collect();
    let mut rng = seeded(derive_seed(seed, &["split"]));
    let (train_rows, test_rows) = train_val_split(&all, &data.labels, 0.3, &mut rng).map_err(|e| e.to_string())?;
    let (fit_rows, val_rows) =
        train_val_split(&train_rows, &data.labels, 0.15, &mut rng).map_err(|e| e.to_string())?;

    let scaler = Standardizer::fit(&data.features.select_rows(&train_rows)).map_err(|e| e.to_string())?;
    let part = |rows: &[usize]| {
        let (x, y) = data.subset(rows);
        scaler.transform(&x).map(|x| (x, y)).map_err(|e| e.to_string())
    };
    let (fit_x, fit_y) = part(&fit_rows)?;
    let (val_x, val_y) = part(&val_rows)?;
    let (test_x, test_y) = part(&test_rows)?;

    let xs = data.features.column(0);
    let ys = data.features.column(1);
    let range = |v: &[f64]| v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let (x0, x1) = range(&xs);
    let (y0, y1) = range(&ys);
    let bounds = [x0 - 0.5, x1 + 0.5, y0 - 0.5, y1 + 0.5];
    let mut lattice = Vec::with_capacity(GRID * GRID * 2);
    for r in 0..GRID {
        for c in 0..GRID {
            let fx = bounds[0] + (bounds[1] - bounds[0]) * (c as f64 + 0.5) / GRID as f64;
            let fy = bounds[2] + (bounds[3] - bounds[2]) * (r as f64 + 0.5) / GRID as f64;
            lattice.extend([fx, fy]);
        }
    }
    let lattice = scaler
        .transform(&Matrix::from_vec(GRID * GRID, 2, lattice).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;

    let batch = n.div_ceil(50).clamp(8, 1024);
    let mut methods = Vec::new();
    for (name, objective) in [("ERM", Objective::Erm), ("GDRO", Objective::Gdro)] {
        let train_seed = derive_seed(seed, &["train", name]);
        let mut model = MlpModel::new(&MlpConfig::new(2, depth).with_width(32), &mut seeded(train_seed))
            .map_err(|e| e.to_string())?;
        let mut config = TrainConfig::new(objective, batch, train_seed);
        config.epochs = epochs.max(1);
        let report = train(&mut model, Split::new(&fit_x, &fit_y), Split::new(&val_x, &val_y), &config)
            .map_err(|e| e.to_string())?;
        let probs = model.predict_proba(&test_x).map_err(|e| e.to_string())?;
        methods.push(MethodResult {
            method: name,
            epochs: report.epochs_run,
            scores: EvalScores::compute(&probs, &test_y, 0.5).map_err(|e| e.to_string())?,
            grid: model.predict_proba(&lattice).map_err(|e| e.to_string())?,
        });
    }
    let result = BlobsResult {
        bounds,
        grid_size: GRID,
        points: xs.iter().zip(&ys).map(|(&x, &y)| [x, y]).collect(),
        labels: data.labels.clone(),
        methods,
    };
    serde_json::to_string(&result).map_err(|e| e.to_string())
}

fn parse_numbers(text: &str) -> Result<Vec<f64>, String> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|_| format!("not a number: {t:?}")))
        .collect()
}

#[derive(Serialize)]
struct CurvesResult {
    roc: Vec<(f64, f64)>,
    pr: Vec<(f64, f64)>,
    roc_auc: f64,
    pr_auc: f64,
}

/// ROC and precision-recall curves for comma or space separated scores and
/// 0/1 labels.
pub fn curves_json(scores: &str, labels: &str) -> Result<String, String> {
    let s = parse_numbers(scores)?;
    let labels: Vec<u8> = parse_numbers(labels)?
        .into_iter()
        .map(|v| match v {
            0.0 => Ok(0),
            1.0 => Ok(1),
            _ => Err(format!("label {v} is not 0 or 1")),
        })
        .collect::<Result<_, _>>()?;
    let result = CurvesResult {
        roc: roc_curve(&s, &labels).map_err(|e| e.to_string())?,
        pr: pr_curve(&s, &labels).map_err(|e| e.to_string())?,
        roc_auc: roc_auc(&s, &labels).map_err(|e| e.to_string())?,
        pr_auc: pr_auc(&s, &labels).map_err(|e| e.to_string())?,
    };
    serde_json::to_string(&result).map_err(|e| e.to_string())
}

/// Parses a score table: first line `dataset,method1,method2,...`, then one
/// line per dataset.
pub fn parse_score_table(text: &str) -> Result<ScoreTable, String> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
    let header: Vec<&str> = lines.next().ok_or("empty table")?.split(',').map(str::trim).collect();
    if header.len() < 3 {
        return Err("need a dataset column and at least two methods".into());
    }
    let methods: Vec<String> = header[1..].iter().map(|s| s.to_string()).collect();
    let mut datasets = Vec::new();
    let mut scores = Vec::new();
    for line in lines {
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != header.len() {
            return Err(format!("row {:?} has {} cells, expected {}", cells[0], cells.len(), header.len()));
        }
        datasets.push(cells[0].to_string());
        scores.push(parse_numbers(&cells[1..].join(","))?);
    }
    ScoreTable::new(methods, datasets, scores).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct CdResult {
    svg: String,
    mean_ranks: Vec<(String, f64)>,
    friedman_p: Option<f64>,
    significant_pairs: Vec<(String, String, f64)>,
}

/// Critical-difference diagram (higher scores rank better) for a score table.
pub fn cd_diagram_json(table: &str, alpha: f64) -> Result<String, String> {
    let table = parse_score_table(table)?;
    let ranks = mean_ranks(&table, true);
    let pairwise = pairwise_wilcoxon_holm(&table, alpha).map_err(|e| e.to_string())?;
    let friedman_p = if table.datasets.len() >= 2 {
        Some(friedman_test(&ranks).map_err(|e| e.to_string())?.p_value)
    } else {
        None
    };
    let result = CdResult {
        svg: cd_diagram_svg_with(&ranks, &pairwise, &CdLayout::default(), None),
        mean_ranks: ranks.methods.iter().cloned().zip(ranks.mean_ranks.iter().copied()).collect(),
        friedman_p,
        significant_pairs: pairwise
            .iter()
            .filter(|p| p.significant)
            .map(|p| (p.method_a.clone(), p.method_b.clone(), p.p_value))
            .collect(),
    };
    serde_json::to_string(&result).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn compare_objectives(
    n: usize,
    imbalance_ratio: f64,
    separation: f64,
    depth: usize,
    epochs: usize,
    seed: u32,
) -> Result<String, JsError> {
    compare_objectives_json(n, imbalance_ratio, separation, depth, epochs, u64::from(seed)).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn curves(scores: &str, labels: &str) -> Result<String, JsError> {
    curves_json(scores, labels).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn cd_diagram(table: &str, alpha: f64) -> Result<String, JsError> {
    cd_diagram_json(table, alpha).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curves_worked_example() {
        let out: serde_json::Value = serde_json::from_str(&curves_json("0.9 0.8 0.7 0.1", "1,0,1,0").unwrap()).unwrap();
        assert_eq!(out["roc_auc"], 0.75);
        assert!(curves_json("0.5", "2").is_err());
    }

    #[test]
    fn cd_from_table_text() {
        let text = "dataset,A,B,C\nd1,0.9,0.8,0.7\nd2,0.85,0.8,0.6\nd3,0.7,0.75,0.5\n";
        let out: serde_json::Value = serde_json::from_str(&cd_diagram_json(text, 0.05).unwrap()).unwrap();
        assert!(out["svg"].as_str().unwrap().contains("method-label"));
        assert_eq!(out["mean_ranks"].as_array().unwrap().len(), 3);
        assert!(parse_score_table("dataset,A\nd1,0.3").is_err());
        assert!(parse_score_table("dataset,A,B\nd1,0.3").is_err());
    }

    #[test]
    fn compare_runs_small() {
        let out: serde_json::Value =
            serde_json::from_str(&compare_objectives_json(300, 5.0, 2.0, 2, 5, 1).unwrap()).unwrap();
        assert_eq!(out["methods"].as_array().unwrap().len(), 2);
        assert_eq!(out["methods"][0]["grid"].as_array().unwrap().len(), GRID * GRID);
    }
}
