//! Threshold and ranking metrics for the minority (label 1) class.
//!
//! Degenerate cases (no predicted positives, empty denominators) score 0 so
//! that aggregating folds never aborts; the curve metrics still report an
//! error when the labels make the curve undefined.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn true_negative_rate(&self) -> f64 {
        ratio(self.tn, self.tn + self.fp)
    }
}

fn check_pair(scores: &[f64], labels: &[u8]) -> Result<()> {
    if scores.len() != labels.len() {
        return Err(Error::Shape(format!("{} scores for {} labels", scores.len(), labels.len())));
    }
    crate::nn::check_labels(labels, 2)
}

/// A sample is predicted positive iff its score is at least `threshold`.
pub fn confusion_at_threshold(scores: &[f64], labels: &[u8], threshold: f64) -> Result<ConfusionCounts> {
    check_pair(scores, labels)?;
    let mut c = ConfusionCounts::default();
    for (&s, &y) in scores.iter().zip(labels) {
        match (s >= threshold, y == 1) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, false) => c.tn += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    Ok(c)
}

/// `(1+β²)·P·R / (β²·P + R)`, or 0 when there are no true positives.
pub fn f_beta(c: &ConfusionCounts, beta: f64) -> f64 {
    if c.tp == 0 {
        return 0.0;
    }
    let (p, r) = (c.precision(), c.recall());
    let b2 = beta * beta;
    (1.0 + b2) * p * r / (b2 * p + r)
}

pub fn f1(c: &ConfusionCounts) -> f64 {
    f_beta(c, 1.0)
}

/// `sqrt(recall · TNR)`; 0 when either rate is undefined.
pub fn g_mean(c: &ConfusionCounts) -> f64 {
    (c.recall() * c.true_negative_rate()).sqrt()
}

/// Groups of equal scores in descending score order, as (positives, negatives).
fn descending_tie_groups(scores: &[f64], labels: &[u8]) -> Vec<(usize, usize)> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap_or(Ordering::Equal));
    let mut groups: Vec<(usize, usize)> = Vec::new();
    let mut prev: Option<f64> = None;
    for i in order {
        if prev != Some(scores[i]) {
            groups.push((0, 0));
            prev = Some(scores[i]);
        }
        let g = groups.last_mut().unwrap();
        if labels[i] == 1 {
            g.0 += 1;
        } else {
            g.1 += 1;
        }
    }
    groups
}

/// Area under the ROC curve traced over every distinct score threshold,
/// integrated with the trapezoidal rule. Tied scores form a diagonal segment,
/// which equals counting tied positive/negative pairs as one half.
pub fn roc_auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    check_pair(scores, labels)?;
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::invalid("NaN score"));
    }
    let pos = labels.iter().filter(|&&y| y == 1).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClass);
    }
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut area = 0.0;
    for (gp, gn) in descending_tie_groups(scores, labels) {
        let (tp0, fp0) = (tp, fp);
        tp += gp;
        fp += gn;
        area += (fp - fp0) as f64 * (tp + tp0) as f64 / 2.0;
    }
    Ok(area / (pos as f64 * neg as f64))
}

/// Precision–recall points `(recall, precision)`, one per distinct score in
/// descending order.
pub fn pr_curve(scores: &[f64], labels: &[u8]) -> Result<Vec<(f64, f64)>> {
    check_pair(scores, labels)?;
    let pos = labels.iter().filter(|&&y| y == 1).count();
    if pos == 0 {
        return Err(Error::invalid("precision-recall curve needs at least one positive"));
    }
    let (mut tp, mut fp) = (0usize, 0usize);
    Ok(descending_tie_groups(scores, labels)
        .into_iter()
        .map(|(gp, gn)| {
            tp += gp;
            fp += gn;
            (tp as f64 / pos as f64, tp as f64 / (tp + fp) as f64)
        })
        .collect())
}

/// ROC points `(fpr, tpr)` from `(0, 0)` to `(1, 1)`.
pub fn roc_curve(scores: &[f64], labels: &[u8]) -> Result<Vec<(f64, f64)>> {
    check_pair(scores, labels)?;
    let pos = labels.iter().filter(|&&y| y == 1).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClass);
    }
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut pts = vec![(0.0, 0.0)];
    for (gp, gn) in descending_tie_groups(scores, labels) {
        tp += gp;
        fp += gn;
        pts.push((fp as f64 / neg as f64, tp as f64 / pos as f64));
    }
    Ok(pts)
}

/// Trapezoidal area under the PR curve, anchored at recall 0 with the
/// precision of the first (highest-score) point.
pub fn pr_auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    let pts = pr_curve(scores, labels)?;
    let mut prev = (0.0, pts[0].1);
    let mut area = 0.0;
    for &(r, p) in &pts {
        area += (r - prev.0) * (p + prev.1) / 2.0;
        prev = (r, p);
    }
    Ok(area)
}

/// All reported scores for one held-out fold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalScores {
    pub f1: f64,
    pub g_mean: f64,
    pub pr_auc: f64,
    pub roc_auc: f64,
    pub precision: f64,
    pub recall: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    F1,
    GMean,
    PrAuc,
    RocAuc,
    Precision,
    Recall,
}

impl Metric {
    pub const ALL: [Metric; 6] = [
        Metric::F1,
        Metric::GMean,
        Metric::PrAuc,
        Metric::RocAuc,
        Metric::Precision,
        Metric::Recall,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Metric::F1 => "f1",
            Metric::GMean => "g_mean",
            Metric::PrAuc => "pr_auc",
            Metric::RocAuc => "roc_auc",
            Metric::Precision => "precision",
            Metric::Recall => "recall",
        }
    }
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.to_ascii_lowercase().replace('-', "_");
        Metric::ALL
            .into_iter()
            .find(|m| m.as_str() == norm || (norm == "gmean" && *m == Metric::GMean))
            .ok_or_else(|| Error::invalid(format!("unknown metric {s:?}")))
    }
}

impl EvalScores {
    /// Scores `scores` (minority probabilities) against `labels`; threshold
    /// metrics use `score >= threshold`. Undefined curve metrics become 0.
    pub fn compute(scores: &[f64], labels: &[u8], threshold: f64) -> Result<Self> {
        let c = confusion_at_threshold(scores, labels, threshold)?;
        Ok(EvalScores {
            f1: f1(&c),
            g_mean: g_mean(&c),
            pr_auc: pr_auc(scores, labels).unwrap_or(0.0),
            roc_auc: roc_auc(scores, labels).unwrap_or(0.0),
            precision: c.precision(),
            recall: c.recall(),
        })
    }

    pub fn get(&self, metric: Metric) -> f64 {
        match metric {
            Metric::F1 => self.f1,
            Metric::GMean => self.g_mean,
            Metric::PrAuc => self.pr_auc,
            Metric::RocAuc => self.roc_auc,
            Metric::Precision => self.precision,
            Metric::Recall => self.recall,
        }
    }
}
