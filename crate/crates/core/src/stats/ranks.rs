use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::special::chi_square_sf;
use crate::{Error, Result};

/// Mean metric per dataset (rows) and method (columns).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreTable {
    pub methods: Vec<String>,
    pub datasets: Vec<String>,
    pub scores: Vec<Vec<f64>>,
}

impl ScoreTable {
    pub fn new(methods: Vec<String>, datasets: Vec<String>, scores: Vec<Vec<f64>>) -> Result<Self> {
        if scores.len() != datasets.len() {
            return Err(Error::Shape(format!("{} score rows for {} datasets", scores.len(), datasets.len())));
        }
        for (d, row) in datasets.iter().zip(&scores) {
            if row.len() != methods.len() {
                return Err(Error::Shape(format!("dataset {d} has {} scores for {} methods", row.len(), methods.len())));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("dataset {d} has a missing or non-finite score")));
            }
        }
        Ok(ScoreTable { methods, datasets, scores })
    }

    /// Score column of one method across datasets.
    pub fn column(&self, method: usize) -> Vec<f64> {
        self.scores.iter().map(|r| r[method]).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankMatrix {
    pub methods: Vec<String>,
    /// Per-dataset ranks, 1 = best, ties averaged.
    pub ranks: Vec<Vec<f64>>,
    pub mean_ranks: Vec<f64>,
}

impl RankMatrix {
    pub fn n_datasets(&self) -> usize {
        self.ranks.len()
    }

    pub fn n_methods(&self) -> usize {
        self.methods.len()
    }
}

/// Ranks of `values` (1 = first in the given ordering), averaging ties.
pub fn average_ranks(values: &[f64], descending: bool) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        let ord = values[a].partial_cmp(&values[b]).unwrap_or(Ordering::Equal);
        if descending {
            ord.reverse()
        } else {
            ord
        }
    });
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        // positions i..j share the mean of ranks i+1..=j
        let avg = (i + 1 + j) as f64 / 2.0;
        for &o in &order[i..j] {
            ranks[o] = avg;
        }
        i = j;
    }
    ranks
}

pub fn mean_ranks(table: &ScoreTable, higher_is_better: bool) -> RankMatrix {
    let ranks: Vec<Vec<f64>> = table.scores.iter().map(|row| average_ranks(row, higher_is_better)).collect();
    let k = table.methods.len();
    let n = ranks.len().max(1) as f64;
    let mean_ranks = (0..k).map(|j| ranks.iter().map(|r| r[j]).sum::<f64>() / n).collect();
    RankMatrix {
        methods: table.methods.clone(),
        ranks,
        mean_ranks,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FriedmanResult {
    pub statistic: f64,
    pub p_value: f64,
    pub df: usize,
}

/// Friedman chi-square on mean ranks, `p` from the chi-square upper tail
/// with `k - 1` degrees of freedom.
pub fn friedman_test(ranks: &RankMatrix) -> Result<FriedmanResult> {
    let n = ranks.n_datasets();
    let k = ranks.n_methods();
    if n < 2 || k < 2 {
        return Err(Error::invalid(format!("Friedman test needs N >= 2 and k >= 2, got N = {n}, k = {k}")));
    }
    let (nf, kf) = (n as f64, k as f64);
    let sum_sq: f64 = ranks.mean_ranks.iter().map(|r| r * r).sum();
    let statistic = (12.0 * nf / (kf * (kf + 1.0)) * (sum_sq - kf * (kf + 1.0).powi(2) / 4.0)).max(0.0);
    Ok(FriedmanResult {
        statistic,
        p_value: chi_square_sf(statistic, kf - 1.0),
        df: k - 1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn table(rows: Vec<Vec<f64>>) -> ScoreTable {
        let k = rows[0].len();
        let methods = (0..k).map(|j| format!("m{j}")).collect();
        let datasets = (0..rows.len()).map(|i| format!("d{i}")).collect();
        ScoreTable::new(methods, datasets, rows).unwrap()
    }

    #[test]
    fn rank_examples() {
        let r = mean_ranks(&table(vec![vec![3.0, 2.0, 1.0]]), true);
        assert_eq!(r.ranks[0], vec![1.0, 2.0, 3.0]);
        let r = mean_ranks(&table(vec![vec![5.0, 5.0, 1.0]]), true);
        assert_eq!(r.ranks[0], vec![1.5, 1.5, 3.0]);
        let r = mean_ranks(&table(vec![vec![3.0, 2.0, 1.0]]), false);
        assert_eq!(r.ranks[0], vec![3.0, 2.0, 1.0]);
    }

    #[test]
    fn friedman_total_order() {
        let rows = vec![vec![0.9, 0.5, 0.1]; 4];
        let f = friedman_test(&mean_ranks(&table(rows), true)).unwrap();
        assert_abs_diff_eq!(f.statistic, 8.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f.p_value, (-4.0f64).exp(), epsilon = 1e-10);
        assert_eq!(f.df, 2);
    }

    #[test]
    fn friedman_no_signal() {
        let f = friedman_test(&mean_ranks(&table(vec![vec![0.5; 4]; 6]), true)).unwrap();
        assert_eq!(f.statistic, 0.0);
        assert_eq!(f.p_value, 1.0);
    }

    #[test]
    fn friedman_matches_sum_of_squares_form() {
        // chi2 = 12 / (N k (k+1)) * sum_j (sum_i r_ij)^2 - 3 N (k+1)
        let rows = vec![
            vec![0.7, 0.1, 0.4, 0.4],
            vec![0.2, 0.9, 0.3, 0.1],
            vec![0.5, 0.6, 0.8, 0.2],
            vec![0.3, 0.3, 0.3, 0.9],
            vec![0.1, 0.2, 0.6, 0.5],
        ];
        let r = mean_ranks(&table(rows), true);
        let (n, k) = (5.0, 4.0);
        let col_sums: Vec<f64> = (0..4).map(|j| r.ranks.iter().map(|row| row[j]).sum()).collect();
        let alt = 12.0 / (n * k * (k + 1.0)) * col_sums.iter().map(|s| s * s).sum::<f64>() - 3.0 * n * (k + 1.0);
        assert_abs_diff_eq!(friedman_test(&r).unwrap().statistic, alt, epsilon = 1e-12);
    }

    #[test]
    fn friedman_rejects_degenerate_dimensions() {
        assert!(friedman_test(&mean_ranks(&table(vec![vec![1.0, 2.0]]), true)).is_err());
        assert!(friedman_test(&mean_ranks(&table(vec![vec![1.0], vec![2.0]]), true)).is_err());
    }

    #[test]
    fn score_table_rejects_gaps() {
        assert!(ScoreTable::new(vec!["a".into()], vec!["d".into()], vec![vec![f64::NAN]]).is_err());
        assert!(ScoreTable::new(vec!["a".into(), "b".into()], vec!["d".into()], vec![vec![1.0]]).is_err());
    }
}
