//! Nonparametric comparison of methods across datasets.

mod cd_diagram;
mod holm;
mod ranks;
pub mod special;
mod wilcoxon;

use serde::{Deserialize, Serialize};

pub use cd_diagram::{cd_diagram_svg, cd_diagram_svg_with, cliques, rank_order, CdLayout, Clique};
pub use holm::holm_correction;
pub use ranks::{average_ranks, friedman_test, mean_ranks, FriedmanResult, RankMatrix, ScoreTable};
pub use wilcoxon::{wilcoxon_signed_rank, WilcoxonResult, EXACT_MAX_N};

use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseResult {
    pub method_a: String,
    pub method_b: String,
    pub statistic: f64,
    pub p_value: f64,
    /// Holm-adjusted rejection at the family level.
    pub significant: bool,
}

/// Wilcoxon signed-rank on every method pair of `table`, Holm-corrected
/// over the whole family.
pub fn pairwise_wilcoxon_holm(table: &ScoreTable, alpha: f64) -> Result<Vec<PairwiseResult>> {
    let k = table.methods.len();
    let mut out = Vec::with_capacity(k * k.saturating_sub(1) / 2);
    for a in 0..k {
        for b in a + 1..k {
            let w = wilcoxon_signed_rank(&table.column(a), &table.column(b))?;
            out.push(PairwiseResult {
                method_a: table.methods[a].clone(),
                method_b: table.methods[b].clone(),
                statistic: w.statistic,
                p_value: w.two_sided_p,
                significant: false,
            });
        }
    }
    let p: Vec<f64> = out.iter().map(|r| r.p_value).collect();
    for (r, flag) in out.iter_mut().zip(holm_correction(&p, alpha)) {
        r.significant = flag;
    }
    Ok(out)
}
