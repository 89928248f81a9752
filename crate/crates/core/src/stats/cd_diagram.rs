//! Critical-difference diagram rendering.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::ranks::RankMatrix;
use super::PairwiseResult;

/// Horizontal layout of the rank axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CdLayout {
    pub width: f64,
    pub margin: f64,
}

impl Default for CdLayout {
    fn default() -> Self {
        CdLayout {
            width: 640.0,
            margin: 70.0,
        }
    }
}

impl CdLayout {
    /// Abscissa of a mean rank on an axis spanning `[1, k]`.
    pub fn rank_to_x(&self, rank: f64, k: usize) -> f64 {
        let span = self.width - 2.0 * self.margin;
        if k <= 1 {
            return self.margin + span / 2.0;
        }
        self.margin + (rank - 1.0) / (k as f64 - 1.0) * span
    }
}

/// A run of methods, contiguous in mean-rank order, with no significant
/// pair inside it. Indices refer to `RankMatrix::methods`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Clique {
    pub members: Vec<usize>,
}

/// Method indices sorted by mean rank (best first), ties by name.
pub fn rank_order(ranks: &RankMatrix) -> Vec<usize> {
    let mut order: Vec<usize> = (0..ranks.n_methods()).collect();
    order.sort_by(|&a, &b| {
        ranks.mean_ranks[a]
            .total_cmp(&ranks.mean_ranks[b])
            .then_with(|| ranks.methods[a].cmp(&ranks.methods[b]))
    });
    order
}

/// Maximal contiguous runs (in rank order) of two or more methods that
/// contain no significant pair.
pub fn cliques(ranks: &RankMatrix, pairwise: &[PairwiseResult]) -> Vec<Clique> {
    let order = rank_order(ranks);
    let index_of = |name: &str| ranks.methods.iter().position(|m| m == name);
    let k = order.len();
    let mut significant = vec![vec![false; k]; k];
    for p in pairwise.iter().filter(|p| p.significant) {
        if let (Some(a), Some(b)) = (index_of(&p.method_a), index_of(&p.method_b)) {
            significant[a][b] = true;
            significant[b][a] = true;
        }
    }
    let mut out = Vec::new();
    let mut last_end = None;
    for start in 0..k {
        let mut end = start;
        'grow: while end + 1 < k {
            let candidate = order[end + 1];
            for &m in &order[start..=end] {
                if significant[m][candidate] {
                    break 'grow;
                }
            }
            end += 1;
        }
        if end > start && last_end.is_none_or(|e| end > e) {
            out.push(Clique {
                members: order[start..=end].to_vec(),
            });
            last_end = Some(end);
        }
    }
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Renders the diagram as a standalone SVG 1.1 document.
///
/// Method labels carry `class="method-label"`, clique bars `class="clique"`.
pub fn cd_diagram_svg(ranks: &RankMatrix, pairwise: &[PairwiseResult]) -> String {
    cd_diagram_svg_with(ranks, pairwise, &CdLayout::default(), None)
}

pub fn cd_diagram_svg_with(ranks: &RankMatrix, pairwise: &[PairwiseResult], layout: &CdLayout, title: Option<&str>) -> String {
    let k = ranks.n_methods();
    let order = rank_order(ranks);
    let groups = cliques(ranks, pairwise);
    let n_above = k.div_ceil(2);
    let n_below = k / 2;
    let level_gap = 16.0;
    let title_h = if title.is_some() { 22.0 } else { 0.0 };
    let axis_y = 20.0 + title_h + level_gap * n_above as f64 + 24.0;
    let clique_y0 = axis_y + 12.0;
    let clique_gap = 7.0;
    let below_y0 = clique_y0 + clique_gap * groups.len() as f64 + 18.0;
    let height = below_y0 + level_gap * n_below as f64 + 16.0;

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}" font-family="Helvetica, Arial, sans-serif">"#,
        w = layout.width,
        h = height
    );
    let _ = writeln!(svg, r#"<rect x="0" y="0" width="{:.0}" height="{height:.0}" fill="white"/>"#, layout.width);
    if let Some(t) = title {
        let _ = writeln!(
            svg,
            r#"<text class="title" x="{:.2}" y="18" text-anchor="middle" font-size="14">{}</text>"#,
            layout.width / 2.0,
            escape(t)
        );
    }

    let x0 = layout.rank_to_x(1.0, k);
    let x1 = layout.rank_to_x(k.max(1) as f64, k);
    let _ = writeln!(
        svg,
        r#"<line class="axis" x1="{x0:.2}" y1="{axis_y:.2}" x2="{x1:.2}" y2="{axis_y:.2}" stroke="black" stroke-width="1.5"/>"#
    );
    for r in 1..=k {
        let x = layout.rank_to_x(r as f64, k);
        let _ = writeln!(
            svg,
            r#"<line class="tick" x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{axis_y:.2}" stroke="black"/>"#,
            axis_y - 5.0
        );
        let _ = writeln!(
            svg,
            r#"<text class="tick-label" x="{x:.2}" y="{:.2}" text-anchor="middle" font-size="10">{r}</text>"#,
            axis_y - 8.0
        );
    }

    for (pos, &m) in order.iter().enumerate() {
        let x = layout.rank_to_x(ranks.mean_ranks[m], k);
        let name = escape(&ranks.methods[m]);
        let level = pos / 2;
        let (line_end, text_y) = if pos % 2 == 0 {
            let y = axis_y - 24.0 - level_gap * (n_above - 1 - level) as f64;
            (y + 3.0, y)
        } else {
            let y = below_y0 + level_gap * level as f64;
            (y - 11.0, y)
        };
        let _ = writeln!(
            svg,
            r##"<line class="connector" x1="{x:.2}" y1="{axis_y:.2}" x2="{x:.2}" y2="{line_end:.2}" stroke="#555" stroke-width="0.8"/>"##
        );
        let _ = writeln!(
            svg,
            r#"<text class="method-label" data-method="{name}" x="{x:.2}" y="{text_y:.2}" text-anchor="middle" font-size="12">{name} ({:.2})</text>"#,
            ranks.mean_ranks[m]
        );
    }

    for (c, clique) in groups.iter().enumerate() {
        let xs: Vec<f64> = clique.members.iter().map(|&m| layout.rank_to_x(ranks.mean_ranks[m], k)).collect();
        let lo = xs.iter().copied().fold(f64::INFINITY, f64::min) - 4.0;
        let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 4.0;
        let y = clique_y0 + clique_gap * c as f64;
        let _ = writeln!(
            svg,
            r#"<line class="clique" x1="{lo:.2}" y1="{y:.2}" x2="{hi:.2}" y2="{y:.2}" stroke="black" stroke-width="4" stroke-linecap="round"/>"#
        );
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ranks(names: &[&str], means: &[f64]) -> RankMatrix {
        RankMatrix {
            methods: names.iter().map(|s| s.to_string()).collect(),
            ranks: vec![],
            mean_ranks: means.to_vec(),
        }
    }

    fn pair(a: &str, b: &str, significant: bool) -> PairwiseResult {
        PairwiseResult {
            method_a: a.into(),
            method_b: b.into(),
            statistic: 0.0,
            p_value: if significant { 0.001 } else { 0.5 },
            significant,
        }
    }

    #[test]
    fn significant_pair_has_no_bar() {
        let r = ranks(&["A", "B"], &[1.0, 2.0]);
        assert!(cliques(&r, &[pair("A", "B", true)]).is_empty());
        let svg = cd_diagram_svg(&r, &[pair("A", "B", true)]);
        assert_eq!(svg.matches(r#"class="clique""#).count(), 0);
        assert_eq!(svg.matches(r#"class="method-label""#).count(), 2);
    }

    #[test]
    fn no_significance_gives_one_bar() {
        let r = ranks(&["A", "B", "C"], &[1.5, 2.0, 2.5]);
        let p = [pair("A", "B", false), pair("A", "C", false), pair("B", "C", false)];
        assert_eq!(cliques(&r, &p), vec![Clique { members: vec![0, 1, 2] }]);
    }

    #[test]
    fn overlapping_cliques() {
        // rank order A B C D; A-C, A-D and B-D significant
        let r = ranks(&["A", "B", "C", "D"], &[1.2, 2.1, 2.9, 3.8]);
        let p = [
            pair("A", "B", false),
            pair("A", "C", true),
            pair("A", "D", true),
            pair("B", "C", false),
            pair("B", "D", true),
            pair("C", "D", false),
        ];
        let c = cliques(&r, &p);
        assert_eq!(
            c,
            vec![
                Clique { members: vec![0, 1] },
                Clique { members: vec![1, 2] },
                Clique { members: vec![2, 3] }
            ]
        );
    }

    #[test]
    fn output_is_deterministic_and_escaped() {
        let r = ranks(&["a<b", "c&d"], &[1.0, 2.0]);
        let s1 = cd_diagram_svg(&r, &[]);
        assert_eq!(s1, cd_diagram_svg(&r, &[]));
        assert!(s1.contains("a&lt;b") && s1.contains("c&amp;d"));
    }
}
