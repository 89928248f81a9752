/// Holm step-down: with p-values sorted ascending, reject the `i`-th
/// (0-based) while `p_(i) <= alpha / (m - i)`, stopping at the first
/// failure. Flags are returned in the input order.
pub fn holm_correction(p_values: &[f64], alpha: f64) -> Vec<bool> {
    let m = p_values.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p_values[a].total_cmp(&p_values[b]).then(a.cmp(&b)));
    let mut rejected = vec![false; m];
    for (i, &idx) in order.iter().enumerate() {
        if p_values[idx] <= alpha / (m - i) as f64 {
            rejected[idx] = true;
        } else {
            break;
        }
    }
    rejected
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_down_trace() {
        // 0.010 <= 0.05/3, then 0.030 > 0.05/2 stops
        assert_eq!(holm_correction(&[0.010, 0.040, 0.030], 0.05), vec![true, false, false]);
    }

    #[test]
    fn nothing_rejected_above_alpha() {
        assert_eq!(holm_correction(&[0.2, 0.06, 0.9], 0.05), vec![false; 3]);
    }

    #[test]
    fn single_hypothesis_is_plain_test() {
        assert_eq!(holm_correction(&[0.05], 0.05), vec![true]);
        assert_eq!(holm_correction(&[0.0500001], 0.05), vec![false]);
        assert!(holm_correction(&[], 0.05).is_empty());
    }
}
