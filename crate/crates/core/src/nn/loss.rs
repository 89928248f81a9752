use super::matrix::Matrix;
use crate::{Error, Result};

/// Row-wise softmax with the max-subtraction stabilization.
pub fn softmax(logits: &Matrix) -> Matrix {
    let mut out = logits.clone();
    for r in 0..out.rows() {
        let row = out.row_mut(r);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        row.iter_mut().for_each(|v| *v /= sum);
    }
    out
}

fn log_softmax_at(row: &[f64], class: usize) -> f64 {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
    row[class] - lse
}

pub(crate) fn check_labels(labels: &[u8], classes: usize) -> Result<()> {
    match labels.iter().find(|&&y| y as usize >= classes) {
        Some(&bad) => Err(Error::InvalidLabel(bad)),
        None => Ok(()),
    }
}

/// Per-sample softmax cross-entropy `-w_i · log softmax(z_i)[y_i]`.
pub fn cross_entropy(logits: &Matrix, labels: &[u8], sample_weights: Option<&[f64]>) -> Result<Vec<f64>> {
    if logits.rows() != labels.len() {
        return Err(Error::Shape(format!(
            "{} logit rows for {} labels",
            logits.rows(),
            labels.len()
        )));
    }
    check_labels(labels, logits.cols())?;
    if let Some(w) = sample_weights {
        if w.len() != labels.len() {
            return Err(Error::Shape(format!("{} weights for {} labels", w.len(), labels.len())));
        }
        if w.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::invalid("sample weights must be positive"));
        }
    }
    Ok(labels
        .iter()
        .enumerate()
        .map(|(i, &y)| {
            let w = sample_weights.map_or(1.0, |w| w[i]);
            -w * log_softmax_at(logits.row(i), y as usize)
        })
        .collect())
}

/// Gradient of `Σ_i coeff_i · CE(z_i, y_i)` with respect to the logits.
///
/// Rows with a zero coefficient contribute nothing, which is how a loss
/// restricted to a subset of the batch is expressed.
pub fn cross_entropy_grad(logits: &Matrix, labels: &[u8], coeffs: &[f64]) -> Result<Matrix> {
    if logits.rows() != labels.len() || coeffs.len() != labels.len() {
        return Err(Error::Shape(format!(
            "{} logit rows, {} labels, {} coefficients",
            logits.rows(),
            labels.len(),
            coeffs.len()
        )));
    }
    check_labels(labels, logits.cols())?;
    let mut grad = softmax(logits);
    for (r, (&y, &c)) in labels.iter().zip(coeffs).enumerate() {
        let row = grad.row_mut(r);
        row[y as usize] -= 1.0;
        row.iter_mut().for_each(|v| *v *= c);
    }
    Ok(grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn one(z: [f64; 2], y: u8) -> f64 {
        cross_entropy(&Matrix::from_rows(&[z]).unwrap(), &[y], None).unwrap()[0]
    }

    #[test]
    fn symmetric_logits_give_ln2() {
        assert_abs_diff_eq!(one([0.0, 0.0], 0), std::f64::consts::LN_2, epsilon = 1e-12);
        assert_abs_diff_eq!(one([0.0, 0.0], 1), std::f64::consts::LN_2, epsilon = 1e-12);
    }

    #[test]
    fn closed_form_case() {
        // log(1 + e^-2)
        assert_abs_diff_eq!(one([2.0, 0.0], 0), (1.0 + (-2.0f64).exp()).ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(one([2.0, 0.0], 0), 0.126928, epsilon = 1e-6);
    }

    #[test]
    fn confident_logits_do_not_overflow() {
        let l = one([1000.0, 0.0], 0);
        assert!(l.is_finite() && l.abs() < 1e-300);
        let l = one([1000.0, 0.0], 1);
        assert_abs_diff_eq!(l, 1000.0, epsilon = 1e-9);
    }

    #[test]
    fn weights_scale_losses() {
        let z = Matrix::from_rows(&[[0.3, -0.2], [1.0, 2.0]]).unwrap();
        let plain = cross_entropy(&z, &[0, 1], None).unwrap();
        let weighted = cross_entropy(&z, &[0, 1], Some(&[2.0, 0.5])).unwrap();
        assert_abs_diff_eq!(weighted[0], 2.0 * plain[0], epsilon = 1e-15);
        assert_abs_diff_eq!(weighted[1], 0.5 * plain[1], epsilon = 1e-15);
        assert!(cross_entropy(&z, &[0, 1], Some(&[1.0, 0.0])).is_err());
    }

    #[test]
    fn rejects_non_binary_labels() {
        let z = Matrix::from_rows(&[[0.0, 0.0]]).unwrap();
        assert!(matches!(cross_entropy(&z, &[2], None), Err(Error::InvalidLabel(2))));
    }

    #[test]
    fn softmax_rows_sum_to_one() {
        let z = Matrix::from_rows(&[[3.0, -7.5], [1e3, 1e3 - 1.0], [-40.0, 40.0]]).unwrap();
        let p = softmax(&z);
        for row in p.row_iter() {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn grad_matches_finite_differences() {
        let z = Matrix::from_rows(&[[0.4, -1.3], [2.0, 0.1]]).unwrap();
        let labels = [1u8, 0];
        let coeffs = [0.7, 1.9];
        let g = cross_entropy_grad(&z, &labels, &coeffs).unwrap();
        let h = 1e-6;
        for r in 0..2 {
            for c in 0..2 {
                let mut zp = z.clone();
                zp.set(r, c, z.get(r, c) + h);
                let mut zm = z.clone();
                zm.set(r, c, z.get(r, c) - h);
                let f = |m: &Matrix| {
                    cross_entropy(m, &labels, Some(&coeffs)).unwrap().iter().sum::<f64>()
                };
                let fd = (f(&zp) - f(&zm)) / (2.0 * h);
                assert_abs_diff_eq!(g.get(r, c), fd, epsilon = 1e-8);
            }
        }
    }
}
