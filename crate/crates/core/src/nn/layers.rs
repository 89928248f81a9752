use rand::Rng;
use serde::{Deserialize, Serialize};

use super::matrix::{a_bt, add_at_b, affine, Matrix};
use crate::{Error, Result};

/// Glorot/Xavier uniform initialization: entries drawn i.i.d. from
/// `U[-L, L]` with `L = sqrt(6 / (fan_in + fan_out))`.
pub fn xavier_init<R: Rng + ?Sized>(fan_in: usize, fan_out: usize, rng: &mut R) -> Result<Matrix> {
    if fan_in == 0 || fan_out == 0 {
        return Err(Error::invalid(format!(
            "xavier init needs non-zero fan dimensions, got {fan_in}x{fan_out}"
        )));
    }
    let limit = xavier_limit(fan_in, fan_out);
    let values = (0..fan_in * fan_out)
        .map(|_| rng.random_range(-limit..=limit))
        .collect();
    Matrix::from_vec(fan_in, fan_out, values)
}

pub fn xavier_limit(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

/// Fully connected layer `y = x·W + b` with `W` stored as `fan_in × fan_out`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DenseLayer {
    pub weights: Matrix,
    pub bias: Vec<f64>,
    pub weight_grad: Matrix,
    pub bias_grad: Vec<f64>,
    #[serde(skip)]
    input: Option<Matrix>,
}

impl DenseLayer {
    pub fn new<R: Rng + ?Sized>(fan_in: usize, fan_out: usize, rng: &mut R) -> Result<Self> {
        Ok(Self::from_parts(xavier_init(fan_in, fan_out, rng)?, vec![0.0; fan_out]))
    }

    pub fn from_parts(weights: Matrix, bias: Vec<f64>) -> Self {
        assert_eq!(weights.cols(), bias.len(), "bias length must equal fan_out");
        let weight_grad = Matrix::zeros(weights.rows(), weights.cols());
        let bias_grad = vec![0.0; bias.len()];
        DenseLayer {
            weights,
            bias,
            weight_grad,
            bias_grad,
            input: None,
        }
    }

    pub fn fan_in(&self) -> usize {
        self.weights.rows()
    }

    pub fn fan_out(&self) -> usize {
        self.weights.cols()
    }

    pub fn forward_eval(&self, x: &Matrix) -> Matrix {
        affine(x, &self.weights, &self.bias)
    }

    pub(crate) fn forward_train(&mut self, x: &Matrix) -> Matrix {
        let out = affine(x, &self.weights, &self.bias);
        self.input = Some(x.clone());
        out
    }

    /// Writes parameter gradients and returns the gradient w.r.t. the input.
    pub(crate) fn backward(&mut self, grad_out: &Matrix) -> Result<Matrix> {
        let input = self.input.take().ok_or(Error::NoForwardCache)?;
        self.weight_grad.fill(0.0);
        add_at_b(&input, grad_out, &mut self.weight_grad);
        self.bias_grad.iter_mut().for_each(|g| *g = 0.0);
        for row in grad_out.row_iter() {
            for (g, &d) in self.bias_grad.iter_mut().zip(row) {
                *g += d;
            }
        }
        Ok(a_bt(grad_out, &self.weights))
    }
}

/// Per-feature batch normalization with learned scale and shift.
///
/// Training mode normalizes with the biased batch variance and updates the
/// running statistics (unbiased variance) with exponential smoothing.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BatchNormLayer {
    pub scale: Vec<f64>,
    pub shift: Vec<f64>,
    pub scale_grad: Vec<f64>,
    pub shift_grad: Vec<f64>,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
    pub epsilon: f64,
    pub momentum: f64,
    #[serde(skip)]
    cache: Option<BnCache>,
}

#[derive(Debug, Clone)]
struct BnCache {
    normalized: Matrix,
    inv_std: Vec<f64>,
}

impl BatchNormLayer {
    pub fn new(width: usize, epsilon: f64, momentum: f64) -> Self {
        BatchNormLayer {
            scale: vec![1.0; width],
            shift: vec![0.0; width],
            scale_grad: vec![0.0; width],
            shift_grad: vec![0.0; width],
            running_mean: vec![0.0; width],
            running_var: vec![1.0; width],
            epsilon,
            momentum,
            cache: None,
        }
    }

    pub fn width(&self) -> usize {
        self.scale.len()
    }

    pub fn forward_eval(&self, x: &Matrix) -> Matrix {
        let mut out = x.clone();
        let inv_std: Vec<f64> = self
            .running_var
            .iter()
            .map(|v| 1.0 / (v + self.epsilon).sqrt())
            .collect();
        for r in 0..out.rows() {
            for (j, v) in out.row_mut(r).iter_mut().enumerate() {
                *v = self.scale[j] * (*v - self.running_mean[j]) * inv_std[j] + self.shift[j];
            }
        }
        out
    }

    pub(crate) fn forward_train(&mut self, x: &Matrix) -> Matrix {
        let (n, d) = x.shape();
        let nf = n as f64;
        let mut mean = vec![0.0; d];
        for row in x.row_iter() {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= nf);
        let mut var = vec![0.0; d];
        for row in x.row_iter() {
            for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        var.iter_mut().for_each(|s| *s /= nf);

        let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + self.epsilon).sqrt()).collect();
        let mut normalized = x.clone();
        let mut out = x.clone();
        for r in 0..n {
            let norm_row = normalized.row_mut(r);
            for j in 0..d {
                norm_row[j] = (norm_row[j] - mean[j]) * inv_std[j];
            }
            let out_row = out.row_mut(r);
            for j in 0..d {
                out_row[j] = self.scale[j] * normalized.get(r, j) + self.shift[j];
            }
        }

        let unbias = if n > 1 { nf / (nf - 1.0) } else { 1.0 };
        for j in 0..d {
            self.running_mean[j] = (1.0 - self.momentum) * self.running_mean[j] + self.momentum * mean[j];
            self.running_var[j] =
                (1.0 - self.momentum) * self.running_var[j] + self.momentum * var[j] * unbias;
        }
        self.cache = Some(BnCache { normalized, inv_std });
        out
    }

    /// Full backward through the batch statistics.
    pub(crate) fn backward(&mut self, grad_out: &Matrix) -> Result<Matrix> {
        let BnCache { normalized, inv_std } = self.cache.take().ok_or(Error::NoForwardCache)?;
        let (n, d) = grad_out.shape();
        let nf = n as f64;
        self.scale_grad.iter_mut().for_each(|g| *g = 0.0);
        self.shift_grad.iter_mut().for_each(|g| *g = 0.0);
        for r in 0..n {
            let g = grad_out.row(r);
            let xh = normalized.row(r);
            for j in 0..d {
                self.shift_grad[j] += g[j];
                self.scale_grad[j] += g[j] * xh[j];
            }
        }
        // dx = scale * inv_std / n * (n*dy - sum(dy) - xhat * sum(dy*xhat))
        let mut grad_in = Matrix::zeros(n, d);
        for r in 0..n {
            let g = grad_out.row(r);
            let xh = normalized.row(r);
            let out = grad_in.row_mut(r);
            for j in 0..d {
                out[j] = self.scale[j] * inv_std[j] / nf
                    * (nf * g[j] - self.shift_grad[j] - xh[j] * self.scale_grad[j]);
            }
        }
        Ok(grad_in)
    }
}

/// Inverted dropout: kept units are scaled by `1 / (1 - rate)` in training so
/// inference is the identity.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DropoutLayer {
    pub rate: f64,
    #[serde(skip)]
    last_mask: Option<Vec<f64>>,
}

impl DropoutLayer {
    pub fn new(rate: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::invalid(format!("dropout rate {rate} outside [0, 1)")));
        }
        Ok(DropoutLayer {
            rate,
            last_mask: None,
        })
    }

    /// Multipliers applied by the last training forward pass (0 or `1/(1-rate)`).
    pub fn last_mask(&self) -> Option<&[f64]> {
        self.last_mask.as_deref()
    }

    pub(crate) fn forward_train<R: Rng + ?Sized>(&mut self, x: &Matrix, rng: &mut R) -> Matrix {
        let mut out = x.clone();
        if self.rate == 0.0 {
            self.last_mask = Some(vec![1.0; x.as_slice().len()]);
            return out;
        }
        let keep_scale = 1.0 / (1.0 - self.rate);
        let mask: Vec<f64> = (0..x.as_slice().len())
            .map(|_| if rng.random::<f64>() < self.rate { 0.0 } else { keep_scale })
            .collect();
        for (v, m) in out.as_mut_slice().iter_mut().zip(&mask) {
            *v *= m;
        }
        self.last_mask = Some(mask);
        out
    }

    pub(crate) fn backward(&mut self, grad_out: &Matrix) -> Result<Matrix> {
        let mask = self.last_mask.take().ok_or(Error::NoForwardCache)?;
        let mut g = grad_out.clone();
        for (v, m) in g.as_mut_slice().iter_mut().zip(&mask) {
            *v *= m;
        }
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn xavier_entries_within_bound() {
        let mut rng = seeded(3);
        let w = xavier_init(50, 50, &mut rng).unwrap();
        let limit = (6.0f64 / 100.0).sqrt();
        assert!((limit - 0.24495).abs() < 1e-5);
        assert!(w.as_slice().iter().all(|v| v.abs() <= limit));
    }

    #[test]
    fn xavier_is_deterministic_given_seed() {
        let a = xavier_init(1, 2, &mut seeded(11)).unwrap();
        let b = xavier_init(1, 2, &mut seeded(11)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn xavier_sample_mean_is_near_zero() {
        // 10^6 draws; the mean of U[-L, L] is 0 with sd L/sqrt(3e6)
        let w = xavier_init(1000, 1000, &mut seeded(5)).unwrap();
        let mean = w.as_slice().iter().sum::<f64>() / w.as_slice().len() as f64;
        assert!(mean.abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn xavier_rejects_zero_fan() {
        assert!(xavier_init(0, 3, &mut seeded(0)).is_err());
        assert!(xavier_init(3, 0, &mut seeded(0)).is_err());
    }

    #[test]
    fn fresh_dense_bias_is_zero() {
        let layer = DenseLayer::new(4, 3, &mut seeded(1)).unwrap();
        assert!(layer.bias.iter().all(|&b| b == 0.0));
        assert_eq!(layer.weight_grad.shape(), layer.weights.shape());
        assert_eq!(layer.bias_grad.len(), layer.bias.len());
    }

    #[test]
    fn dropout_rate_validated() {
        assert!(DropoutLayer::new(1.0).is_err());
        assert!(DropoutLayer::new(-0.1).is_err());
        assert!(DropoutLayer::new(0.0).is_ok());
    }

    #[test]
    fn batchnorm_eval_is_row_permutation_covariant() {
        let mut bn = BatchNormLayer::new(2, 1e-5, 0.1);
        let x = Matrix::from_rows(&[[1.0, 2.0], [3.0, -1.0], [0.5, 0.0], [2.0, 2.0]]).unwrap();
        bn.forward_train(&x);
        let y = bn.forward_eval(&x);
        let perm = [2, 0, 3, 1];
        let yp = bn.forward_eval(&x.select_rows(&perm));
        for (i, &p) in perm.iter().enumerate() {
            assert_eq!(yp.row(i), y.row(p));
        }
        assert!(bn.running_var.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn backward_without_forward_fails() {
        let mut d = DenseLayer::new(2, 2, &mut seeded(0)).unwrap();
        assert!(matches!(d.backward(&Matrix::zeros(1, 2)), Err(Error::NoForwardCache)));
        let mut bn = BatchNormLayer::new(2, 1e-5, 0.1);
        assert!(bn.backward(&Matrix::zeros(2, 2)).is_err());
        let mut dr = DropoutLayer::new(0.5).unwrap();
        assert!(dr.backward(&Matrix::zeros(2, 2)).is_err());
    }
}
