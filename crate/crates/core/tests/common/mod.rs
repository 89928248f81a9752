#![allow(dead_code)]

use imbench::nn::{cross_entropy, cross_entropy_grad, MlpConfig, MlpModel, Mode};
use imbench::rng::seeded;
use imbench::Matrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Denominator floor for the relative error, so that gradients that are
/// zero up to rounding compare absolutely.
pub const REL_ERR_FLOOR: f64 = 1e-6;
pub const FD_STEP: f64 = 1e-4;

pub fn random_matrix<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> Matrix {
    let values = (0..rows * cols).map(|_| StandardNormal.sample(rng)).collect();
    Matrix::from_vec(rows, cols, values).unwrap()
}

/// Random labels with both classes present.
pub fn random_labels<R: Rng>(n: usize, rng: &mut R) -> Vec<u8> {
    let mut y: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
    y[0] = 0;
    y[1] = 1;
    y
}

/// A freshly initialized model in training mode.
pub fn fresh_model<R: Rng>(input_dim: usize, depth: usize, width: usize, dropout: f64, rng: &mut R) -> MlpModel {
    let mut model = MlpModel::new(
        &MlpConfig::new(input_dim, depth).with_width(width).with_dropout(dropout),
        rng,
    )
    .unwrap();
    model.set_mode(Mode::Training);
    model
}

/// A model with randomized batch-norm and bias parameters so that every
/// gradient is exercised away from its initial value.
pub fn random_model<R: Rng>(input_dim: usize, depth: usize, width: usize, dropout: f64, rng: &mut R) -> MlpModel {
    let mut model = MlpModel::new(
        &MlpConfig::new(input_dim, depth).with_width(width).with_dropout(dropout),
        rng,
    )
    .unwrap();
    for block in model.blocks_mut() {
        block.dense.bias.iter_mut().for_each(|b| *b = rng.random_range(-0.2..0.2));
        block.norm.scale.iter_mut().for_each(|s| *s = rng.random_range(0.5..1.5));
        block.norm.shift.iter_mut().for_each(|s| *s = rng.random_range(-0.5..0.5));
    }
    model.head_mut().bias.iter_mut().for_each(|b| *b = rng.random_range(-0.2..0.2));
    model.set_mode(Mode::Training);
    model
}

/// Training-mode mean cross-entropy with the dropout masks pinned by `mask_seed`.
pub fn batch_loss(model: &mut MlpModel, x: &Matrix, y: &[u8], mask_seed: u64) -> f64 {
    let logits = model.forward(x, &mut seeded(mask_seed)).unwrap();
    let l = cross_entropy(&logits, y, None).unwrap();
    l.iter().sum::<f64>() / l.len() as f64
}

pub fn analytic_grads(model: &mut MlpModel, x: &Matrix, y: &[u8], mask_seed: u64) -> Vec<f64> {
    let logits = model.forward(x, &mut seeded(mask_seed)).unwrap();
    let coeffs = vec![1.0 / y.len() as f64; y.len()];
    model.backward(&cross_entropy_grad(&logits, y, &coeffs).unwrap()).unwrap();
    model.flat_grads()
}

pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(REL_ERR_FLOOR)
}

#[derive(Debug, Clone, Copy)]
pub struct GradCheck {
    pub checked: usize,
    pub passed: usize,
    /// Failures where the ReLU on/off pattern at `θ ± h` differs from `θ`.
    pub kink_crossings: usize,
    pub worst: f64,
}

impl GradCheck {
    pub fn pass_rate(&self) -> f64 {
        self.passed as f64 / self.checked as f64
    }
}

/// Block inputs and mask-generator states recorded during one training pass,
/// so a loss can be recomputed from the first block a parameter touches.
struct Trace<G> {
    inputs: Vec<Matrix>,
    rngs: Vec<G>,
    /// Flat-parameter offset where each hidden block, then the head, begins.
    starts: Vec<usize>,
}

fn trace(model: &mut MlpModel, x: &Matrix, mask_seed: u64) -> Trace<impl Rng + Clone> {
    let mut rng = seeded(mask_seed);
    let mut h = x.clone();
    let mut t = Trace {
        inputs: Vec::new(),
        rngs: Vec::new(),
        starts: Vec::new(),
    };
    let mut offset = 0;
    for k in 0..model.depth() {
        t.inputs.push(h.clone());
        t.rngs.push(rng.clone());
        t.starts.push(offset);
        let b = &model.blocks()[k];
        offset += b.dense.weights.as_slice().len() + b.dense.bias.len() + b.norm.scale.len() + b.norm.shift.len();
        h = model.forward_block(k, &h, &mut rng).unwrap();
    }
    t.inputs.push(h);
    t.rngs.push(rng);
    t.starts.push(offset);
    t
}

fn loss_from<G: Rng + Clone>(model: &mut MlpModel, t: &Trace<G>, param: usize, y: &[u8]) -> f64 {
    let first = t.starts.iter().rposition(|&s| s <= param).unwrap();
    let mut rng = t.rngs[first].clone();
    let mut h = t.inputs[first].clone();
    for k in first..model.depth() {
        h = model.forward_block(k, &h, &mut rng).unwrap();
    }
    let l = cross_entropy(&model.forward_head(&h).unwrap(), y, None).unwrap();
    l.iter().sum::<f64>() / l.len() as f64
}

/// Central differences against the analytic gradient for every parameter.
pub fn gradient_check(model: &mut MlpModel, x: &Matrix, y: &[u8], mask_seed: u64, tol: f64) -> GradCheck {
    let grads = analytic_grads(model, x, y, mask_seed);
    let t = trace(model, x, mask_seed);
    let base_pattern = model.relu_pattern().unwrap_or_default();
    let mut params = model.flat_params();
    let full = batch_loss(model, x, y, mask_seed);
    for p in [0, params.len() - 1] {
        assert_eq!(loss_from(model, &t, p, y).to_bits(), full.to_bits(), "partial forward differs from forward");
    }
    let mut out = GradCheck {
        checked: 0,
        passed: 0,
        kink_crossings: 0,
        worst: 0.0,
    };
    for i in 0..params.len() {
        let orig = params[i];
        params[i] = orig + FD_STEP;
        model.set_flat_params(&params).unwrap();
        let up = loss_from(model, &t, i, y);
        params[i] = orig - FD_STEP;
        model.set_flat_params(&params).unwrap();
        let down = loss_from(model, &t, i, y);
        params[i] = orig;
        let numeric = (up - down) / (2.0 * FD_STEP);
        let err = relative_error(grads[i], numeric);
        out.checked += 1;
        if err < tol {
            out.passed += 1;
        } else {
            let crosses = [FD_STEP, -FD_STEP].iter().any(|h| {
                params[i] = orig + h;
                model.set_flat_params(&params).unwrap();
                model.forward(x, &mut seeded(mask_seed)).unwrap();
                model.relu_pattern().unwrap_or_default() != base_pattern
            });
            params[i] = orig;
            if crosses {
                out.kink_crossings += 1;
            }
        }
        out.worst = out.worst.max(err);
    }
    model.set_flat_params(&params).unwrap();
    out
}
