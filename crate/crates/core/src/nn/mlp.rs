use rand::Rng;
use serde::{Deserialize, Serialize};

use super::layers::{BatchNormLayer, DenseLayer, DropoutLayer};
use super::loss::softmax;
use super::matrix::Matrix;
use crate::{Error, Result};

/// Number of output logits; the networks here are binary classifiers.
pub const OUTPUTS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    Training,
    Inference,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub input_dim: usize,
    pub width: usize,
    pub depth: usize,
    pub dropout: f64,
    pub bn_epsilon: f64,
    pub bn_momentum: f64,
}

impl MlpConfig {
    pub fn new(input_dim: usize, depth: usize) -> Self {
        MlpConfig {
            input_dim,
            width: 50,
            depth,
            dropout: 0.5,
            bn_epsilon: 1e-5,
            bn_momentum: 0.1,
        }
    }

    pub fn with_width(mut self, width: usize) -> Self {
        self.width = width;
        self
    }

    pub fn with_dropout(mut self, rate: f64) -> Self {
        self.dropout = rate;
        self
    }
}

/// One hidden block: Dense → ReLU → BatchNorm → Dropout.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HiddenBlock {
    pub dense: DenseLayer,
    pub norm: BatchNormLayer,
    pub dropout: DropoutLayer,
    #[serde(skip)]
    activated: Option<Matrix>,
}

impl HiddenBlock {
    pub fn new(dense: DenseLayer, norm: BatchNormLayer, dropout: DropoutLayer) -> Self {
        HiddenBlock {
            dense,
            norm,
            dropout,
            activated: None,
        }
    }

    /// ReLU on/off state of every unit in the last training-mode forward
    /// pass, row-major; `None` once consumed by backward or before any pass.
    pub fn relu_pattern(&self) -> Option<Vec<bool>> {
        self.activated.as_ref().map(|a| a.as_slice().iter().map(|&v| v > 0.0).collect())
    }

    fn forward_eval(&self, x: &Matrix) -> Matrix {
        let mut h = self.dense.forward_eval(x);
        relu_in_place(&mut h);
        self.norm.forward_eval(&h)
    }

    fn forward_train<R: Rng + ?Sized>(&mut self, x: &Matrix, rng: &mut R) -> Matrix {
        let mut h = self.dense.forward_train(x);
        relu_in_place(&mut h);
        let normed = self.norm.forward_train(&h);
        self.activated = Some(h);
        self.dropout.forward_train(&normed, rng)
    }

    fn backward(&mut self, grad: &Matrix) -> Result<Matrix> {
        let g = self.dropout.backward(grad)?;
        let mut g = self.norm.backward(&g)?;
        let activated = self.activated.take().ok_or(Error::NoForwardCache)?;
        for (d, &a) in g.as_mut_slice().iter_mut().zip(activated.as_slice()) {
            if a <= 0.0 {
                *d = 0.0;
            }
        }
        self.dense.backward(&g)
    }
}

fn relu_in_place(m: &mut Matrix) {
    m.as_mut_slice().iter_mut().for_each(|v| *v = v.max(0.0));
}

/// A mutable view of one parameter tensor and its gradient.
pub struct ParamSlot<'a> {
    pub value: &'a mut [f64],
    pub grad: &'a [f64],
}

/// Fully connected binary classifier.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MlpModel {
    input_dim: usize,
    blocks: Vec<HiddenBlock>,
    head: DenseLayer,
    mode: Mode,
}

impl MlpModel {
    pub fn new<R: Rng + ?Sized>(config: &MlpConfig, rng: &mut R) -> Result<Self> {
        if config.input_dim == 0 {
            return Err(Error::invalid("input dimension must be positive"));
        }
        if config.depth > 0 && config.width == 0 {
            return Err(Error::invalid("hidden width must be positive"));
        }
        let mut blocks = Vec::with_capacity(config.depth);
        let mut fan_in = config.input_dim;
        for _ in 0..config.depth {
            blocks.push(HiddenBlock::new(
                DenseLayer::new(fan_in, config.width, rng)?,
                BatchNormLayer::new(config.width, config.bn_epsilon, config.bn_momentum),
                DropoutLayer::new(config.dropout)?,
            ));
            fan_in = config.width;
        }
        let head = DenseLayer::new(fan_in, OUTPUTS, rng)?;
        Self::from_parts(blocks, head)
    }

    /// Assembles a model from explicit layers. A model without hidden blocks
    /// is a plain linear classifier.
    pub fn from_parts(blocks: Vec<HiddenBlock>, head: DenseLayer) -> Result<Self> {
        if head.fan_out() != OUTPUTS {
            return Err(Error::Shape(format!(
                "output layer has {} units, expected {OUTPUTS}",
                head.fan_out()
            )));
        }
        let input_dim = blocks.first().map_or(head.fan_in(), |b| b.dense.fan_in());
        let mut expected = input_dim;
        for (i, b) in blocks.iter().enumerate() {
            if b.dense.fan_in() != expected || b.norm.width() != b.dense.fan_out() {
                return Err(Error::Shape(format!("hidden block {i} does not chain")));
            }
            expected = b.dense.fan_out();
        }
        if head.fan_in() != expected {
            return Err(Error::Shape("output layer does not chain".into()));
        }
        Ok(MlpModel {
            input_dim,
            blocks,
            head,
            mode: Mode::Training,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    /// ReLU on/off states of all blocks from the last training forward pass.
    pub fn relu_pattern(&self) -> Option<Vec<bool>> {
        let mut out = Vec::new();
        for b in &self.blocks {
            out.extend(b.relu_pattern()?);
        }
        Some(out)
    }

    pub fn depth(&self) -> usize {
        self.blocks.len()
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn set_mode(&mut self, mode: Mode) {
        self.mode = mode;
    }

    pub fn blocks(&self) -> &[HiddenBlock] {
        &self.blocks
    }

    pub fn blocks_mut(&mut self) -> &mut [HiddenBlock] {
        &mut self.blocks
    }

    pub fn head(&self) -> &DenseLayer {
        &self.head
    }

    pub fn head_mut(&mut self) -> &mut DenseLayer {
        &mut self.head
    }

    fn check_width(&self, batch: &Matrix) -> Result<()> {
        if batch.cols() != self.input_dim {
            return Err(Error::Shape(format!(
                "batch has {} features, model expects {}",
                batch.cols(),
                self.input_dim
            )));
        }
        Ok(())
    }

    /// Forward pass in the current mode. Training mode caches what
    /// [`MlpModel::backward`] needs and draws dropout masks from `rng`.
    pub fn forward<R: Rng + ?Sized>(&mut self, batch: &Matrix, rng: &mut R) -> Result<Matrix> {
        match self.mode {
            Mode::Inference => self.forward_eval(batch),
            Mode::Training => {
                self.check_width(batch)?;
                if batch.rows() < 2 {
                    return Err(Error::BatchTooSmall(batch.rows()));
                }
                let mut h = batch.clone();
                for block in &mut self.blocks {
                    h = block.forward_train(&h, rng);
                }
                Ok(self.head.forward_train(&h))
            }
        }
    }

    /// Training-mode pass through hidden block `index` alone. Chaining the
    /// blocks and then [`MlpModel::forward_head`] with the same `rng` equals
    /// [`MlpModel::forward`], so a caller can restart from a cached block
    /// input after changing only later parameters.
    pub fn forward_block<R: Rng + ?Sized>(&mut self, index: usize, hidden: &Matrix, rng: &mut R) -> Result<Matrix> {
        if hidden.rows() < 2 {
            return Err(Error::BatchTooSmall(hidden.rows()));
        }
        let depth = self.blocks.len();
        let block = self
            .blocks
            .get_mut(index)
            .ok_or_else(|| Error::invalid(format!("block {index} of {depth}")))?;
        if hidden.cols() != block.dense.weights.rows() {
            return Err(Error::Shape(format!(
                "block {index} expects {} features, got {}",
                block.dense.weights.rows(),
                hidden.cols()
            )));
        }
        Ok(block.forward_train(hidden, rng))
    }

    /// Training-mode pass through the output layer.
    pub fn forward_head(&mut self, hidden: &Matrix) -> Result<Matrix> {
        if hidden.cols() != self.head.weights.rows() {
            return Err(Error::Shape(format!(
                "head expects {} features, got {}",
                self.head.weights.rows(),
                hidden.cols()
            )));
        }
        Ok(self.head.forward_train(hidden))
    }

    /// Inference-mode logits; a pure function of the parameters and input.
    pub fn forward_eval(&self, batch: &Matrix) -> Result<Matrix> {
        self.check_width(batch)?;
        let mut h = batch.clone();
        for block in &self.blocks {
            h = block.forward_eval(&h);
        }
        Ok(self.head.forward_eval(&h))
    }

    /// Backpropagates `d loss / d logits` through the cached forward pass and
    /// overwrites every parameter gradient.
    pub fn backward(&mut self, loss_grad: &Matrix) -> Result<()> {
        let mut g = self.head.backward(loss_grad)?;
        for block in self.blocks.iter_mut().rev() {
            g = block.backward(&g)?;
        }
        Ok(())
    }

    /// Minority-class (label 1) probabilities, computed in inference mode.
    pub fn predict_proba(&self, batch: &Matrix) -> Result<Vec<f64>> {
        let probs = softmax(&self.forward_eval(batch)?);
        Ok(probs.row_iter().map(|r| r[1]).collect())
    }

    pub fn param_slots(&mut self) -> Vec<ParamSlot<'_>> {
        let mut slots = Vec::with_capacity(4 * self.blocks.len() + 2);
        for b in &mut self.blocks {
            slots.push(ParamSlot {
                value: b.dense.weights.as_mut_slice(),
                grad: b.dense.weight_grad.as_slice(),
            });
            slots.push(ParamSlot {
                value: &mut b.dense.bias,
                grad: &b.dense.bias_grad,
            });
            slots.push(ParamSlot {
                value: &mut b.norm.scale,
                grad: &b.norm.scale_grad,
            });
            slots.push(ParamSlot {
                value: &mut b.norm.shift,
                grad: &b.norm.shift_grad,
            });
        }
        slots.push(ParamSlot {
            value: self.head.weights.as_mut_slice(),
            grad: self.head.weight_grad.as_slice(),
        });
        slots.push(ParamSlot {
            value: &mut self.head.bias,
            grad: &self.head.bias_grad,
        });
        slots
    }

    pub fn param_count(&mut self) -> usize {
        self.param_slots().iter().map(|s| s.value.len()).sum()
    }

    pub fn flat_params(&mut self) -> Vec<f64> {
        self.param_slots().iter().flat_map(|s| s.value.iter().copied()).collect()
    }

    pub fn flat_grads(&mut self) -> Vec<f64> {
        self.param_slots().iter().flat_map(|s| s.grad.iter().copied()).collect()
    }

    pub fn set_flat_params(&mut self, values: &[f64]) -> Result<()> {
        let mut slots = self.param_slots();
        let total: usize = slots.iter().map(|s| s.value.len()).sum();
        if total != values.len() {
            return Err(Error::Shape(format!("{} values for {total} parameters", values.len())));
        }
        let mut offset = 0;
        for s in &mut slots {
            let n = s.value.len();
            s.value.copy_from_slice(&values[offset..offset + n]);
            offset += n;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn identity_linear_model_passes_input_through() {
        let head = DenseLayer::from_parts(Matrix::identity(2), vec![0.0; 2]);
        let model = MlpModel::from_parts(vec![], head).unwrap();
        let x = Matrix::from_rows(&[[0.25, -3.0], [7.0, 0.0]]).unwrap();
        assert_eq!(model.forward_eval(&x).unwrap(), x);
    }

    #[test]
    fn blockwise_forward_matches_forward() {
        let mut model = MlpModel::new(&MlpConfig::new(3, 3).with_width(6), &mut seeded(2)).unwrap();
        model.set_mode(Mode::Training);
        let x = Matrix::from_rows(&[[0.1, 0.2, 0.3], [-1.0, 0.5, 2.0], [0.0, 0.0, 1.0], [2.0, -1.0, 0.5]]).unwrap();
        let whole = model.forward(&x, &mut seeded(9)).unwrap();
        let mut rng = seeded(9);
        let mut h = x.clone();
        for i in 0..3 {
            h = model.forward_block(i, &h, &mut rng).unwrap();
        }
        assert_eq!(model.forward_head(&h).unwrap(), whole);
        assert!(model.forward_block(3, &h, &mut rng).is_err());
        assert!(model.forward_block(0, &h, &mut rng).is_err());
    }

    #[test]
    fn inference_is_bit_identical_across_calls() {
        let mut rng = seeded(4);
        let mut model = MlpModel::new(&MlpConfig::new(3, 3), &mut rng).unwrap();
        let x = Matrix::from_rows(&[[0.1, 0.2, 0.3], [-1.0, 0.5, 2.0], [0.0, 0.0, 1.0]]).unwrap();
        // perturb running statistics through a training pass first
        model.forward(&x, &mut rng).unwrap();
        model.set_mode(Mode::Inference);
        let a = model.forward(&x, &mut rng).unwrap();
        let b = model.forward(&x, &mut seeded(99)).unwrap();
        assert_eq!(a.as_slice(), b.as_slice());
        assert!(a.is_finite());
    }

    #[test]
    fn width_mismatch_and_single_row_batches_rejected() {
        let mut rng = seeded(0);
        let mut model = MlpModel::new(&MlpConfig::new(3, 2), &mut rng).unwrap();
        let wrong = Matrix::zeros(4, 2);
        assert!(matches!(model.forward(&wrong, &mut rng), Err(Error::Shape(_))));
        assert!(model.predict_proba(&wrong).is_err());
        let single = Matrix::zeros(1, 3);
        assert!(matches!(model.forward(&single, &mut rng), Err(Error::BatchTooSmall(1))));
        model.set_mode(Mode::Inference);
        assert!(model.forward(&single, &mut rng).is_ok());
    }

    #[test]
    fn backward_requires_forward() {
        let mut rng = seeded(0);
        let mut model = MlpModel::new(&MlpConfig::new(3, 2), &mut rng).unwrap();
        assert!(matches!(model.backward(&Matrix::zeros(2, 2)), Err(Error::NoForwardCache)));
    }

    #[test]
    fn zero_loss_gradient_gives_zero_parameter_gradients() {
        let mut rng = seeded(8);
        let mut model = MlpModel::new(&MlpConfig::new(4, 3), &mut rng).unwrap();
        let x = Matrix::from_vec(6, 4, (0..24).map(|v| (v as f64 * 0.37).sin()).collect()).unwrap();
        model.forward(&x, &mut rng).unwrap();
        model.backward(&Matrix::zeros(6, 2)).unwrap();
        assert!(model.flat_grads().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn predict_proba_saturation_and_symmetry() {
        let head = DenseLayer::from_parts(Matrix::identity(2), vec![0.0; 2]);
        let model = MlpModel::from_parts(vec![], head).unwrap();
        let x = Matrix::from_rows(&[[0.0, 0.0], [-50.0, 50.0], [50.0, -50.0]]).unwrap();
        let p = model.predict_proba(&x).unwrap();
        assert_eq!(p[0], 0.5);
        assert!(p[1] > 1.0 - 1e-12);
        assert!(p[2] < 1e-12);
    }

    #[test]
    fn flat_params_round_trip() {
        let mut rng = seeded(2);
        let mut model = MlpModel::new(&MlpConfig::new(3, 2).with_width(5), &mut rng).unwrap();
        let p = model.flat_params();
        // 2 blocks: (3*5+5+5+5) + (5*5+5+5+5), head 5*2+2
        assert_eq!(p.len(), 30 + 40 + 12);
        let shifted: Vec<f64> = p.iter().map(|v| v + 1.0).collect();
        model.set_flat_params(&shifted).unwrap();
        assert_eq!(model.flat_params(), shifted);
        assert!(model.set_flat_params(&p[1..]).is_err());
    }
}
