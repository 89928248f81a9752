use serde::{Deserialize, Serialize};

use super::mlp::{MlpModel, ParamSlot};
use crate::{Error, Result};

/// Adam optimizer state with bias-corrected moment estimates.
///
/// Moment buffers are allocated lazily on the first update, sized to the
/// parameter tensors they track, and must keep the same layout afterwards.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdamState {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    timestep: u64,
    first_moment: Vec<Vec<f64>>,
    second_moment: Vec<Vec<f64>>,
}

impl Default for AdamState {
    fn default() -> Self {
        AdamState::new(0.001)
    }
}

impl AdamState {
    pub fn new(learning_rate: f64) -> Self {
        AdamState {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            timestep: 0,
            first_moment: Vec::new(),
            second_moment: Vec::new(),
        }
    }

    pub fn timestep(&self) -> u64 {
        self.timestep
    }

    pub fn first_moment(&self) -> &[Vec<f64>] {
        &self.first_moment
    }

    pub fn second_moment(&self) -> &[Vec<f64>] {
        &self.second_moment
    }

    /// One Adam update over a set of parameter tensors.
    pub fn update(&mut self, slots: &mut [ParamSlot<'_>]) -> Result<()> {
        for (i, s) in slots.iter().enumerate() {
            if s.value.len() != s.grad.len() {
                return Err(Error::Shape(format!(
                    "parameter tensor {i} has {} values but {} gradients",
                    s.value.len(),
                    s.grad.len()
                )));
            }
        }
        if self.first_moment.is_empty() {
            self.first_moment = slots.iter().map(|s| vec![0.0; s.value.len()]).collect();
            self.second_moment = self.first_moment.clone();
        } else if self.first_moment.len() != slots.len()
            || self.first_moment.iter().zip(slots.iter()).any(|(m, s)| m.len() != s.value.len())
        {
            return Err(Error::Shape("parameter layout changed between Adam updates".into()));
        }

        self.timestep += 1;
        let t = self.timestep as i32;
        let correction1 = 1.0 - self.beta1.powi(t);
        let correction2 = 1.0 - self.beta2.powi(t);
        for ((slot, m), v) in slots
            .iter_mut()
            .zip(&mut self.first_moment)
            .zip(&mut self.second_moment)
        {
            for (((p, &g), m), v) in slot.value.iter_mut().zip(slot.grad).zip(m.iter_mut()).zip(v.iter_mut()) {
                *m = self.beta1 * *m + (1.0 - self.beta1) * g;
                *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
                let m_hat = *m / correction1;
                let v_hat = *v / correction2;
                *p -= self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
            }
        }
        Ok(())
    }

    /// Applies one update to every parameter of `model` using its stored gradients.
    pub fn step(&mut self, model: &mut MlpModel) -> Result<()> {
        self.update(&mut model.param_slots())
    }
}
