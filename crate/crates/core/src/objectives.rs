//! Training objectives and the epoch loop.
//!
//! ERM minimizes the (optionally class-weighted) batch-mean cross-entropy.
//! Group DRO treats each class as a group: it forms the per-class mean loss
//! within the batch, adds the constant adjustment `1/sqrt(N_c)` computed from
//! full training-set counts, and takes the gradient step on the worst class
//! only.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::nn::{cross_entropy, cross_entropy_grad, AdamState, Matrix, MlpModel, Mode};
use crate::rng::{seeded, SeededRng};
use crate::{Error, Result};

/// Per-class sample counts for a binary problem (class 1 is the minority).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub negative: usize,
    pub positive: usize,
}

impl ClassCounts {
    pub fn new(negative: usize, positive: usize) -> Self {
        ClassCounts { negative, positive }
    }

    pub fn from_labels(labels: &[u8]) -> Result<Self> {
        crate::nn::check_labels(labels, 2)?;
        let positive = labels.iter().filter(|&&y| y == 1).count();
        Ok(ClassCounts::new(labels.len() - positive, positive))
    }

    pub fn total(&self) -> usize {
        self.negative + self.positive
    }

    pub fn get(&self, class: usize) -> usize {
        match class {
            0 => self.negative,
            _ => self.positive,
        }
    }

    pub fn majority(&self) -> usize {
        self.negative.max(self.positive)
    }

    pub fn minority(&self) -> usize {
        self.negative.min(self.positive)
    }

    pub fn has_both(&self) -> bool {
        self.negative > 0 && self.positive > 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Objective {
    Erm,
    Gdro,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub objective: Objective,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub patience: usize,
    /// Per-class loss weights for cost-sensitive ERM; ignored by group DRO.
    pub class_weights: Option<[f64; 2]>,
    pub seed: u64,
}

impl TrainConfig {
    pub fn new(objective: Objective, batch_size: usize, seed: u64) -> Self {
        TrainConfig {
            objective,
            epochs: 200,
            batch_size,
            learning_rate: 0.001,
            patience: 10,
            class_weights: None,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.batch_size < 2 {
            return Err(Error::invalid("batch size must be at least 2"));
        }
        if self.patience < 1 {
            return Err(Error::invalid("patience must be at least 1"));
        }
        if self.epochs < 1 {
            return Err(Error::invalid("at least one epoch is required"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs_run: usize,
    pub train_loss: Vec<f64>,
    pub val_error: Vec<f64>,
    pub stopped_early: bool,
    /// 1-based epoch whose parameters were restored.
    pub best_epoch: usize,
}

/// Mean of per-sample losses.
pub fn erm_batch_loss(per_sample_losses: &[f64]) -> Result<f64> {
    if per_sample_losses.is_empty() {
        return Err(Error::EmptyBatch);
    }
    Ok(per_sample_losses.iter().sum::<f64>() / per_sample_losses.len() as f64)
}

/// Adjusted per-class losses of one batch and the class selected for the step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupLosses {
    /// `None` for a class absent from the batch.
    pub adjusted: [Option<f64>; 2],
    pub worst: usize,
}

impl GroupLosses {
    pub fn worst_loss(&self) -> f64 {
        self.adjusted[self.worst].expect("worst class is always present")
    }
}

/// Per-class batch-mean loss plus `1/sqrt(N_c)`, and the worst present class.
///
/// Ties go to the class with the smaller count, then to the lower index.
pub fn gdro_adjusted_class_losses(
    per_sample_losses: &[f64],
    batch_labels: &[u8],
    counts: &ClassCounts,
) -> Result<GroupLosses> {
    if per_sample_losses.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if per_sample_losses.len() != batch_labels.len() {
        return Err(Error::Shape(format!(
            "{} losses for {} labels",
            per_sample_losses.len(),
            batch_labels.len()
        )));
    }
    crate::nn::check_labels(batch_labels, 2)?;
    let mut sums = [0.0; 2];
    let mut members = [0usize; 2];
    for (&l, &y) in per_sample_losses.iter().zip(batch_labels) {
        sums[y as usize] += l;
        members[y as usize] += 1;
    }
    let mut adjusted = [None; 2];
    for c in 0..2 {
        if members[c] > 0 {
            let n_c = counts.get(c);
            if n_c == 0 {
                return Err(Error::invalid(format!("class {c} appears in the batch but has count 0")));
            }
            adjusted[c] = Some(sums[c] / members[c] as f64 + 1.0 / (n_c as f64).sqrt());
        }
    }
    let worst = match adjusted {
        [Some(a), Some(b)] => {
            if a > b {
                0
            } else if b > a {
                1
            } else if counts.positive < counts.negative {
                1
            } else {
                0
            }
        }
        [Some(_), None] => 0,
        [None, Some(_)] => 1,
        [None, None] => unreachable!("non-empty batch has a class"),
    };
    Ok(GroupLosses { adjusted, worst })
}

/// One ERM step: forward, batch-mean (weighted) cross-entropy, backward, Adam.
/// Returns the batch loss.
pub fn erm_step(
    model: &mut MlpModel,
    batch: &Matrix,
    labels: &[u8],
    weights: Option<&[f64]>,
    adam: &mut AdamState,
    rng: &mut SeededRng,
) -> Result<f64> {
    model.set_mode(Mode::Training);
    let logits = model.forward(batch, rng)?;
    let losses = cross_entropy(&logits, labels, weights)?;
    let loss = erm_batch_loss(&losses)?;
    let n = labels.len() as f64;
    let coeffs: Vec<f64> = match weights {
        Some(w) => w.iter().map(|w| w / n).collect(),
        None => vec![1.0 / n; labels.len()],
    };
    model.backward(&cross_entropy_grad(&logits, labels, &coeffs)?)?;
    adam.step(model)?;
    Ok(loss)
}

/// One group-DRO step: the gradient of the worst class's mean loss over its
/// members in the batch. The adjustment term is constant in the parameters so
/// it only decides which class is stepped on.
pub fn gdro_step(
    model: &mut MlpModel,
    batch: &Matrix,
    labels: &[u8],
    counts: &ClassCounts,
    adam: &mut AdamState,
    rng: &mut SeededRng,
) -> Result<GroupLosses> {
    model.set_mode(Mode::Training);
    let logits = model.forward(batch, rng)?;
    let losses = cross_entropy(&logits, labels, None)?;
    let groups = gdro_adjusted_class_losses(&losses, labels, counts)?;
    let members = labels.iter().filter(|&&y| y as usize == groups.worst).count() as f64;
    let coeffs: Vec<f64> = labels
        .iter()
        .map(|&y| if y as usize == groups.worst { 1.0 / members } else { 0.0 })
        .collect();
    model.backward(&cross_entropy_grad(&logits, labels, &coeffs)?)?;
    adam.step(model)?;
    Ok(groups)
}

/// Patience-based stopping on a validation error series.
#[derive(Debug, Clone)]
pub struct EarlyStopping {
    patience: usize,
    best: f64,
    best_epoch: usize,
    since_best: usize,
    epoch: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StopDecision {
    pub improved: bool,
    pub stop: bool,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        EarlyStopping {
            patience,
            best: f64::INFINITY,
            best_epoch: 0,
            since_best: 0,
            epoch: 0,
        }
    }

    /// Records the next epoch's validation error. Only a strict decrease
    /// counts as an improvement.
    pub fn observe(&mut self, error: f64) -> StopDecision {
        self.epoch += 1;
        if error < self.best {
            self.best = error;
            self.best_epoch = self.epoch;
            self.since_best = 0;
            StopDecision {
                improved: true,
                stop: false,
            }
        } else {
            self.since_best += 1;
            StopDecision {
                improved: false,
                stop: self.since_best >= self.patience,
            }
        }
    }

    pub fn best_epoch(&self) -> usize {
        self.best_epoch
    }

    pub fn best_error(&self) -> f64 {
        self.best
    }
}

/// `1 - accuracy` with minority-class probability thresholded at 0.5.
pub fn validation_error(model: &MlpModel, features: &Matrix, labels: &[u8]) -> Result<f64> {
    let probs = model.predict_proba(features)?;
    let wrong = probs
        .iter()
        .zip(labels)
        .filter(|(&p, &y)| (p >= 0.5) != (y == 1))
        .count();
    Ok(wrong as f64 / labels.len() as f64)
}

/// Splits a shuffled index order into batches of `size`; a trailing batch of
/// a single row is merged into the one before it.
pub fn make_batches(order: &[usize], size: usize) -> Vec<Vec<usize>> {
    let mut batches: Vec<Vec<usize>> = order.chunks(size).map(<[usize]>::to_vec).collect();
    if batches.len() > 1 && batches.last().is_some_and(|b| b.len() < 2) {
        let tail = batches.pop().unwrap();
        batches.last_mut().unwrap().extend(tail);
    }
    batches
}

/// Borrowed features and labels.
#[derive(Debug, Clone, Copy)]
pub struct Split<'a> {
    pub features: &'a Matrix,
    pub labels: &'a [u8],
}

impl<'a> Split<'a> {
    pub fn new(features: &'a Matrix, labels: &'a [u8]) -> Self {
        Split { features, labels }
    }
}

/// Trains with early stopping on `val` and restores the best-validation
/// parameters. The returned model is in inference mode.
pub fn train(model: &mut MlpModel, train: Split<'_>, val: Split<'_>, config: &TrainConfig) -> Result<TrainReport> {
    config.validate()?;
    if val.labels.is_empty() {
        return Err(Error::invalid("validation split is empty"));
    }
    if train.features.rows() != train.labels.len() || val.features.rows() != val.labels.len() {
        return Err(Error::Shape("features and labels disagree in length".into()));
    }
    let counts = ClassCounts::from_labels(train.labels)?;
    if !counts.has_both() {
        return Err(Error::SingleClass);
    }
    let weights: Option<Vec<f64>> = match (config.objective, config.class_weights) {
        (Objective::Erm, Some(w)) => Some(train.labels.iter().map(|&y| w[y as usize]).collect()),
        _ => None,
    };

    let mut rng = seeded(config.seed);
    let mut adam = AdamState::new(config.learning_rate);
    let mut stopper = EarlyStopping::new(config.patience);
    let mut best = model.clone();
    let mut order: Vec<usize> = (0..train.labels.len()).collect();
    let mut train_loss = Vec::new();
    let mut val_error = Vec::new();
    let mut stopped_early = false;

    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        let batches = make_batches(&order, config.batch_size);
        for idx in &batches {
            let x = train.features.select_rows(idx);
            let y: Vec<u8> = idx.iter().map(|&i| train.labels[i]).collect();
            epoch_loss += match config.objective {
                Objective::Erm => {
                    let w: Option<Vec<f64>> = weights.as_ref().map(|w| idx.iter().map(|&i| w[i]).collect());
                    erm_step(model, &x, &y, w.as_deref(), &mut adam, &mut rng)?
                }
                Objective::Gdro => gdro_step(model, &x, &y, &counts, &mut adam, &mut rng)?.worst_loss(),
            };
        }
        train_loss.push(epoch_loss / batches.len() as f64);

        model.set_mode(Mode::Inference);
        let err = validation_error(model, val.features, val.labels)?;
        val_error.push(err);
        let decision = stopper.observe(err);
        if decision.improved {
            best = model.clone();
        }
        if decision.stop {
            stopped_early = true;
            break;
        }
    }

    *model = best;
    model.set_mode(Mode::Inference);
    Ok(TrainReport {
        epochs_run: val_error.len(),
        train_loss,
        val_error,
        stopped_early,
        best_epoch: stopper.best_epoch(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::MlpConfig;
    use approx::assert_abs_diff_eq;

    #[test]
    fn erm_loss_is_mean() {
        assert_eq!(erm_batch_loss(&[1.0, 2.0, 3.0]).unwrap(), 2.0);
        assert_eq!(erm_batch_loss(&[0.3; 7]).unwrap(), 0.3);
        assert!(matches!(erm_batch_loss(&[]), Err(Error::EmptyBatch)));
    }

    #[test]
    fn adjusted_losses_follow_group_adjustment() {
        // class means 0.2 and 0.9, counts 900 / 100
        let losses = [0.1, 0.3, 0.8, 1.0];
        let labels = [0, 0, 1, 1];
        let g = gdro_adjusted_class_losses(&losses, &labels, &ClassCounts::new(900, 100)).unwrap();
        assert_abs_diff_eq!(g.adjusted[0].unwrap(), 0.2 + 1.0 / 30.0, epsilon = 1e-12);
        assert_abs_diff_eq!(g.adjusted[0].unwrap(), 0.23333, epsilon = 1e-5);
        assert_abs_diff_eq!(g.adjusted[1].unwrap(), 1.0, epsilon = 1e-12);
        assert_eq!(g.worst, 1);
    }

    #[test]
    fn ties_break_to_minority_then_lower_index() {
        let g = gdro_adjusted_class_losses(&[0.5, 0.5], &[0, 1], &ClassCounts::new(50, 50)).unwrap();
        assert_eq!(g.adjusted[0], g.adjusted[1]);
        assert_eq!(g.worst, 0);
        // equal losses with unequal counts: the minority adjustment is larger
        let g = gdro_adjusted_class_losses(&[0.5, 0.5], &[0, 1], &ClassCounts::new(900, 100)).unwrap();
        assert_eq!(g.worst, 1);
    }

    #[test]
    fn single_present_class_is_worst() {
        let g = gdro_adjusted_class_losses(&[0.0, 0.0], &[0, 0], &ClassCounts::new(10, 1)).unwrap();
        assert_eq!(g.worst, 0);
        assert!(g.adjusted[1].is_none());
        assert!(gdro_adjusted_class_losses(&[], &[], &ClassCounts::new(1, 1)).is_err());
    }

    #[test]
    fn early_stopping_trace() {
        let errors = [0.5, 0.4, 0.4, 0.4, 0.4, 0.4, 0.4, 0.4, 0.4, 0.4, 0.4, 0.4];
        let mut s = EarlyStopping::new(10);
        let mut stopped_at = None;
        for (i, &e) in errors.iter().enumerate() {
            if s.observe(e).stop {
                stopped_at = Some(i + 1);
                break;
            }
        }
        assert_eq!(stopped_at, Some(12));
        assert_eq!(s.best_epoch(), 2);
    }

    #[test]
    fn batches_merge_single_row_tail() {
        let order: Vec<usize> = (0..9).collect();
        let b = make_batches(&order, 4);
        assert_eq!(b.iter().map(Vec::len).collect::<Vec<_>>(), vec![4, 5]);
        let b = make_batches(&order[..6], 4);
        assert_eq!(b.iter().map(Vec::len).collect::<Vec<_>>(), vec![4, 2]);
    }

    fn toy(n: usize) -> (Matrix, Vec<u8>) {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..n {
            let y = u8::from(i % 5 == 0);
            let t = i as f64 * 0.7;
            rows.push([t.sin() + f64::from(y) * 1.5, t.cos() - f64::from(y)]);
            labels.push(y);
        }
        (Matrix::from_rows(&rows).unwrap(), labels)
    }

    #[test]
    fn training_is_deterministic_and_restores_best() {
        let (x, y) = toy(60);
        let (vx, vy) = toy(20);
        let run = || {
            let mut model = MlpModel::new(&MlpConfig::new(2, 2).with_width(8), &mut seeded(1)).unwrap();
            let mut cfg = TrainConfig::new(Objective::Gdro, 8, 5);
            cfg.epochs = 15;
            cfg.patience = 3;
            let report = train(&mut model, Split::new(&x, &y), Split::new(&vx, &vy), &cfg).unwrap();
            (report, model.flat_params())
        };
        let (r1, p1) = run();
        let (r2, p2) = run();
        assert_eq!(r1, r2);
        assert_eq!(p1, p2);
        assert_eq!(r1.val_error.len(), r1.epochs_run);
        let best = r1.val_error.iter().copied().fold(f64::INFINITY, f64::min);
        assert_eq!(r1.val_error[r1.best_epoch - 1], best);
    }

    #[test]
    fn patience_beyond_epochs_runs_everything() {
        let (x, y) = toy(40);
        let mut model = MlpModel::new(&MlpConfig::new(2, 2).with_width(4), &mut seeded(0)).unwrap();
        let mut cfg = TrainConfig::new(Objective::Erm, 8, 0);
        cfg.epochs = 6;
        cfg.patience = 6;
        let r = train(&mut model, Split::new(&x, &y), Split::new(&x, &y), &cfg).unwrap();
        assert_eq!(r.epochs_run, 6);
        assert!(!r.stopped_early);
    }

    #[test]
    fn single_class_training_rejected() {
        let x = Matrix::zeros(4, 2);
        let mut model = MlpModel::new(&MlpConfig::new(2, 2).with_width(4), &mut seeded(0)).unwrap();
        let cfg = TrainConfig::new(Objective::Erm, 2, 0);
        let r = train(&mut model, Split::new(&x, &[0; 4]), Split::new(&x, &[0, 1, 0, 1]), &cfg);
        assert!(matches!(r, Err(Error::SingleClass)));
    }
}
