mod common;

use common::*;
use imbench::nn::{cross_entropy, cross_entropy_grad, Mode};
use imbench::rng::seeded;
use imbench::Matrix;

#[test]
fn gradients_match_finite_differences_small_models() {
    let mut rng = seeded(7);
    for depth in [0, 1, 2, 3] {
        let mut model = random_model(3, depth, 6, 0.5, &mut rng);
        let x = random_matrix(8, 3, &mut rng);
        let y = random_labels(8, &mut rng);
        let check = gradient_check(&mut model, &x, &y, 99, 1e-3);
        assert!(check.pass_rate() >= 0.99, "depth {depth}: {check:?}");
    }
}

#[test]
fn duplicated_batch_gives_identical_gradients() {
    let mut rng = seeded(3);
    let mut model = random_model(4, 3, 10, 0.0, &mut rng);
    let x = random_matrix(6, 4, &mut rng);
    let y = random_labels(6, &mut rng);
    let single = analytic_grads(&mut model, &x, &y, 0);
    let rows: Vec<usize> = (0..6).chain(0..6).collect();
    let doubled_y: Vec<u8> = rows.iter().map(|&i| y[i]).collect();
    let doubled = analytic_grads(&mut model, &x.select_rows(&rows), &doubled_y, 0);
    for (a, b) in single.iter().zip(&doubled) {
        assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{a} vs {b}");
    }
}

#[test]
fn dropout_preserves_mean_activation() {
    // depth 1: dropout sits right before the linear head, so mean logits are
    // preserved in expectation
    let mut rng = seeded(11);
    let mut model = random_model(5, 1, 50, 0.5, &mut rng);
    let x = random_matrix(2000, 5, &mut rng);
    let mean = |logits: &Matrix| logits.as_slice().iter().sum::<f64>() / logits.as_slice().len() as f64;
    model.set_mode(Mode::Training);
    let mut train_mean = 0.0;
    let reps = 20;
    for s in 0..reps {
        let logits = model.forward(&x, &mut seeded(s)).unwrap();
        train_mean += mean(&logits) / reps as f64;
    }
    let mut no_drop = model.clone();
    for b in no_drop.blocks_mut() {
        b.dropout = imbench::nn::DropoutLayer::new(0.0).unwrap();
    }
    no_drop.set_mode(Mode::Training);
    let reference = mean(&no_drop.forward(&x, &mut seeded(0)).unwrap());
    let scale = reference.abs().max(1e-3);
    assert!((train_mean - reference).abs() / scale < 0.05, "{train_mean} vs {reference}");
}

#[test]
fn zero_loss_gradient_zeroes_all_grads() {
    let mut rng = seeded(5);
    let mut model = random_model(3, 4, 12, 0.5, &mut rng);
    let x = random_matrix(10, 3, &mut rng);
    let y = random_labels(10, &mut rng);
    let logits = model.forward(&x, &mut seeded(1)).unwrap();
    model.backward(&cross_entropy_grad(&logits, &y, &[0.0; 10]).unwrap()).unwrap();
    assert!(model.flat_grads().iter().all(|&g| g == 0.0));
    assert!(cross_entropy(&logits, &y, None).unwrap().iter().all(|l| l.is_finite()));
}
