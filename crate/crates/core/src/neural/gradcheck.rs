//! Central finite-difference verification of the analytic gradients.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::loss::{hinge_pattern, total_loss, total_loss_grad};
use super::model::{dropout_mask, EncoderConfig, Model};
use super::train::TrainConfig;
use crate::ciu::{CiuId, NUM_CIUS};

pub const FD_STEP: f64 = 1e-5;
/// Denominator floor for the relative error of near-zero gradients. Central
/// differences at `FD_STEP` carry roundoff near 1e-11, so exact zeros read
/// as tiny nonzero values.
pub const REL_ERROR_FLOOR: f64 = 1e-6;

/// One token sequence with its ordered labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub indices: Vec<usize>,
    pub labels: Vec<CiuId>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// Coordinates compared.
    pub compared: usize,
    /// Coordinates skipped because the probe crossed a hinge kink.
    pub skipped_kinks: usize,
}

/// Compares analytic gradients of the total loss with central differences
/// for every parameter. The dropout mask is drawn once from `cfg.seed` and
/// held fixed across probes.
pub fn grad_check(model: &Model<f64>, sample: &Sample, cfg: &TrainConfig) -> GradCheckReport {
    let mut targets = [false; NUM_CIUS];
    for c in &sample.labels {
        targets[c.code()] = true;
    }
    let mask = (model.head.dropout > 0.0)
        .then(|| dropout_mask::<f64, _>(model.dim(), model.head.dropout, &mut ChaCha8Rng::seed_from_u64(cfg.seed)));

    let eval = |m: &Model<f64>| {
        let (logits, _) = m.forward_with_mask(&sample.indices, mask.clone()).expect("non-empty sample");
        (total_loss(&logits, &targets, &sample.labels, cfg.margin, cfg.lambda), hinge_pattern(&logits, &sample.labels, cfg.margin))
    };

    let (logits, cache) = model.forward_with_mask(&sample.indices, mask.clone()).expect("non-empty sample");
    let (_, dlogits) = total_loss_grad(&logits, &targets, &sample.labels, cfg.margin, cfg.lambda);
    let mut grads = model.zeros_like();
    model.backward(&dlogits, &cache, &mut grads);
    let analytic: Vec<Vec<f64>> = grads.tensors().into_iter().map(|t| t.data.to_vec()).collect();

    let mut probe = model.clone();
    let mut report = GradCheckReport { max_rel_error: 0.0, compared: 0, skipped_kinks: 0 };
    let count = analytic.len();
    for t in 0..count {
        let len = analytic[t].len();
        for i in 0..len {
            let original = probe.tensors()[t].data[i];
            set(&mut probe, t, i, original + FD_STEP);
            let (plus, plus_pattern) = eval(&probe);
            set(&mut probe, t, i, original - FD_STEP);
            let (minus, minus_pattern) = eval(&probe);
            set(&mut probe, t, i, original);
            if plus_pattern != minus_pattern {
                report.skipped_kinks += 1;
                continue;
            }
            let numeric = (plus - minus) / (2.0 * FD_STEP);
            let a = analytic[t][i];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(REL_ERROR_FLOOR);
            report.max_rel_error = report.max_rel_error.max(rel);
            report.compared += 1;
        }
    }
    report
}

fn set(model: &mut Model<f64>, tensor: usize, index: usize, value: f64) {
    model.tensors_mut()[tensor].data[index] = value;
}

/// A random small double-precision model and sample for gradient checks:
/// width 4..=8, vocabulary 10..=50, up to two attention blocks, one to
/// four ordered labels.
pub fn random_instance(seed: u64, lambda: f64) -> (Model<f64>, Sample, TrainConfig) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = rng.random_range(4..=8);
    let vocab = rng.random_range(10..=50);
    let encoder = EncoderConfig { dim, blocks: rng.random_range(0..=2), max_positions: rng.random_range(0..=6) };
    let dropout = if rng.random_bool(0.5) { 0.2 } else { 0.0 };
    let mut model: Model<f64> = Model::init(vocab, &encoder, dropout, &mut rng);
    // Non-trivial head and layer-norm parameters so every path carries signal.
    for t in model.tensors_mut() {
        if t.name.contains("ln") || t.name.ends_with("bias") || t.name == "head.weight" {
            for v in t.data.iter_mut() {
                *v += rng.random_range(-0.5..0.5);
            }
        }
    }
    let len = rng.random_range(1..=7);
    let indices = (0..len).map(|_| rng.random_range(0..vocab)).collect();
    let n_labels = rng.random_range(1..=4);
    let mut labels: Vec<CiuId> = Vec::new();
    while labels.len() < n_labels {
        let c = CiuId::from_code(rng.random_range(0..NUM_CIUS)).unwrap();
        if !labels.contains(&c) {
            labels.push(c);
        }
    }
    let cfg = TrainConfig { lambda, seed, dropout, encoder, ..TrainConfig::default() };
    (model, Sample { indices, labels }, cfg)
}
