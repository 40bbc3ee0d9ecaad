use alloc::vec;
use alloc::vec::Vec;

use super::model::{Model, ParamGroup};
use super::tensor::Real;

/// Adam with decoupled weight decay and separate learning rates for the
/// encoder and head parameter groups.
#[derive(Clone, Debug)]
pub struct AdamW<F> {
    pub lr_encoder: f64,
    pub lr_head: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    step: u32,
    first: Vec<Vec<F>>,
    second: Vec<Vec<F>>,
}

impl<F: Real> AdamW<F> {
    pub fn new(lr_encoder: f64, lr_head: f64, beta1: f64, beta2: f64, eps: f64, weight_decay: f64) -> Self {
        AdamW { lr_encoder, lr_head, beta1, beta2, eps, weight_decay, step: 0, first: Vec::new(), second: Vec::new() }
    }

    pub fn steps(&self) -> u32 {
        self.step
    }

    pub fn step(&mut self, model: &mut Model<F>, grads: &Model<F>) {
        let grad_tensors = grads.tensors();
        let params = model.tensors_mut();
        if self.first.is_empty() {
            self.first = grad_tensors.iter().map(|g| vec![F::zero(); g.data.len()]).collect();
            self.second = self.first.clone();
        }
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - libm::pow(self.beta1, t as f64);
        let bc2 = 1.0 - libm::pow(self.beta2, t as f64);
        let (b1, b2) = (F::of(self.beta1), F::of(self.beta2));
        let eps = F::of(self.eps);

        for (((p, g), m), v) in params.into_iter().zip(&grad_tensors).zip(&mut self.first).zip(&mut self.second) {
            let lr = match p.group {
                ParamGroup::Encoder => self.lr_encoder,
                ParamGroup::Head => self.lr_head,
            };
            let decay = if p.decay { F::of(1.0 - lr * self.weight_decay) } else { F::one() };
            let step_size = F::of(lr / bc1);
            let bc2_sqrt = F::of(libm::sqrt(bc2));
            for (((w, &gi), mi), vi) in p.data.iter_mut().zip(g.data).zip(m.iter_mut()).zip(v.iter_mut()) {
                *mi = b1 * *mi + (F::one() - b1) * gi;
                *vi = b2 * *vi + (F::one() - b2) * gi * gi;
                *w = *w * decay - step_size * *mi / ((*vi).sqrt() / bc2_sqrt + eps);
            }
        }
    }
}
