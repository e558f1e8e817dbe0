//! Optimizers and the learning-rate schedule.
//!
//! Nesterov SGD, with weight decay folded into the gradient:
//!
//! ```text
//! g' = g + wd * θ
//! v  = μ * v + g'
//! θ  = θ - lr * (g' + μ * v)
//! ```
//!
//! Adam uses the usual bias-corrected moments:
//!
//! ```text
//! m = β1 m + (1 - β1) g        v = β2 v + (1 - β2) g²
//! θ = θ - lr * m̂ / (sqrt(v̂) + ε),   m̂ = m / (1 - β1^t),  v̂ = v / (1 - β2^t)
//! ```

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::nets::ParamSet;
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Schedule {
    /// Peak learning rate before the linear scaling rule.
    pub base_lr: f64,
    pub batch_size: usize,
    pub reference_batch: usize,
    pub warmup_steps: usize,
    pub total_steps: usize,
}

impl Schedule {
    /// `max(lr * batch / reference, lr)`.
    pub fn peak(&self) -> f64 {
        let scaled = self.base_lr * self.batch_size as f64 / self.reference_batch as f64;
        scaled.max(self.base_lr)
    }

    /// Linear ramp `0 -> peak` over the warmup, then `peak * (1 + cos(π p)) / 2`
    /// with `p` the fraction of post-warmup steps completed.
    pub fn lr(&self, step: usize) -> f64 {
        let peak = self.peak();
        let step = step.min(self.total_steps);
        if step < self.warmup_steps {
            return peak * step as f64 / self.warmup_steps as f64;
        }
        let decay = self.total_steps - self.warmup_steps;
        if decay == 0 {
            return peak;
        }
        let p = (step - self.warmup_steps) as f64 / decay as f64;
        peak * 0.5 * (1.0 + libm::cos(PI * p))
    }
}

fn check_grads(params: &ParamSet, grads: &[Tensor]) -> Result<()> {
    if grads.len() != params.len() {
        return Err(Error::Misaligned(
            [alloc::format!("{} grads for {} blocks", grads.len(), params.len())].into(),
        ));
    }
    let bad: Vec<_> = params
        .blocks()
        .iter()
        .zip(grads)
        .filter(|(b, g)| b.tensor.shape() != g.shape())
        .map(|(b, _)| b.name.clone())
        .collect();
    if bad.is_empty() {
        Ok(())
    } else {
        Err(Error::Misaligned(bad))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SgdState {
    pub velocity: Vec<Tensor>,
}

impl SgdState {
    pub fn new(params: &ParamSet) -> Self {
        Self {
            velocity: params.tensors().map(|t| Tensor::zeros(t.shape())).collect(),
        }
    }
}

pub fn sgd_nesterov_step(
    params: &ParamSet,
    grads: &[Tensor],
    state: &mut SgdState,
    lr: f32,
    momentum: f32,
    weight_decay: f32,
) -> Result<ParamSet> {
    check_grads(params, grads)?;
    let mut out = Vec::with_capacity(params.len());
    for ((theta, g), v) in params.tensors().zip(grads).zip(state.velocity.iter_mut()) {
        let mut next = theta.clone();
        for ((p, &gi), vi) in next.data_mut().iter_mut().zip(g.data()).zip(v.data_mut()) {
            let g2 = gi + weight_decay * *p;
            *vi = momentum * *vi + g2;
            *p -= lr * (g2 + momentum * *vi);
        }
        out.push(next);
    }
    params.replace_tensors(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<Tensor>,
    pub v: Vec<Tensor>,
    pub t: u64,
}

impl AdamState {
    pub fn new(params: &ParamSet) -> Self {
        let zeros: Vec<Tensor> = params.tensors().map(|t| Tensor::zeros(t.shape())).collect();
        Self {
            m: zeros.clone(),
            v: zeros,
            t: 0,
        }
    }
}

pub fn adam_step(
    params: &ParamSet,
    grads: &[Tensor],
    state: &mut AdamState,
    lr: f32,
    beta1: f32,
    beta2: f32,
    eps: f32,
) -> Result<ParamSet> {
    check_grads(params, grads)?;
    state.t += 1;
    let bc1 = 1.0 - libm::pow(beta1 as f64, state.t as f64);
    let bc2 = 1.0 - libm::pow(beta2 as f64, state.t as f64);
    let mut out = Vec::with_capacity(params.len());
    for (((theta, g), m), v) in params
        .tensors()
        .zip(grads)
        .zip(state.m.iter_mut())
        .zip(state.v.iter_mut())
    {
        let mut next = theta.clone();
        for (((p, &gi), mi), vi) in next
            .data_mut()
            .iter_mut()
            .zip(g.data())
            .zip(m.data_mut())
            .zip(v.data_mut())
        {
            *mi = beta1 * *mi + (1.0 - beta1) * gi;
            *vi = beta2 * *vi + (1.0 - beta2) * gi * gi;
            let mhat = *mi as f64 / bc1;
            let vhat = *vi as f64 / bc2;
            *p -= (lr as f64 * mhat / (libm::sqrt(vhat) + eps as f64)) as f32;
        }
        out.push(next);
    }
    params.replace_tensors(out)
}
