//! Outer training loop: per-example augmentation (optionally AdA), mean
//! cross-entropy gradient over the batch and a Nesterov SGD update under a
//! warmup + cosine schedule.
//!
//! Work fans out over nano-batches through an [`Executor`]; per-example
//! gradients are summed in index order so the update does not depend on the
//! worker count.

use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::augment::{run_pipeline, PipelineConfig, PipelineCtx};
use crate::autodiff::Graph;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::nets::{Classify, Model, Net, ParamSet};
use crate::optim::{sgd_nesterov_step, Schedule, SgdState};
use crate::perturb::AdaConfig;
use crate::rng;
use crate::ssim::SsimConfig;
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    /// Examples per work item handed to the executor.
    pub nano_batch: usize,
    pub lr: f64,
    pub warmup_epochs: usize,
    pub momentum: f64,
    pub weight_decay: f64,
    pub reference_batch: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 10,
            batch_size: 32,
            nano_batch: 8,
            lr: 0.1,
            warmup_epochs: 5,
            momentum: 0.9,
            weight_decay: 5e-4,
            reference_batch: 256,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 || self.nano_batch == 0 {
            return Err(Error::InvalidConfig("epochs, batch_size and nano_batch must be positive".into()));
        }
        if !self.batch_size.is_multiple_of(self.nano_batch) {
            return Err(Error::InvalidConfig(format!(
                "nano_batch {} does not divide batch_size {}",
                self.nano_batch, self.batch_size
            )));
        }
        if !(self.lr > 0.0) || self.momentum < 0.0 || self.weight_decay < 0.0 {
            return Err(Error::InvalidConfig("lr, momentum or weight_decay out of range".into()));
        }
        Ok(())
    }

    pub fn steps_per_epoch(&self, n: usize) -> usize {
        n.div_ceil(self.batch_size)
    }

    pub fn schedule(&self, n: usize) -> Schedule {
        let spe = self.steps_per_epoch(n);
        Schedule {
            base_lr: self.lr,
            batch_size: self.batch_size,
            reference_batch: self.reference_batch,
            warmup_steps: self.warmup_epochs * spe,
            total_steps: self.epochs * spe,
        }
    }
}

/// Corruption network and settings used by the AdA and DeepAugment stages.
#[derive(Debug, Clone, Copy)]
pub struct AdaSetup<'a> {
    pub corruption: &'a Net,
    pub phi: &'a ParamSet,
    pub ada: AdaConfig,
    pub ssim: SsimConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub theta: ParamSet,
    pub velocity: SgdState,
    /// Completed epochs.
    pub epoch: usize,
    pub seed: u64,
}

impl Checkpoint {
    pub fn fresh(theta: ParamSet, seed: u64) -> Self {
        let velocity = SgdState::new(&theta);
        Self {
            theta,
            velocity,
            epoch: 0,
            seed,
        }
    }
}

/// One metrics row per epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    pub step: usize,
    pub lr: f64,
    pub loss: f64,
    pub clean_acc: f64,
    /// Mean ‖δ‖/‖φ‖ over AdA examples; zero without AdA.
    pub mean_delta_norm: f64,
}

struct ExampleResult {
    grads: Vec<Tensor>,
    loss: f32,
    delta_norm: Option<f64>,
}

fn example_grad(
    net: &Net,
    theta: &ParamSet,
    x: &Tensor,
    y: usize,
    pipeline: &PipelineConfig,
    ada: Option<&AdaSetup<'_>>,
    key: u64,
) -> Result<ExampleResult> {
    let model = Model { net, params: theta };
    let ctx = ada.map(|a| PipelineCtx {
        corruption: a.corruption,
        phi: a.phi,
        classifier: &model,
        ada: a.ada,
        ssim: a.ssim,
    });
    let out = run_pipeline(x, y, pipeline, ctx.as_ref(), key)?;
    let mut g = Graph::new();
    let p = theta.to_vars(&mut g, true)?;
    let xv = g.constant(out.x)?;
    let z = net.forward(&mut g, &p, xv)?;
    let loss = g.cross_entropy(z, out.y)?;
    let lv = g.value(loss).data()[0];
    g.backward(loss)?;
    let grads = p
        .iter()
        .zip(theta.tensors())
        .map(|(&v, t)| g.grad(v).cloned().unwrap_or_else(|| Tensor::zeros(t.shape())))
        .collect();
    Ok(ExampleResult {
        grads,
        loss: lv,
        delta_norm: out.ada.map(|a| a.delta_norm),
    })
}

/// Fraction of `data` that `clf` labels correctly.
pub fn accuracy<E: Executor + ?Sized>(clf: &dyn Classify, data: &Dataset, exec: &E) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let hits = exec.map(data.len(), |i| clf.predict(&data.images[i]).map(|p| p == data.labels[i]));
    let mut n = 0usize;
    for h in hits {
        n += h? as usize;
    }
    Ok(n as f64 / data.len() as f64)
}

/// Epoch order: a seeded permutation depending only on `(seed, epoch)`.
pub fn epoch_order(n: usize, seed: u64, epoch: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::stream(seed, "epoch-order", epoch as u64));
    order
}

/// Train from `start` until `cfg.epochs` epochs are complete. `on_epoch`
/// sees the checkpoint and the metrics row after every epoch and may abort by
/// returning an error. Returns the final checkpoint and all rows produced.
#[allow(clippy::too_many_arguments)]
pub fn train<E: Executor + ?Sized>(
    net: &Net,
    data: &Dataset,
    cfg: &TrainConfig,
    pipeline: &PipelineConfig,
    ada: Option<&AdaSetup<'_>>,
    start: Checkpoint,
    exec: &E,
    mut on_epoch: impl FnMut(&Checkpoint, &EpochLog) -> Result<()>,
) -> Result<(Checkpoint, Vec<EpochLog>)> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    net.check_params(&start.theta)?;
    if let Some(a) = ada {
        a.ada.validate()?;
        a.corruption.check_params(a.phi)?;
    }
    if let Some(&label) = data.labels.iter().find(|&&l| l >= net.spec().classes) {
        return Err(Error::LabelOutOfRange {
            label,
            classes: net.spec().classes,
        });
    }
    let n = data.len();
    let spe = cfg.steps_per_epoch(n);
    let sched = cfg.schedule(n);
    let mut ck = start;
    let mut logs = Vec::new();
    let mut pcfg = *pipeline;
    while ck.epoch < cfg.epochs {
        let epoch = ck.epoch;
        let order = epoch_order(n, cfg.seed, epoch);
        let mut loss_sum = 0.0f64;
        let mut delta_sum = 0.0f64;
        let mut delta_n = 0usize;
        let mut lr = 0.0;
        for (b, batch) in order.chunks(cfg.batch_size).enumerate() {
            let step = epoch * spe + b;
            pcfg.seed = rng::derive_seed(pipeline.seed, "train-pipeline", step as u64);
            let theta = &ck.theta;
            let chunks: Vec<&[usize]> = batch.chunks(cfg.nano_batch).collect();
            let results = exec.map(chunks.len(), |c| {
                chunks[c]
                    .iter()
                    .map(|&i| {
                        example_grad(net, theta, &data.images[i], data.labels[i], &pcfg, ada, i as u64)
                    })
                    .collect::<Result<Vec<_>>>()
            });
            let mut sum: Vec<Vec<f64>> = theta.tensors().map(|t| alloc::vec![0.0; t.len()]).collect();
            let mut batch_loss = 0.0f64;
            for r in results {
                for ex in r? {
                    batch_loss += ex.loss as f64;
                    if let Some(d) = ex.delta_norm {
                        delta_sum += d;
                        delta_n += 1;
                    }
                    for (s, g) in sum.iter_mut().zip(&ex.grads) {
                        for (a, &v) in s.iter_mut().zip(g.data()) {
                            *a += v as f64;
                        }
                    }
                }
            }
            let mean_loss = batch_loss / batch.len() as f64;
            if !mean_loss.is_finite() {
                return Err(Error::NonFiniteLoss {
                    epoch,
                    step,
                    loss: mean_loss as f32,
                    batch: batch.to_vec(),
                });
            }
            loss_sum += batch_loss;
            let inv = 1.0 / batch.len() as f64;
            let grads: Vec<Tensor> = sum
                .into_iter()
                .zip(theta.tensors())
                .map(|(s, t)| {
                    Tensor::new(t.shape().to_vec(), s.into_iter().map(|v| (v * inv) as f32).collect())
                        .expect("same shape")
                })
                .collect();
            lr = sched.lr(step + 1);
            ck.theta = sgd_nesterov_step(
                &ck.theta,
                &grads,
                &mut ck.velocity,
                lr as f32,
                cfg.momentum as f32,
                cfg.weight_decay as f32,
            )?;
        }
        ck.epoch += 1;
        let model = Model {
            net,
            params: &ck.theta,
        };
        let row = EpochLog {
            epoch: ck.epoch,
            step: ck.epoch * spe,
            lr,
            loss: loss_sum / n as f64,
            clean_acc: accuracy(&model, data, exec)?,
            mean_delta_norm: if delta_n > 0 { delta_sum / delta_n as f64 } else { 0.0 },
        };
        log::info!(
            "epoch {} step {} lr {:.5} loss {:.4} acc {:.3}",
            row.epoch,
            row.step,
            row.lr,
            row.loss,
            row.clean_acc
        );
        on_epoch(&ck, &row)?;
        logs.push(row);
    }
    Ok((ck, logs))
}
