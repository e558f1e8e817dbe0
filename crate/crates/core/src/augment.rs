//! Augmentation stages composed in a fixed order:
//! deepaugment-mini → standard → AdA (+ SSIM guard) → augmix-mini.
//!
//! Posterize to `b` bits maps `v` to `round(v · 2^b) / 2^b`, so one bit gives
//! the levels `{0, 0.5, 1}`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::index;
use rand::Rng as _;
use rand_distr::{Dirichlet, Distribution};

use crate::error::{Error, Result};
use crate::nets::{Classify, Net, ParamSet};
use crate::perturb::{find_adversarial, relative_norm, AdaConfig};
use crate::rng;
use crate::ssim::{ssim, ssim_guard, GuardPath, LineSearchConfig, SsimConfig};
use crate::tensor::{image_dims, Tensor};

pub const CROP_PAD: usize = 4;

/// Zero-pad by [`CROP_PAD`], crop the original extent at `(oy, ox)` and
/// optionally mirror left-right. `(4, 4)` without flip is the identity.
pub fn pad_crop_flip(x: &Tensor, oy: usize, ox: usize, flip: bool) -> Result<Tensor> {
    let (c, h, w) = image_dims(x)?;
    if oy > 2 * CROP_PAD || ox > 2 * CROP_PAD {
        return Err(Error::InvalidConfig(format!("crop offset ({}, {}) outside padding", oy, ox)));
    }
    let mut out = vec![0.0f32; x.len()];
    for ch in 0..c {
        for i in 0..h {
            for j in 0..w {
                let sy = (i + oy).checked_sub(CROP_PAD).filter(|&v| v < h);
                let sx = (j + ox).checked_sub(CROP_PAD).filter(|&v| v < w);
                if let (Some(sy), Some(sx)) = (sy, sx) {
                    let dj = if flip { w - 1 - j } else { j };
                    out[(ch * h + i) * w + dj] = x.data()[(ch * h + sy) * w + sx];
                }
            }
        }
    }
    Tensor::new(x.shape().to_vec(), out)
}

pub fn standard_aug(x: &Tensor, seed: u64) -> Result<Tensor> {
    let mut r = rng::stream(seed, "standard-aug", 0);
    let oy = r.random_range(0..=2 * CROP_PAD);
    let ox = r.random_range(0..=2 * CROP_PAD);
    let flip = r.random::<bool>();
    pad_crop_flip(x, oy, ox, flip)
}

pub fn posterize(x: &Tensor, bits: u32) -> Tensor {
    let levels = (1u32 << bits) as f32;
    x.map(|v| libm::roundf(v * levels) / levels)
}

fn translate(x: &Tensor, dy: isize, dx: isize) -> Result<Tensor> {
    let (c, h, w) = image_dims(x)?;
    let mut out = vec![0.0f32; x.len()];
    for ch in 0..c {
        for i in 0..h {
            for j in 0..w {
                let sy = i as isize - dy;
                let sx = j as isize - dx;
                if (0..h as isize).contains(&sy) && (0..w as isize).contains(&sx) {
                    out[(ch * h + i) * w + j] = x.data()[(ch * h + sy as usize) * w + sx as usize];
                }
            }
        }
    }
    Tensor::new(x.shape().to_vec(), out)
}

/// Rotate by `quarter_turns · 90°` counter-clockwise; square images only.
fn rotate90(x: &Tensor, quarter_turns: usize) -> Result<Tensor> {
    let (c, h, w) = image_dims(x)?;
    if h != w {
        return Err(Error::InvalidConfig("rotate needs a square image".into()));
    }
    let mut cur = x.clone();
    for _ in 0..quarter_turns % 4 {
        let mut out = vec![0.0f32; x.len()];
        for ch in 0..c {
            for i in 0..h {
                for j in 0..w {
                    out[(ch * h + (w - 1 - j)) * w + i] = cur.data()[(ch * h + i) * w + j];
                }
            }
        }
        cur = Tensor::new(x.shape().to_vec(), out)?;
    }
    Ok(cur)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MixOp {
    Posterize(u32),
    BrightnessShift(f32),
    Contrast(f32),
    Translate(isize, isize),
    Rotate90(usize),
}

impl MixOp {
    fn sample(r: &mut rng::Rng) -> Self {
        match r.random_range(0..5) {
            0 => MixOp::Posterize(r.random_range(1..=3)),
            1 => MixOp::BrightnessShift(r.random_range(-0.2..0.2)),
            2 => MixOp::Contrast(r.random_range(0.5..1.5)),
            3 => MixOp::Translate(r.random_range(-2i32..=2) as isize, r.random_range(-2i32..=2) as isize),
            _ => MixOp::Rotate90(r.random_range(1..4)),
        }
    }

    pub fn apply(self, x: &Tensor) -> Result<Tensor> {
        Ok(match self {
            MixOp::Posterize(b) => posterize(x, b),
            MixOp::BrightnessShift(s) => x.map(|v| (v + s).clamp(0.0, 1.0)),
            MixOp::Contrast(f) => {
                let m = x.mean() as f32;
                x.map(|v| ((v - m) * f + m).clamp(0.0, 1.0))
            }
            MixOp::Translate(dy, dx) => translate(x, dy, dx)?,
            MixOp::Rotate90(k) => rotate90(x, k)?,
        })
    }
}

/// `weights[0] · x + Σ weights[i + 1] · chains[i]`, clamped to `[0, 1]`.
pub fn augmix_mix(x: &Tensor, chains: &[Tensor], weights: &[f64]) -> Result<Tensor> {
    if weights.len() != chains.len() + 1 {
        return Err(Error::InvalidConfig(format!(
            "{} weights for {} chains",
            weights.len(),
            chains.len()
        )));
    }
    let mut acc: Vec<f64> = x.data().iter().map(|&v| weights[0] * v as f64).collect();
    for (c, &wt) in chains.iter().zip(&weights[1..]) {
        if c.shape() != x.shape() {
            return Err(crate::error::shape_err("augmix", format!("{:?} vs {:?}", c.shape(), x.shape())));
        }
        for (a, &v) in acc.iter_mut().zip(c.data()) {
            *a += wt * v as f64;
        }
    }
    Tensor::new(
        x.shape().to_vec(),
        acc.into_iter().map(|v| (v as f32).clamp(0.0, 1.0)).collect(),
    )
}

fn dirichlet_weights(r: &mut rng::Rng, n: usize) -> Vec<f64> {
    match n {
        2 => Dirichlet::new([1.0f64; 2]).expect("alpha").sample(r).to_vec(),
        3 => Dirichlet::new([1.0f64; 3]).expect("alpha").sample(r).to_vec(),
        _ => Dirichlet::new([1.0f64; 4]).expect("alpha").sample(r).to_vec(),
    }
}

/// One to three chains of depth one to three, mixed with the input under
/// Dirichlet(1, …, 1) weights.
pub fn augmix_mini(x: &Tensor, seed: u64) -> Result<Tensor> {
    let mut r = rng::stream(seed, "augmix", 0);
    let k = r.random_range(1..=3);
    let mut chains = Vec::with_capacity(k);
    for _ in 0..k {
        let depth = r.random_range(1..=3);
        let mut c = x.clone();
        for _ in 0..depth {
            c = MixOp::sample(&mut r).apply(&c)?;
        }
        chains.push(c);
    }
    let w = dirichlet_weights(&mut r, k + 1);
    augmix_mix(x, &chains, &w)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Distortion {
    Scale(f32),
    Negate(usize),
    Zero(usize),
}

pub const DEEPAUGMENT_PROB: f64 = 0.3;
pub const DEEPAUGMENT_FRACTION: f64 = 0.05;

/// Like [`deepaugment_mini`], also returning what happened to each block.
pub fn deepaugment_mini_traced(phi: &ParamSet, seed: u64) -> (ParamSet, Vec<Option<Distortion>>) {
    let mut r = rng::stream(seed, "deepaugment", 0);
    let mut trace = Vec::with_capacity(phi.len());
    let out = phi.map(|_, t| {
        if r.random::<f64>() >= DEEPAUGMENT_PROB {
            trace.push(None);
            return t.clone();
        }
        let count = libm::floor(DEEPAUGMENT_FRACTION * t.len() as f64) as usize;
        let mut out = t.clone();
        let op = match r.random_range(0..3) {
            0 => {
                let s = r.random_range(0.8f32..1.2);
                out = t.map(|v| v * s);
                Distortion::Scale(s)
            }
            1 => {
                for i in index::sample(&mut r, t.len(), count) {
                    out.data_mut()[i] = -out.data()[i];
                }
                Distortion::Negate(count)
            }
            _ => {
                for i in index::sample(&mut r, t.len(), count) {
                    out.data_mut()[i] = 0.0;
                }
                Distortion::Zero(count)
            }
        };
        trace.push(Some(op));
        out
    });
    (out, trace)
}

/// Per block, with probability 0.3, scale by `U(0.8, 1.2)`, negate a random
/// 5% of coordinates, or zero a random 5% of coordinates.
pub fn deepaugment_mini(phi: &ParamSet, seed: u64) -> ParamSet {
    deepaugment_mini_traced(phi, seed).0
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PipelineConfig {
    pub use_deepaugment_mini: bool,
    pub use_standard_aug: bool,
    pub use_ada: bool,
    pub use_augmix_mini: bool,
    /// Master seed; every stage draws from `derive_seed(seed, stage, key)`.
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    DeepAugmentMini,
    StandardAug,
    Ada,
    SsimGuard,
    AugMixMini,
}

/// What the pipeline needs for the network-based stages.
pub struct PipelineCtx<'a> {
    pub corruption: &'a Net,
    pub phi: &'a ParamSet,
    pub classifier: &'a dyn Classify,
    pub ada: AdaConfig,
    pub ssim: SsimConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaRecord {
    pub delta_norm: f64,
    pub ssim_before_guard: f64,
    pub gamma: f64,
    pub guard: GuardPath,
    /// Image the AdA stage received.
    pub ada_input: Tensor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    pub x: Tensor,
    pub y: usize,
    pub stages: Vec<Stage>,
    pub ada: Option<AdaRecord>,
}

/// Runs the enabled stages in fixed order. `key` identifies the draw (e.g.
/// epoch and example) so every stage gets its own reproducible stream.
pub fn run_pipeline(
    x: &Tensor,
    y: usize,
    cfg: &PipelineConfig,
    ctx: Option<&PipelineCtx<'_>>,
    key: u64,
) -> Result<PipelineOutput> {
    let mut cur = x.clone();
    let mut stages = Vec::new();
    let mut ada = None;

    if cfg.use_deepaugment_mini {
        let ctx = ctx.ok_or(Error::MissingContext)?;
        let distorted = deepaugment_mini(ctx.phi, rng::derive_seed(cfg.seed, "stage-deepaugment", key));
        cur = ctx.corruption.infer(&distorted, &cur)?;
        stages.push(Stage::DeepAugmentMini);
    }
    if cfg.use_standard_aug {
        cur = standard_aug(&cur, rng::derive_seed(cfg.seed, "stage-standard", key))?;
        stages.push(Stage::StandardAug);
    }
    if cfg.use_ada {
        let ctx = ctx.ok_or(Error::MissingContext)?;
        let mut acfg = ctx.ada;
        acfg.seed = rng::derive_seed(cfg.seed, "stage-ada", key);
        let adv = find_adversarial(ctx.corruption, ctx.phi, ctx.classifier, &cur, y, &acfg)?;
        stages.push(Stage::Ada);
        let before = ssim(&cur, &adv.x_adv, &ctx.ssim)?;
        let guard = ssim_guard(
            &cur,
            &adv.x_adv,
            &LineSearchConfig::new(acfg.ssim_threshold),
            &ctx.ssim,
        )?;
        stages.push(Stage::SsimGuard);
        ada = Some(AdaRecord {
            delta_norm: relative_norm(&adv.delta, ctx.phi)?,
            ssim_before_guard: before,
            gamma: guard.gamma,
            guard: guard.path,
            ada_input: cur,
        });
        cur = guard.image;
    }
    if cfg.use_augmix_mini {
        cur = augmix_mini(&cur, rng::derive_seed(cfg.seed, "stage-augmix", key))?;
        stages.push(Stage::AugMixMini);
    }
    Ok(PipelineOutput {
        x: cur,
        y,
        stages,
        ada,
    })
}
