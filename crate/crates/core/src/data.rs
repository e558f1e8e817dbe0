//! Synthetic labelled images.
//!
//! Each class owns a blob anchor on a circle around the image centre and a
//! stripe orientation. A sample is a jittered Gaussian blob plus oriented
//! stripes with random phase on a grey background, with pixel noise.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng as _;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::rng;
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub images: Vec<Tensor>,
    pub labels: Vec<usize>,
    pub classes: usize,
}

impl Dataset {
    pub fn new(images: Vec<Tensor>, labels: Vec<usize>, classes: usize) -> Result<Self> {
        if images.len() != labels.len() {
            return Err(Error::InvalidConfig(format!(
                "{} images but {} labels",
                images.len(),
                labels.len()
            )));
        }
        if let Some(&label) = labels.iter().find(|&&l| l >= classes) {
            return Err(Error::LabelOutOfRange { label, classes });
        }
        Ok(Self {
            images,
            labels,
            classes,
        })
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            images: indices.iter().map(|&i| self.images[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            classes: self.classes,
        }
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut c = alloc::vec![0; self.classes];
        for &l in &self.labels {
            c[l] += 1;
        }
        c
    }

    /// Per-class mean image.
    pub fn class_means(&self) -> Vec<Tensor> {
        let Some(first) = self.images.first() else {
            return Vec::new();
        };
        let mut sums: Vec<Vec<f64>> = (0..self.classes).map(|_| alloc::vec![0.0; first.len()]).collect();
        for (x, &l) in self.images.iter().zip(&self.labels) {
            for (s, &v) in sums[l].iter_mut().zip(x.data()) {
                *s += v as f64;
            }
        }
        let counts = self.class_counts();
        sums.into_iter()
            .zip(counts)
            .map(|(s, n)| {
                let d = s.into_iter().map(|v| (v / n.max(1) as f64) as f32).collect();
                Tensor::new(first.shape().to_vec(), d).expect("same shape")
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticConfig {
    pub classes: usize,
    pub n: usize,
    pub extent: usize,
    pub seed: u64,
    pub blob_amplitude: f64,
    pub stripe_amplitude: f64,
    pub noise_std: f64,
}

impl SyntheticConfig {
    pub fn new(classes: usize, n: usize, extent: usize, seed: u64) -> Self {
        Self {
            classes,
            n,
            extent,
            seed,
            blob_amplitude: 0.35,
            stripe_amplitude: 0.15,
            noise_std: 0.03,
        }
    }
}

/// Minimum ℓ2 distance between the class-0 and class-1 mean images of a
/// generated 16×16 set; `gen-data` asserts it.
pub const MEAN_IMAGE_MARGIN: f64 = 1.0;

/// `n` single-channel images, labels cycling `0, 1, …, classes − 1`.
pub fn synthetic(cfg: &SyntheticConfig) -> Result<Dataset> {
    if cfg.classes < 2 || cfg.n < cfg.classes || cfg.extent < 4 {
        return Err(Error::InvalidConfig(format!(
            "need classes >= 2, n >= classes and extent >= 4 (got {:?})",
            cfg
        )));
    }
    let e = cfg.extent as f64;
    let c0 = (e - 1.0) / 2.0;
    let sigma = e / 8.0;
    let noise = Normal::new(0.0, cfg.noise_std.max(1e-12)).expect("std");
    let mut images = Vec::with_capacity(cfg.n);
    let mut labels = Vec::with_capacity(cfg.n);
    for i in 0..cfg.n {
        let label = i % cfg.classes;
        let mut r = rng::stream(cfg.seed, "synthetic", i as u64);
        let angle = 2.0 * PI * label as f64 / cfg.classes as f64;
        let by = c0 + e / 4.0 * libm::sin(angle) + r.random_range(-1.0..1.0);
        let bx = c0 + e / 4.0 * libm::cos(angle) + r.random_range(-1.0..1.0);
        let orient = PI * label as f64 / cfg.classes as f64;
        let (so, co) = (libm::sin(orient), libm::cos(orient));
        let phase = r.random_range(0.0..2.0 * PI);
        let freq = 2.0 * PI / 4.0;
        let mut d = Vec::with_capacity(cfg.extent * cfg.extent);
        for y in 0..cfg.extent {
            for x in 0..cfg.extent {
                let (fy, fx) = (y as f64, x as f64);
                let dist2 = (fy - by) * (fy - by) + (fx - bx) * (fx - bx);
                let blob = cfg.blob_amplitude * libm::exp(-dist2 / (2.0 * sigma * sigma));
                let stripe = cfg.stripe_amplitude * libm::sin(freq * (fx * co + fy * so) + phase);
                let v = 0.3 + blob + stripe + noise.sample(&mut r);
                d.push(v.clamp(0.0, 1.0) as f32);
            }
        }
        images.push(Tensor::new(alloc::vec![1, cfg.extent, cfg.extent], d)?);
        labels.push(label);
    }
    Dataset::new(images, labels, cfg.classes)
}
