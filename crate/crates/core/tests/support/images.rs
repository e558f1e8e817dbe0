//! Random test images.

#![allow(dead_code)]

use ada_core::rng;
use ada_core::Tensor;
use rand::Rng as _;
use rand_distr::{Distribution, Normal};

pub fn uniform_image(seed: u64, shape: &[usize]) -> Tensor {
    let mut r = rng::stream(seed, "uniform-image", 0);
    let n: usize = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| r.random::<f32>()).collect()).unwrap()
}

/// Smooth random image: a few random Gaussian bumps on a random background.
pub fn smooth_image(seed: u64, c: usize, e: usize) -> Tensor {
    let mut r = rng::stream(seed, "smooth-image", 0);
    let bumps: Vec<(f64, f64, f64, f64)> = (0..4)
        .map(|_| {
            (
                r.random_range(0.0..e as f64),
                r.random_range(0.0..e as f64),
                r.random_range(1.5..4.0),
                r.random_range(-0.4..0.4),
            )
        })
        .collect();
    let base: f64 = r.random_range(0.3..0.7);
    let mut d = Vec::with_capacity(c * e * e);
    for ch in 0..c {
        for y in 0..e {
            for x in 0..e {
                let mut v = base + 0.05 * ch as f64;
                for &(by, bx, s, a) in &bumps {
                    let d2 = (y as f64 - by).powi(2) + (x as f64 - bx).powi(2);
                    v += a * (-d2 / (2.0 * s * s)).exp();
                }
                d.push(v.clamp(0.0, 1.0) as f32);
            }
        }
    }
    Tensor::new(vec![c, e, e], d).unwrap()
}

/// `clamp(x + std · N(0, 1))`.
pub fn add_noise(x: &Tensor, std: f64, seed: u64) -> Tensor {
    let mut r = rng::stream(seed, "add-noise", 0);
    let n = Normal::new(0.0, std).unwrap();
    x.map(|v| (v as f64 + n.sample(&mut r)).clamp(0.0, 1.0) as f32)
}

/// Heavily corrupted counterpart of `x` drawn from one of four families:
/// strong noise, unrelated noise image, inversion, washed-out contrast.
pub fn severe_corruption(x: &Tensor, seed: u64) -> Tensor {
    let mut r = rng::stream(seed, "severe", 0);
    match r.random_range(0..4) {
        0 => add_noise(x, r.random_range(0.15..0.6), seed),
        1 => {
            let n = Normal::new(0.5f64, 0.3).unwrap();
            x.map(|_| n.sample(&mut r).clamp(0.0, 1.0) as f32)
        }
        2 => {
            let a: f32 = r.random_range(0.3..1.0);
            x.map(|v| (1.0 - v) * a)
        }
        _ => {
            let b: f32 = r.random_range(0.3..0.8);
            let noisy = add_noise(x, 0.2, seed);
            noisy.map(|v| (0.3 * v + b).clamp(0.0, 1.0))
        }
    }
}
