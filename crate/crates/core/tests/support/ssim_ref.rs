//! Straight-from-formula SSIM in f64: 2-D Gaussian window normalized over
//! all 121 taps, two-pass weighted moments, valid positions only.

#![allow(dead_code, clippy::needless_range_loop)]

use ada_core::Tensor;

const K: usize = 11;
const SIGMA: f64 = 1.5;
const C1: f64 = 0.01 * 0.01;
const C2: f64 = 0.03 * 0.03;

fn window() -> [[f64; K]; K] {
    let mut w = [[0.0; K]; K];
    let mut total = 0.0;
    for (i, row) in w.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            let (di, dj) = (i as f64 - 5.0, j as f64 - 5.0);
            *v = (-(di * di + dj * dj) / (2.0 * SIGMA * SIGMA)).exp();
            total += *v;
        }
    }
    for row in w.iter_mut() {
        for v in row.iter_mut() {
            *v /= total;
        }
    }
    w
}

pub fn ssim_ref(a: &Tensor, b: &Tensor) -> f64 {
    let s = a.shape();
    let (c, h, w) = (s[0], s[1], s[2]);
    let win = window();
    let px = |t: &Tensor, ch: usize, y: usize, x: usize| t.data()[(ch * h + y) * w + x] as f64;
    let mut per_channel = Vec::new();
    for ch in 0..c {
        let mut vals = Vec::new();
        for y0 in 0..=h - K {
            for x0 in 0..=w - K {
                let (mut ma, mut mb) = (0.0, 0.0);
                for u in 0..K {
                    for v in 0..K {
                        ma += win[u][v] * px(a, ch, y0 + u, x0 + v);
                        mb += win[u][v] * px(b, ch, y0 + u, x0 + v);
                    }
                }
                let (mut va, mut vb, mut cov) = (0.0, 0.0, 0.0);
                for u in 0..K {
                    for v in 0..K {
                        let da = px(a, ch, y0 + u, x0 + v) - ma;
                        let db = px(b, ch, y0 + u, x0 + v) - mb;
                        va += win[u][v] * da * da;
                        vb += win[u][v] * db * db;
                        cov += win[u][v] * da * db;
                    }
                }
                vals.push(
                    (2.0 * ma * mb + C1) * (2.0 * cov + C2) / ((ma * ma + mb * mb + C1) * (va + vb + C2)),
                );
            }
        }
        per_channel.push(vals.iter().sum::<f64>() / vals.len() as f64);
    }
    per_channel.iter().sum::<f64>() / c as f64
}

/// `(1 − γ) x + γ x̂` evaluated the way the library does, in f32.
pub fn blend_ref(x: &Tensor, x_hat: &Tensor, gamma: f64) -> Tensor {
    let g = gamma as f32;
    let d = x.data().iter().zip(x_hat.data()).map(|(&a, &b)| (1.0 - g) * a + g * b).collect();
    Tensor::new(x.shape().to_vec(), d).unwrap()
}

/// Largest of `n` equally spaced γ in [0, 1] with `ssim_ref(x, x_γ) ≥ t`.
pub fn dense_gamma_ref(x: &Tensor, x_hat: &Tensor, t: f64, n: usize) -> f64 {
    (0..n)
        .rev()
        .map(|i| i as f64 / (n - 1) as f64)
        .find(|&g| ssim_ref(x, &blend_ref(x, x_hat, g)) >= t)
        .unwrap_or(0.0)
}
