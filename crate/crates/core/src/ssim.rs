//! Structural similarity and the blend-back guard for over-corrupted images.
//!
//! SSIM uses an 11×11 Gaussian window (σ = 1.5, normalized), `K1 = 0.01`,
//! `K2 = 0.03` and a dynamic range of 1. Only window positions that fit
//! entirely inside the image are used; multi-channel images average the
//! per-channel means.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::autodiff::{Graph, Var};
use crate::error::{shape_err, Error, Result};
use crate::tensor::{image_dims, Tensor};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SsimConfig {
    pub window: usize,
    pub sigma: f64,
    pub k1: f64,
    pub k2: f64,
    pub range: f64,
}

impl Default for SsimConfig {
    fn default() -> Self {
        Self {
            window: 11,
            sigma: 1.5,
            k1: 0.01,
            k2: 0.03,
            range: 1.0,
        }
    }
}

impl SsimConfig {
    pub fn c1(&self) -> f64 {
        (self.k1 * self.range) * (self.k1 * self.range)
    }

    pub fn c2(&self) -> f64 {
        (self.k2 * self.range) * (self.k2 * self.range)
    }

    /// Row-major `window × window` Gaussian weights summing to one.
    pub fn weights(&self) -> Vec<f64> {
        let n = self.window;
        let c = (n as f64 - 1.0) / 2.0;
        let one: Vec<f64> = (0..n)
            .map(|i| {
                let d = i as f64 - c;
                libm::exp(-d * d / (2.0 * self.sigma * self.sigma))
            })
            .collect();
        let s: f64 = one.iter().sum();
        let one: Vec<f64> = one.into_iter().map(|v| v / s).collect();
        let mut w = Vec::with_capacity(n * n);
        for a in &one {
            for b in &one {
                w.push(a * b);
            }
        }
        w
    }
}

fn check_pair(a: &Tensor, b: &Tensor, cfg: &SsimConfig) -> Result<(usize, usize, usize)> {
    if a.shape() != b.shape() {
        return Err(shape_err(
            "ssim",
            format!("{:?} vs {:?}", a.shape(), b.shape()),
        ));
    }
    let (c, h, w) = image_dims(a)?;
    if h < cfg.window || w < cfg.window {
        return Err(Error::ImageTooSmall {
            extent: h.min(w),
            window: cfg.window,
        });
    }
    Ok((c, h, w))
}

/// Mean SSIM over valid window positions, computed in `f64`.
pub fn ssim(a: &Tensor, b: &Tensor, cfg: &SsimConfig) -> Result<f64> {
    let (c, h, w) = check_pair(a, b, cfg)?;
    let win = cfg.weights();
    let k = cfg.window;
    let (c1, c2) = (cfg.c1(), cfg.c2());
    let (oh, ow) = (h - k + 1, w - k + 1);
    let plane = h * w;
    let mut total = 0.0;
    for ch in 0..c {
        let pa = &a.data()[ch * plane..(ch + 1) * plane];
        let pb = &b.data()[ch * plane..(ch + 1) * plane];
        let mut acc = 0.0;
        for i in 0..oh {
            for j in 0..ow {
                let (mut ma, mut mb, mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0, 0.0, 0.0);
                for u in 0..k {
                    let row = (i + u) * w + j;
                    for v in 0..k {
                        let wt = win[u * k + v];
                        let (x, y) = (pa[row + v] as f64, pb[row + v] as f64);
                        ma += wt * x;
                        mb += wt * y;
                        saa += wt * x * x;
                        sbb += wt * y * y;
                        sab += wt * x * y;
                    }
                }
                let va = saa - ma * ma;
                let vb = sbb - mb * mb;
                let cov = sab - ma * mb;
                acc += ((2.0 * ma * mb + c1) * (2.0 * cov + c2))
                    / ((ma * ma + mb * mb + c1) * (va + vb + c2));
            }
        }
        total += acc / (oh * ow) as f64;
    }
    Ok(total / c as f64)
}

/// Differentiable mean SSIM recorded on `g`, returning a scalar var.
pub fn ssim_graph(g: &mut Graph, a: Var, b: Var, cfg: &SsimConfig) -> Result<Var> {
    let (ta, tb) = (g.value(a).clone(), g.value(b).clone());
    let (c, _, _) = check_pair(&ta, &tb, cfg)?;
    let k = cfg.window;
    let win = cfg.weights();
    // Block-diagonal [C, C, k, k] so every channel is filtered independently.
    let mut wd = vec![0.0f32; c * c * k * k];
    for ch in 0..c {
        for (i, &v) in win.iter().enumerate() {
            wd[(ch * c + ch) * k * k + i] = v as f32;
        }
    }
    let w = g.constant(Tensor::new(vec![c, c, k, k], wd)?)?;
    let filt = |g: &mut Graph, x: Var| g.conv2d(x, w, None, 1, 0);
    let mu_a = filt(g, a)?;
    let mu_b = filt(g, b)?;
    let aa = g.mul(a, a)?;
    let bb = g.mul(b, b)?;
    let ab = g.mul(a, b)?;
    let e_aa = filt(g, aa)?;
    let e_bb = filt(g, bb)?;
    let e_ab = filt(g, ab)?;
    let mu_aa = g.mul(mu_a, mu_a)?;
    let mu_bb = g.mul(mu_b, mu_b)?;
    let mu_ab = g.mul(mu_a, mu_b)?;
    let var_a = g.sub(e_aa, mu_aa)?;
    let var_b = g.sub(e_bb, mu_bb)?;
    let cov = g.sub(e_ab, mu_ab)?;

    let (c1, c2) = (cfg.c1() as f32, cfg.c2() as f32);
    let lum_n = g.scale(mu_ab, 2.0)?;
    let lum_n = g.add_scalar(lum_n, c1)?;
    let con_n = g.scale(cov, 2.0)?;
    let con_n = g.add_scalar(con_n, c2)?;
    let lum_d = g.add(mu_aa, mu_bb)?;
    let lum_d = g.add_scalar(lum_d, c1)?;
    let con_d = g.add(var_a, var_b)?;
    let con_d = g.add_scalar(con_d, c2)?;
    let num = g.mul(lum_n, con_n)?;
    let den = g.mul(lum_d, con_d)?;
    let map = g.div(num, den)?;
    g.mean(map)
}

/// `(1 - γ) x + γ x̂`; exact at `γ = 0` and `γ = 1`.
pub fn blend(x: &Tensor, x_hat: &Tensor, gamma: f64) -> Result<Tensor> {
    let g = gamma as f32;
    x.zip_map(x_hat, |a, b| (1.0 - g) * a + g * b)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearchConfig {
    pub threshold: f64,
    /// Equally spaced γ samples in `[0, 1]` for the quadratic fit.
    pub samples: usize,
    /// Grid size of the fallback scan.
    pub dense_resolution: usize,
    /// A fitted root is accepted only if `|ssim(x, x_γ*) − t|` is within this.
    pub root_tolerance: f64,
}

impl LineSearchConfig {
    pub fn new(threshold: f64) -> Self {
        Self {
            threshold,
            samples: 9,
            dense_resolution: 101,
            root_tolerance: 0.01,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GuardPath {
    /// SSIM already at or above the threshold.
    Inactive,
    QuadraticRoot,
    DenseScan,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GuardOutcome {
    pub image: Tensor,
    pub gamma: f64,
    pub path: GuardPath,
}

/// Ordinary least-squares fit of `c0 + c1 γ + c2 γ²`.
#[allow(clippy::needless_range_loop)]
pub fn fit_quadratic(xs: &[f64], ys: &[f64]) -> Option<[f64; 3]> {
    let mut m = [[0.0f64; 4]; 3];
    for (&x, &y) in xs.iter().zip(ys) {
        let p = [1.0, x, x * x];
        for r in 0..3 {
            for c in 0..3 {
                m[r][c] += p[r] * p[c];
            }
            m[r][3] += p[r] * y;
        }
    }
    // Gauss-Jordan with partial pivoting
    for col in 0..3 {
        let piv = (col..3).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[piv][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, piv);
        for r in 0..3 {
            if r != col {
                let f = m[r][col] / m[col][col];
                for c in col..4 {
                    m[r][c] -= f * m[col][c];
                }
            }
        }
    }
    Some([m[0][3] / m[0][0], m[1][3] / m[1][1], m[2][3] / m[2][2]])
}

/// Real roots of `c0 + c1 γ + c2 γ²`.
pub fn quadratic_roots(c: [f64; 3]) -> Vec<f64> {
    let [c0, c1, c2] = c;
    let scale = c0.abs().max(c1.abs()).max(c2.abs());
    if scale == 0.0 {
        return Vec::new();
    }
    if c2.abs() <= 1e-12 * scale {
        return if c1 == 0.0 { Vec::new() } else { vec![-c0 / c1] };
    }
    let disc = c1 * c1 - 4.0 * c2 * c0;
    if disc < 0.0 {
        return Vec::new();
    }
    let sq = libm::sqrt(disc);
    // numerically stable pair
    let q = -0.5 * (c1 + if c1 >= 0.0 { sq } else { -sq });
    let mut r = vec![q / c2];
    if q != 0.0 {
        r.push(c0 / q);
    }
    r
}

/// Largest grid γ with `ssim(x, x_γ) ≥ t`.
pub fn dense_scan_gamma(
    x: &Tensor,
    x_hat: &Tensor,
    threshold: f64,
    resolution: usize,
    cfg: &SsimConfig,
) -> Result<f64> {
    let n = resolution.max(2);
    for i in (0..n).rev() {
        let gamma = i as f64 / (n - 1) as f64;
        if ssim(x, &blend(x, x_hat, gamma)?, cfg)? >= threshold {
            return Ok(gamma);
        }
    }
    Ok(0.0)
}

/// Blend `x_hat` back toward `x` when `ssim(x, x_hat) < t`.
///
/// The threshold-shifted SSIM along the blend ray is sampled at the
/// configured γ values and fitted by a least-squares quadratic; its largest
/// real root inside `[0, 1]` is taken as γ*. One exact SSIM evaluation at γ*
/// checks the fit; if there is no such root, or the fit is off by more than
/// `root_tolerance`, the fallback scan picks the largest grid γ that meets
/// the threshold.
pub fn ssim_guard(
    x: &Tensor,
    x_hat: &Tensor,
    ls: &LineSearchConfig,
    cfg: &SsimConfig,
) -> Result<GuardOutcome> {
    let t = ls.threshold;
    if ssim(x, x_hat, cfg)? >= t {
        return Ok(GuardOutcome {
            image: x_hat.clone(),
            gamma: 1.0,
            path: GuardPath::Inactive,
        });
    }
    let n = ls.samples.max(3);
    let gammas: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
    let mut shifted = Vec::with_capacity(n);
    for &gm in &gammas {
        shifted.push(ssim(x, &blend(x, x_hat, gm)?, cfg)? - t);
    }
    let root = fit_quadratic(&gammas, &shifted).and_then(|c| {
        quadratic_roots(c)
            .into_iter()
            .filter(|r| (-1e-9..=1.0 + 1e-9).contains(r))
            .map(|r| r.clamp(0.0, 1.0))
            .max_by(f64::total_cmp)
    });
    let root = match root {
        Some(r) if (ssim(x, &blend(x, x_hat, r)?, cfg)? - t).abs() <= ls.root_tolerance => Some(r),
        _ => None,
    };
    let (gamma, path) = match root {
        Some(r) => (r, GuardPath::QuadraticRoot),
        None => (
            dense_scan_gamma(x, x_hat, t, ls.dense_resolution, cfg)?,
            GuardPath::DenseScan,
        ),
    };
    Ok(GuardOutcome {
        image: blend(x, x_hat, gamma)?,
        gamma,
        path,
    })
}
