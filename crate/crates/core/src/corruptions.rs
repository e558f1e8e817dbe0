//! Synthetic common corruptions at five severities, used for evaluation only.
//!
//! Severity tables (index = severity − 1):
//!
//! | kind            | parameter                     | 1    | 2    | 3    | 4    | 5    |
//! |-----------------|-------------------------------|------|------|------|------|------|
//! | gaussian_noise  | noise std                     | 0.04 | 0.06 | 0.08 | 0.10 | 0.12 |
//! | shot_noise      | photons per unit intensity    | 60   | 25   | 12   | 5    | 3    |
//! | impulse_noise   | replaced pixel fraction       | 0.03 | 0.06 | 0.09 | 0.17 | 0.27 |
//! | gaussian_blur   | kernel std (px)               | 0.5  | 0.75 | 1.0  | 1.25 | 1.5  |
//! | motion_blur     | line kernel length (px)       | 3    | 5    | 7    | 9    | 11   |
//! | contrast        | deviation scale               | 0.4  | 0.3  | 0.2  | 0.1  | 0.05 |
//! | brightness      | additive offset               | 0.05 | 0.10 | 0.15 | 0.20 | 0.25 |
//! | pixelate        | downsampled side / side       | 0.9  | 0.75 | 0.6  | 0.5  | 0.4  |
//! | elastic_lite    | displacement amplitude (px)   | 0.5  | 1.0  | 1.5  | 2.0  | 2.5  |
//!
//! Motion blur weights its line taps by a Gaussian with σ = length / 4.
//!
//! Random draws depend on the seed and kind but not on the severity.
//!
//! Borders are handled by clamping coordinates to the image, so constant
//! images survive every geometric corruption unchanged.

use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::Rng as _;
use rand_distr::{Distribution, Normal, Poisson};

use crate::error::{Error, Result};
use crate::rng;
use crate::tensor::{image_dims, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Kind {
    GaussianNoise,
    ShotNoise,
    ImpulseNoise,
    GaussianBlur,
    MotionBlur,
    Contrast,
    Brightness,
    Pixelate,
    ElasticLite,
}

pub const ALL_KINDS: [Kind; 9] = [
    Kind::GaussianNoise,
    Kind::ShotNoise,
    Kind::ImpulseNoise,
    Kind::GaussianBlur,
    Kind::MotionBlur,
    Kind::Contrast,
    Kind::Brightness,
    Kind::Pixelate,
    Kind::ElasticLite,
];

pub const SEVERITIES: usize = 5;

pub const GAUSSIAN_NOISE_STD: [f64; 5] = [0.04, 0.06, 0.08, 0.10, 0.12];
pub const SHOT_NOISE_PHOTONS: [f64; 5] = [60.0, 25.0, 12.0, 5.0, 3.0];
pub const IMPULSE_FRACTION: [f64; 5] = [0.03, 0.06, 0.09, 0.17, 0.27];
pub const BLUR_SIGMA: [f64; 5] = [0.5, 0.75, 1.0, 1.25, 1.5];
pub const MOTION_LENGTH: [usize; 5] = [3, 5, 7, 9, 11];
pub const CONTRAST_SCALE: [f64; 5] = [0.4, 0.3, 0.2, 0.1, 0.05];
pub const BRIGHTNESS_OFFSET: [f32; 5] = [0.05, 0.10, 0.15, 0.20, 0.25];
pub const PIXELATE_FRACTION: [f64; 5] = [0.9, 0.75, 0.6, 0.5, 0.4];
pub const ELASTIC_AMPLITUDE: [f64; 5] = [0.5, 1.0, 1.5, 2.0, 2.5];

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::GaussianNoise => "gaussian_noise",
            Kind::ShotNoise => "shot_noise",
            Kind::ImpulseNoise => "impulse_noise",
            Kind::GaussianBlur => "gaussian_blur",
            Kind::MotionBlur => "motion_blur",
            Kind::Contrast => "contrast",
            Kind::Brightness => "brightness",
            Kind::Pixelate => "pixelate",
            Kind::ElasticLite => "elastic_lite",
        }
    }

    /// Severity parameter as `f64`, for monotonicity checks and reports.
    pub fn parameter(self, severity: usize) -> f64 {
        let i = severity - 1;
        match self {
            Kind::GaussianNoise => GAUSSIAN_NOISE_STD[i],
            Kind::ShotNoise => SHOT_NOISE_PHOTONS[i],
            Kind::ImpulseNoise => IMPULSE_FRACTION[i],
            Kind::GaussianBlur => BLUR_SIGMA[i],
            Kind::MotionBlur => MOTION_LENGTH[i] as f64,
            Kind::Contrast => CONTRAST_SCALE[i],
            Kind::Brightness => BRIGHTNESS_OFFSET[i] as f64,
            Kind::Pixelate => PIXELATE_FRACTION[i],
            Kind::ElasticLite => ELASTIC_AMPLITUDE[i],
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Kind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ALL_KINDS
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::UnknownCorruption(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CorruptionSpec {
    pub kind: Kind,
    pub severity: usize,
    pub seed: u64,
}

pub fn corrupt(x: &Tensor, spec: &CorruptionSpec) -> Result<Tensor> {
    if !(1..=SEVERITIES).contains(&spec.severity) {
        return Err(Error::InvalidConfig(format!(
            "severity must be in 1..=5, got {}",
            spec.severity
        )));
    }
    let dims = image_dims(x)?;
    let i = spec.severity - 1;
    // One stream per (seed, kind) shared by all severities, so a higher
    // severity scales the same noise field, mask or direction.
    let mut r = rng::stream(spec.seed, spec.kind.name(), 0);
    let out = match spec.kind {
        Kind::GaussianNoise => {
            let n = Normal::new(0.0, GAUSSIAN_NOISE_STD[i]).expect("positive std");
            x.map(|v| (v as f64 + n.sample(&mut r)) as f32)
        }
        Kind::ShotNoise => {
            let lam = SHOT_NOISE_PHOTONS[i];
            x.map(|v| {
                let rate = (v as f64).max(0.0) * lam;
                let k = if rate > 0.0 {
                    Poisson::new(rate).expect("positive rate").sample(&mut r)
                } else {
                    0.0
                };
                (k / lam) as f32
            })
        }
        Kind::ImpulseNoise => impulse(x, IMPULSE_FRACTION[i], &mut r),
        Kind::GaussianBlur => gaussian_blur(x, dims, BLUR_SIGMA[i]),
        Kind::MotionBlur => motion_blur(x, dims, MOTION_LENGTH[i], r.random_range(0..4)),
        Kind::Contrast => {
            let c = CONTRAST_SCALE[i];
            per_channel(x, dims, |plane| {
                let m = plane.iter().map(|&v| v as f64).sum::<f64>() / plane.len() as f64;
                plane.iter().map(|&v| ((v as f64 - m) * c + m) as f32).collect()
            })
        }
        Kind::Brightness => {
            let o = BRIGHTNESS_OFFSET[i];
            x.map(|v| v + o)
        }
        Kind::Pixelate => pixelate(x, dims, PIXELATE_FRACTION[i]),
        Kind::ElasticLite => elastic(x, dims, ELASTIC_AMPLITUDE[i], &mut r),
    };
    Ok(out.clamp(0.0, 1.0))
}

/// Replace each pixel independently with probability `p` by 0 or 1.
fn impulse(x: &Tensor, p: f64, r: &mut rng::Rng) -> Tensor {
    x.map(|v| {
        let (u, salt) = (r.random::<f64>(), r.random::<bool>());
        match (u < p, salt) {
            (false, _) => v,
            (true, true) => 1.0,
            (true, false) => 0.0,
        }
    })
}

fn per_channel(
    x: &Tensor,
    (c, h, w): (usize, usize, usize),
    f: impl Fn(&[f32]) -> Vec<f32>,
) -> Tensor {
    let plane = h * w;
    let mut data = Vec::with_capacity(x.len());
    for ch in 0..c {
        data.extend(f(&x.data()[ch * plane..(ch + 1) * plane]));
    }
    Tensor::new(x.shape().to_vec(), data).expect("same shape")
}

fn clamp_idx(i: isize, n: usize) -> usize {
    i.clamp(0, n as isize - 1) as usize
}

/// Convolution with a sparse list of `(dy, dx, weight)` taps and edge clamping.
fn filter_taps(x: &Tensor, dims: (usize, usize, usize), taps: &[(isize, isize, f64)]) -> Tensor {
    let (_, h, w) = dims;
    per_channel(x, dims, |p| {
        let mut out = vec![0.0f32; h * w];
        for i in 0..h {
            for j in 0..w {
                let mut acc = 0.0f64;
                for &(dy, dx, wt) in taps {
                    let y = clamp_idx(i as isize + dy, h);
                    let xx = clamp_idx(j as isize + dx, w);
                    acc += wt * p[y * w + xx] as f64;
                }
                out[i * w + j] = acc as f32;
            }
        }
        out
    })
}

pub fn gaussian_blur(x: &Tensor, dims: (usize, usize, usize), sigma: f64) -> Tensor {
    let radius = libm::ceil(3.0 * sigma) as isize;
    let one: Vec<f64> = (-radius..=radius)
        .map(|d| libm::exp(-((d * d) as f64) / (2.0 * sigma * sigma)))
        .collect();
    let s: f64 = one.iter().sum();
    let mut taps = Vec::new();
    for (a, wa) in (-radius..=radius).zip(&one) {
        for (b, wb) in (-radius..=radius).zip(&one) {
            taps.push((a, b, wa * wb / (s * s)));
        }
    }
    filter_taps(x, dims, &taps)
}

/// Gaussian-weighted line kernel; `direction` 0..4 selects 0°, 45°, 90° or 135°.
fn motion_blur(x: &Tensor, dims: (usize, usize, usize), length: usize, direction: u32) -> Tensor {
    let (sy, sx) = match direction {
        0 => (0, 1),
        1 => (1, 1),
        2 => (1, 0),
        _ => (1, -1),
    };
    let half = (length / 2) as isize;
    let sigma = length as f64 / 4.0;
    let raw: Vec<f64> = (-half..=half)
        .map(|k| libm::exp(-((k * k) as f64) / (2.0 * sigma * sigma)))
        .collect();
    let total: f64 = raw.iter().sum();
    let taps: Vec<_> = (-half..=half)
        .zip(raw)
        .map(|(k, w)| (k * sy, k * sx, w / total))
        .collect();
    filter_taps(x, dims, &taps)
}

/// Box-average onto a coarser grid, then nearest-neighbour back up.
fn pixelate(x: &Tensor, dims: (usize, usize, usize), fraction: f64) -> Tensor {
    let (_, h, w) = dims;
    let sh = (libm::round(h as f64 * fraction) as usize).clamp(1, h);
    let sw = (libm::round(w as f64 * fraction) as usize).clamp(1, w);
    per_channel(x, dims, |p| {
        let mut sum = vec![0.0f64; sh * sw];
        let mut cnt = vec![0usize; sh * sw];
        let bin = |i: usize, n: usize, s: usize| i * s / n;
        for i in 0..h {
            for j in 0..w {
                let b = bin(i, h, sh) * sw + bin(j, w, sw);
                sum[b] += p[i * w + j] as f64;
                cnt[b] += 1;
            }
        }
        let mut out = vec![0.0f32; h * w];
        for i in 0..h {
            for j in 0..w {
                let b = bin(i, h, sh) * sw + bin(j, w, sw);
                out[i * w + j] = (sum[b] / cnt[b] as f64) as f32;
            }
        }
        out
    })
}

fn bilinear(p: &[f32], h: usize, w: usize, y: f64, x: f64) -> f64 {
    let y = y.clamp(0.0, (h - 1) as f64);
    let x = x.clamp(0.0, (w - 1) as f64);
    let (y0, x0) = (libm::floor(y) as usize, libm::floor(x) as usize);
    let (y1, x1) = ((y0 + 1).min(h - 1), (x0 + 1).min(w - 1));
    let (fy, fx) = (y - y0 as f64, x - x0 as f64);
    let at = |a: usize, b: usize| p[a * w + b] as f64;
    (1.0 - fy) * ((1.0 - fx) * at(y0, x0) + fx * at(y0, x1))
        + fy * ((1.0 - fx) * at(y1, x0) + fx * at(y1, x1))
}

/// Smooth random displacement from a 4×4 control grid, shared by all channels.
fn elastic(x: &Tensor, dims: (usize, usize, usize), amplitude: f64, r: &mut rng::Rng) -> Tensor {
    let (_, h, w) = dims;
    const G: usize = 4;
    let ctrl_y: Vec<f32> = (0..G * G).map(|_| r.random_range(-1.0f32..1.0)).collect();
    let ctrl_x: Vec<f32> = (0..G * G).map(|_| r.random_range(-1.0f32..1.0)).collect();
    let field = |ctrl: &[f32], i: usize, j: usize| {
        let gy = i as f64 * (G - 1) as f64 / (h - 1).max(1) as f64;
        let gx = j as f64 * (G - 1) as f64 / (w - 1).max(1) as f64;
        amplitude * bilinear(ctrl, G, G, gy, gx)
    };
    per_channel(x, dims, |p| {
        let mut out = vec![0.0f32; h * w];
        for i in 0..h {
            for j in 0..w {
                let y = i as f64 + field(&ctrl_y, i, j);
                let xx = j as f64 + field(&ctrl_x, i, j);
                out[i * w + j] = bilinear(p, h, w, y, xx) as f32;
            }
        }
        out
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(kind: Kind, severity: usize) -> CorruptionSpec {
        CorruptionSpec {
            kind,
            severity,
            seed: 17,
        }
    }

    #[test]
    fn tables_strictly_monotone() {
        for k in ALL_KINDS {
            let p: Vec<f64> = (1..=5).map(|s| k.parameter(s)).collect();
            let inc = p.windows(2).all(|w| w[1] > w[0]);
            let dec = p.windows(2).all(|w| w[1] < w[0]);
            assert!(inc || dec, "{}", k);
        }
    }

    #[test]
    fn brightness_on_black() {
        let x = Tensor::zeros(&[1, 16, 16]);
        let y = corrupt(&x, &spec(Kind::Brightness, 1)).unwrap();
        assert!(y.data().iter().all(|&v| v == 0.05));
    }

    #[test]
    fn geometric_corruptions_keep_constants() {
        let x = Tensor::full(&[1, 16, 16], 0.4);
        for k in [Kind::GaussianBlur, Kind::MotionBlur, Kind::Pixelate, Kind::ElasticLite, Kind::Contrast] {
            let y = corrupt(&x, &spec(k, 1)).unwrap();
            for &v in y.data() {
                assert!((v - 0.4).abs() < 1e-6, "{}: {}", k, v);
            }
        }
    }

    #[test]
    fn impulse_fraction_matches() {
        let x = Tensor::full(&[1, 100, 100], 0.5);
        for s in 1..=5 {
            let y = corrupt(&x, &spec(Kind::ImpulseNoise, s)).unwrap();
            let changed = y.data().iter().filter(|&&v| v != 0.5).count() as f64 / 1e4;
            assert!((changed - IMPULSE_FRACTION[s - 1]).abs() <= 0.02, "{} {}", s, changed);
        }
    }

    #[test]
    fn unknown_kind_and_bad_severity() {
        assert_eq!("fog".parse::<Kind>(), Err(Error::UnknownCorruption("fog".into())));
        assert!(corrupt(&Tensor::zeros(&[1, 4, 4]), &spec(Kind::Contrast, 6)).is_err());
        for k in ALL_KINDS {
            assert_eq!(k.name().parse::<Kind>().unwrap(), k);
        }
    }

    #[test]
    fn deterministic_and_in_range() {
        let mut r = crate::rng::stream(3, "t", 0);
        let x = Tensor::new(vec![1, 16, 16], (0..256).map(|_| r.random::<f32>()).collect()).unwrap();
        for k in ALL_KINDS {
            for s in 1..=5 {
                let a = corrupt(&x, &spec(k, s)).unwrap();
                let b = corrupt(&x, &spec(k, s)).unwrap();
                assert_eq!(a, b);
                assert!(a.min() >= 0.0 && a.max() <= 1.0);
            }
        }
    }
}
