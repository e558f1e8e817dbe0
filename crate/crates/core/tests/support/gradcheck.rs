//! Central finite-difference oracle for the autodiff ops.
//!
//! Each case builds an op on fresh leaves. The loss is `Σ out ⊙ r` for a fixed
//! random `r`; the oracle re-runs the forward at `x ± h` and accumulates that
//! sum in f64. A coordinate is skipped when its one-sided differences
//! disagree, which only happens at a kink (ReLU, abs, clamp).

#![allow(dead_code)]

use ada_core::autodiff::{Graph, Var};
use ada_core::rng;
use ada_core::Tensor;
use rand::Rng as _;

pub const H: f32 = 1e-3;

pub type Build = fn(&mut Graph, &[Var]) -> ada_core::Result<Var>;

pub struct OpCase {
    pub name: &'static str,
    pub shapes: &'static [&'static [usize]],
    /// Lower bound on |value| of sampled inputs, e.g. for denominators.
    pub away_from_zero: f32,
    pub build: Build,
}

fn uniform(r: &mut rng::Rng, shape: &[usize], away: f32) -> Tensor {
    let n: usize = shape.iter().product();
    let d = (0..n)
        .map(|_| {
            let v: f32 = r.random_range(-1.0..1.0);
            if away > 0.0 {
                v.signum() * (away + v.abs())
            } else {
                v
            }
        })
        .collect();
    Tensor::new(shape.to_vec(), d).unwrap()
}

pub fn cases() -> Vec<OpCase> {
    vec![
        OpCase { name: "add", shapes: &[&[2, 3], &[2, 3]], away_from_zero: 0.0, build: |g, v| g.add(v[0], v[1]) },
        OpCase { name: "sub", shapes: &[&[2, 3], &[2, 3]], away_from_zero: 0.0, build: |g, v| g.sub(v[0], v[1]) },
        OpCase { name: "mul", shapes: &[&[2, 3], &[2, 3]], away_from_zero: 0.0, build: |g, v| g.mul(v[0], v[1]) },
        OpCase { name: "div", shapes: &[&[2, 3], &[2, 3]], away_from_zero: 0.5, build: |g, v| g.div(v[0], v[1]) },
        OpCase { name: "scale", shapes: &[&[5]], away_from_zero: 0.0, build: |g, v| g.scale(v[0], -1.7) },
        OpCase { name: "add_scalar", shapes: &[&[5]], away_from_zero: 0.0, build: |g, v| g.add_scalar(v[0], 0.3) },
        OpCase { name: "relu", shapes: &[&[8]], away_from_zero: 0.0, build: |g, v| g.relu(v[0]) },
        OpCase { name: "abs", shapes: &[&[8]], away_from_zero: 0.0, build: |g, v| g.abs(v[0]) },
        OpCase { name: "clamp", shapes: &[&[8]], away_from_zero: 0.0, build: |g, v| g.clamp(v[0], -0.5, 0.5) },
        OpCase { name: "reshape", shapes: &[&[2, 3]], away_from_zero: 0.0, build: |g, v| g.reshape(v[0], &[3, 2]) },
        OpCase { name: "blend", shapes: &[&[1, 3, 3], &[1, 3, 3]], away_from_zero: 0.0, build: |g, v| g.blend(v[0], v[1], 0.35) },
        OpCase { name: "matmul", shapes: &[&[3, 4], &[4, 2]], away_from_zero: 0.0, build: |g, v| g.matmul(v[0], v[1]) },
        OpCase {
            name: "conv2d_s1",
            shapes: &[&[2, 5, 5], &[3, 2, 3, 3], &[3]],
            away_from_zero: 0.0,
            build: |g, v| g.conv2d(v[0], v[1], Some(v[2]), 1, 1),
        },
        OpCase {
            name: "conv2d_s2",
            shapes: &[&[2, 6, 6], &[3, 2, 3, 3]],
            away_from_zero: 0.0,
            build: |g, v| g.conv2d(v[0], v[1], None, 2, 1),
        },
        OpCase {
            name: "conv2d_nopad",
            shapes: &[&[1, 4, 4], &[2, 1, 2, 2]],
            away_from_zero: 0.0,
            build: |g, v| g.conv2d(v[0], v[1], None, 1, 0),
        },
        OpCase {
            name: "conv_transpose2d",
            shapes: &[&[3, 3, 3], &[3, 2, 4, 4], &[2]],
            away_from_zero: 0.0,
            build: |g, v| g.conv_transpose2d(v[0], v[1], Some(v[2]), 2, 1),
        },
        OpCase { name: "sum", shapes: &[&[2, 3]], away_from_zero: 0.0, build: |g, v| g.sum(v[0]) },
        OpCase { name: "mean", shapes: &[&[2, 3]], away_from_zero: 0.0, build: |g, v| g.mean(v[0]) },
        OpCase { name: "softmax", shapes: &[&[2, 4]], away_from_zero: 0.0, build: |g, v| g.softmax(v[0]) },
        OpCase { name: "cross_entropy", shapes: &[&[5]], away_from_zero: 0.0, build: |g, v| g.cross_entropy(v[0], 2) },
        OpCase {
            name: "conv_net_6x6",
            shapes: &[&[1, 6, 6], &[4, 1, 3, 3], &[4], &[2, 4, 3, 3], &[2]],
            away_from_zero: 0.0,
            build: |g, v| {
                let h = g.conv2d(v[0], v[1], Some(v[2]), 1, 1)?;
                let h = g.relu(h)?;
                g.conv2d(h, v[3], Some(v[4]), 2, 1)
            },
        },
    ]
}

fn forward(case: &OpCase, inputs: &[Tensor]) -> Tensor {
    let mut g = Graph::new();
    let vars: Vec<Var> = inputs.iter().map(|t| g.constant(t.clone()).unwrap()).collect();
    let out = (case.build)(&mut g, &vars).unwrap();
    g.value(out).clone()
}

fn dot(a: &Tensor, r: &[f32]) -> f64 {
    a.data().iter().zip(r).map(|(&x, &w)| x as f64 * w as f64).sum()
}

#[derive(Debug, Clone, Copy)]
pub struct CheckResult {
    pub rel_error: f64,
    pub checked: usize,
    pub skipped: usize,
}

/// Max over inputs of `max|analytic − numeric| / max(‖analytic‖∞, ‖numeric‖∞, 1e-6)`.
pub fn check(case: &OpCase, seed: u64) -> CheckResult {
    let mut r = rng::stream(seed, case.name, 0);
    let inputs: Vec<Tensor> = case.shapes.iter().map(|s| uniform(&mut r, s, case.away_from_zero)).collect();
    let out_shape = forward(case, &inputs).shape().to_vec();
    let out_len: usize = out_shape.iter().product();
    let weights: Vec<f32> = (0..out_len).map(|_| r.random_range(-1.0..1.0)).collect();

    let mut g = Graph::new();
    let vars: Vec<Var> = inputs.iter().map(|t| g.leaf(t.clone(), true).unwrap()).collect();
    let out = (case.build)(&mut g, &vars).unwrap();
    let rv = g.constant(Tensor::new(out_shape.clone(), weights.clone()).unwrap()).unwrap();
    let prod = g.mul(out, rv).unwrap();
    let loss = g.sum(prod).unwrap();
    g.backward(loss).unwrap();

    let mut worst = 0.0f64;
    let (mut checked, mut skipped) = (0, 0);
    for (k, input) in inputs.iter().enumerate() {
        let analytic = g.grad(vars[k]).cloned().unwrap_or_else(|| Tensor::zeros(input.shape()));
        let mut numeric = vec![0.0f64; input.len()];
        let mut keep = vec![true; input.len()];
        for i in 0..input.len() {
            let at = |delta: f32| {
                let mut xs = inputs.to_vec();
                let v = xs[k].data()[i] + delta;
                xs[k].data_mut()[i] = v;
                (v as f64, dot(&forward(case, &xs), &weights))
            };
            let (xp, fp) = at(H);
            let (x0, f0) = at(0.0);
            let (xm, fm) = at(-H);
            let fwd = (fp - f0) / (xp - x0);
            let bwd = (f0 - fm) / (x0 - xm);
            if (fwd - bwd).abs() > 1e-2 * fwd.abs().max(bwd.abs()).max(1.0) {
                keep[i] = false;
                skipped += 1;
                continue;
            }
            numeric[i] = (fp - fm) / (xp - xm);
            checked += 1;
        }
        let a: Vec<f64> = analytic.data().iter().map(|&v| v as f64).collect();
        let scale = a
            .iter()
            .zip(&numeric)
            .zip(&keep)
            .filter(|(_, &k)| k)
            .fold(1e-6f64, |m, ((x, y), _)| m.max(x.abs()).max(y.abs()));
        for i in 0..a.len() {
            if keep[i] {
                worst = worst.max((a[i] - numeric[i]).abs() / scale);
            }
        }
    }
    CheckResult {
        rel_error: worst,
        checked,
        skipped,
    }
}
