//! Measurement procedures: corruption-suite error and mCE, input-space PGD,
//! stochastic parameter noise, SSIM reconstruction of a target corruption
//! and the distribution of pre-guard SSIM under AdA.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::Rng as _;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::autodiff::{sign, Graph};
use crate::corruptions::{corrupt, CorruptionSpec, Kind, SEVERITIES};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::nets::{argmax, corruption_graph, forward_corruption, Classify, Model, Net, ParamSet};
use crate::optim::{adam_step, AdamState};
use crate::perturb::{find_adversarial, AdaConfig, PerturbationSet};
use crate::rng;
use crate::ssim::{ssim, ssim_graph, SsimConfig};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Norm {
    L2,
    Linf,
}

impl Norm {
    pub fn name(self) -> &'static str {
        match self {
            Norm::L2 => "l2",
            Norm::Linf => "linf",
        }
    }

    pub fn of(self, t: &Tensor) -> f64 {
        match self {
            Norm::L2 => t.l2_norm(),
            Norm::Linf => t.linf_norm() as f64,
        }
    }
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Norm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l2" => Ok(Norm::L2),
            "linf" => Ok(Norm::Linf),
            _ => Err(Error::InvalidConfig(format!("unknown norm {:?}", s))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobustEntry {
    pub norm: Norm,
    pub eps: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub kinds: Vec<Kind>,
    /// `errors[k][s]`: top-1 error of kind `k` at severity `s + 1`.
    pub errors: Vec<[f64; SEVERITIES]>,
    pub kind_means: Vec<f64>,
    pub mce: f64,
    pub clean_error: f64,
    pub robust: Vec<RobustEntry>,
    pub examples: usize,
    pub seed: u64,
}

/// Mean over kinds of the per-kind mean over severities.
pub fn mce_from_matrix(errors: &[[f64; SEVERITIES]]) -> f64 {
    let means: Vec<f64> = errors.iter().map(|r| r.iter().sum::<f64>() / SEVERITIES as f64).collect();
    means.iter().sum::<f64>() / means.len() as f64
}

fn error_rate<E: Executor + ?Sized>(
    clf: &dyn Classify,
    data: &Dataset,
    exec: &E,
    f: impl Fn(usize) -> Result<Tensor> + Sync + Send,
) -> Result<f64> {
    let wrong = exec.map(data.len(), |i| -> Result<bool> {
        let x = f(i)?;
        Ok(clf.predict(&x)? != data.labels[i])
    });
    let mut n = 0usize;
    for w in wrong {
        n += w? as usize;
    }
    Ok(n as f64 / data.len() as f64)
}

/// Top-1 error on clean data and on every `(kind, severity)` of `kinds`.
/// Corruption randomness for example `i` derives from `(seed, i)`.
pub fn evaluate_corruptions<E: Executor + ?Sized>(
    clf: &dyn Classify,
    data: &Dataset,
    kinds: &[Kind],
    seed: u64,
    exec: &E,
) -> Result<EvalReport> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if kinds.is_empty() {
        return Err(Error::InvalidConfig("empty corruption suite".into()));
    }
    let clean_error = error_rate(clf, data, exec, |i| Ok(data.images[i].clone()))?;
    let mut errors = Vec::with_capacity(kinds.len());
    for &kind in kinds {
        let mut row = [0.0; SEVERITIES];
        for (s, e) in row.iter_mut().enumerate() {
            *e = error_rate(clf, data, exec, |i| {
                let spec = CorruptionSpec {
                    kind,
                    severity: s + 1,
                    seed: rng::derive_seed(seed, "eval-example", i as u64),
                };
                corrupt(&data.images[i], &spec)
            })?;
        }
        errors.push(row);
    }
    let kind_means: Vec<f64> = errors.iter().map(|r| r.iter().sum::<f64>() / SEVERITIES as f64).collect();
    let mce = kind_means.iter().sum::<f64>() / kind_means.len() as f64;
    Ok(EvalReport {
        kinds: kinds.to_vec(),
        errors,
        kind_means,
        mce,
        clean_error,
        robust: Vec::new(),
        examples: data.len(),
        seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PgdConfig {
    pub norm: Norm,
    pub eps: f64,
    pub steps: usize,
    pub restarts: usize,
    /// Defaults to `2ε / steps`.
    pub step_size: Option<f64>,
    pub seed: u64,
}

impl PgdConfig {
    pub fn new(norm: Norm, eps: f64) -> Self {
        Self {
            norm,
            eps,
            steps: 100,
            restarts: 10,
            step_size: None,
            seed: 0,
        }
    }

    fn step(&self) -> f64 {
        match self.step_size {
            Some(s) => s,
            None if self.steps > 0 => 2.0 * self.eps / self.steps as f64,
            None => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PgdResult {
    /// Iterate of the restart with the highest final loss.
    pub x_adv: Tensor,
    pub loss: f32,
    /// Some restart ended misclassified.
    pub success: bool,
}

/// Project `x_adv` onto the ε-ball around `x`, then onto `[0, 1]`.
/// Clamping only shrinks coordinates of the offset, so both constraints hold.
pub fn project_input(x: &Tensor, x_adv: &Tensor, norm: Norm, eps: f64) -> Result<Tensor> {
    let d = x_adv.zip_map(x, |a, b| a - b)?;
    let d = match norm {
        Norm::Linf => d.map(|v| v.clamp(-eps as f32, eps as f32)),
        Norm::L2 => {
            let n = d.l2_norm();
            if n > eps {
                let mut k = eps / n;
                loop {
                    let s = d.map(|v| (v as f64 * k) as f32);
                    if s.l2_norm() <= eps || k == 0.0 {
                        break s;
                    }
                    k *= 1.0 - 1e-7;
                }
            } else {
                d
            }
        }
    };
    x.zip_map(&d, |a, b| (a + b).clamp(0.0, 1.0))
}

fn input_grad(clf: &dyn Classify, x: &Tensor, y: usize) -> Result<(f32, Tensor, usize)> {
    let mut g = Graph::new();
    let xv = g.leaf(x.clone(), true)?;
    let z = clf.logits(&mut g, xv)?;
    let pred = argmax(g.value(z).data());
    let loss = g.cross_entropy(z, y)?;
    let l = g.value(loss).data()[0];
    g.backward(loss)?;
    let grad = g.grad(xv).cloned().unwrap_or_else(|| Tensor::zeros(x.shape()));
    Ok((l, grad, pred))
}

fn random_start(x: &Tensor, cfg: &PgdConfig, r: &mut rng::Rng) -> Tensor {
    let n = x.len();
    let d: Vec<f32> = match cfg.norm {
        Norm::Linf => (0..n).map(|_| r.random_range(-1.0..=1.0) * cfg.eps as f32).collect(),
        Norm::L2 => {
            let dir: Vec<f64> = (0..n).map(|_| StandardNormal.sample(r)).collect();
            let len = libm::sqrt(dir.iter().map(|v| v * v).sum::<f64>()).max(1e-300);
            let rad = r.random::<f64>() * cfg.eps;
            dir.into_iter().map(|v| (v / len * rad) as f32).collect()
        }
    };
    let d = Tensor::new(x.shape().to_vec(), d).expect("same shape");
    x.zip_map(&d, |a, b| a + b).expect("same shape")
}

/// Like [`pgd_input_attack`]; `observe` sees every projected iterate.
pub fn pgd_input_attack_observed(
    clf: &dyn Classify,
    x: &Tensor,
    y: usize,
    cfg: &PgdConfig,
    observe: &mut dyn FnMut(&Tensor),
) -> Result<PgdResult> {
    let step = cfg.step();
    let mut best: Option<PgdResult> = None;
    let mut success = false;
    for restart in 0..cfg.restarts.max(1) {
        let mut r = rng::stream(cfg.seed, "pgd-restart", restart as u64);
        let mut cur = project_input(x, &random_start(x, cfg, &mut r), cfg.norm, cfg.eps)?;
        observe(&cur);
        for _ in 0..cfg.steps {
            let (_, grad, _) = input_grad(clf, &cur, y)?;
            let dir = match cfg.norm {
                Norm::Linf => grad.map(sign),
                Norm::L2 => {
                    let n = grad.l2_norm();
                    if n > 0.0 {
                        grad.map(|v| (v as f64 / n) as f32)
                    } else {
                        grad
                    }
                }
            };
            let next = cur.zip_map(&dir, |a, d| a + step as f32 * d)?;
            cur = project_input(x, &next, cfg.norm, cfg.eps)?;
            observe(&cur);
        }
        let (loss, _, pred) = input_grad(clf, &cur, y)?;
        success |= pred != y;
        if best.as_ref().is_none_or(|b| loss > b.loss) {
            best = Some(PgdResult {
                x_adv: cur,
                loss,
                success: false,
            });
        }
    }
    let mut out = best.expect("at least one restart");
    out.success = success;
    Ok(out)
}

/// Multi-restart PGD on the cross-entropy in input space.
pub fn pgd_input_attack(clf: &dyn Classify, x: &Tensor, y: usize, cfg: &PgdConfig) -> Result<PgdResult> {
    pgd_input_attack_observed(clf, x, y, cfg, &mut |_| {})
}

/// Accuracy under [`pgd_input_attack`]; example `i` uses seed `(cfg.seed, i)`.
pub fn robust_accuracy<E: Executor + ?Sized>(
    clf: &dyn Classify,
    data: &Dataset,
    cfg: &PgdConfig,
    exec: &E,
) -> Result<RobustEntry> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let res = exec.map(data.len(), |i| {
        let mut c = *cfg;
        c.seed = rng::derive_seed(cfg.seed, "pgd-example", i as u64);
        pgd_input_attack(clf, &data.images[i], data.labels[i], &c).map(|r| r.success)
    });
    let mut ok = 0usize;
    for s in res {
        ok += !s? as usize;
    }
    Ok(RobustEntry {
        norm: cfg.norm,
        eps: cfg.eps,
        accuracy: ok as f64 / data.len() as f64,
    })
}

/// `[0, 0.02, …, 0.10]`.
pub fn default_eta_grid() -> Vec<f64> {
    (0..=5).map(|i| i as f64 * 0.02).collect()
}

/// Softmax averaged over `samples` draws of θ + ε, where each coordinate of
/// block `j` has `ε ~ N(0, η · ‖θ_j‖∞)`. At `η = 0` this is plain inference.
pub fn stochastic_predict_proba(
    net: &Net,
    theta: &ParamSet,
    x: &Tensor,
    eta: f64,
    samples: usize,
    seed: u64,
) -> Result<Vec<f32>> {
    let clean = Model { net, params: theta };
    if eta == 0.0 {
        return clean.predict_proba(x);
    }
    if !(eta > 0.0) {
        return Err(Error::InvalidConfig(format!("eta must be >= 0, got {}", eta)));
    }
    let stds: Vec<f64> = theta.tensors().map(|t| eta * t.linf_norm() as f64).collect();
    let mut r = rng::stream(seed, "param-noise", 0);
    let mut acc: Vec<f64> = Vec::new();
    for _ in 0..samples.max(1) {
        let noisy = theta.map(|j, t| {
            let n = Normal::new(0.0, stds[j]).expect("finite std");
            t.map(|v| v + n.sample(&mut r) as f32)
        });
        let p = Model { net, params: &noisy }.predict_proba(x)?;
        if acc.is_empty() {
            acc = vec![0.0; p.len()];
        }
        for (a, v) in acc.iter_mut().zip(p) {
            *a += v as f64;
        }
    }
    let k = samples.max(1) as f64;
    Ok(acc.into_iter().map(|v| (v / k) as f32).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseRow {
    pub eta: f64,
    pub error: f64,
}

pub fn stochastic_param_eval<E: Executor + ?Sized>(
    net: &Net,
    theta: &ParamSet,
    data: &Dataset,
    etas: &[f64],
    samples: usize,
    seed: u64,
    exec: &E,
) -> Result<Vec<NoiseRow>> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut rows = Vec::with_capacity(etas.len());
    for (k, &eta) in etas.iter().enumerate() {
        let eta_seed = rng::derive_seed(seed, "noise-eta", k as u64);
        let wrong = exec.map(data.len(), |i| -> Result<bool> {
            let s = rng::derive_seed(eta_seed, "noise-example", i as u64);
            let p = stochastic_predict_proba(net, theta, &data.images[i], eta, samples, s)?;
            Ok(argmax(&p) != data.labels[i])
        });
        let mut n = 0usize;
        for w in wrong {
            n += w? as usize;
        }
        rows.push(NoiseRow {
            eta,
            error: n as f64 / data.len() as f64,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconConfig {
    pub steps: usize,
    pub lr: f64,
    pub lambda: f64,
    pub ssim: SsimConfig,
}

impl Default for ReconConfig {
    fn default() -> Self {
        Self {
            steps: 50,
            lr: 0.001,
            lambda: 1e-5,
            ssim: SsimConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub delta: PerturbationSet,
    /// `ssim(c_{φ+δ*}(x), x_target)`.
    pub final_ssim: f64,
    /// `ssim(c_φ(x), x_target)`.
    pub baseline_ssim: f64,
    /// Objective `ssim(c_{φ+δ}(x), x_target) − λ‖δ‖²` at each iterate, starting at δ = 0.
    pub objective: Vec<f64>,
}

fn recon_objective(
    net: &Net,
    phi: &ParamSet,
    delta: &PerturbationSet,
    x: &Tensor,
    target: &Tensor,
    cfg: &ReconConfig,
) -> Result<(f64, f64)> {
    let s = ssim(&forward_corruption(net, phi, delta, x)?, target, &cfg.ssim)?;
    Ok((s - cfg.lambda * delta.l2_norm_sq(), s))
}

/// Adam ascent on δ (no radius constraint) of the SSIM-to-target objective.
/// Iterates are scored with the exact SSIM and the best one is kept.
pub fn reconstruct_corruption(
    net: &Net,
    phi: &ParamSet,
    x: &Tensor,
    target: &Tensor,
    cfg: &ReconConfig,
) -> Result<Reconstruction> {
    let mut delta = PerturbationSet::zeros_like(phi);
    let mut as_params = phi.map(|_, t| Tensor::zeros(t.shape()));
    let mut adam = AdamState::new(&as_params);
    let (obj0, baseline) = recon_objective(net, phi, &delta, x, target, cfg)?;
    let mut trace = vec![obj0];
    let (mut best_obj, mut best_ssim, mut best) = (obj0, baseline, delta.clone());
    for _ in 0..cfg.steps {
        let mut g = Graph::new();
        let d = delta.to_vars(&mut g, true)?;
        let xv = g.constant(x.clone())?;
        let tv = g.constant(target.clone())?;
        let out = corruption_graph(&mut g, net, phi, &d, xv)?;
        let s = ssim_graph(&mut g, out, tv, &cfg.ssim)?;
        let mut pen = None;
        for &v in &d {
            let sq = g.mul(v, v)?;
            let sum = g.sum(sq)?;
            pen = Some(match pen {
                None => sum,
                Some(p) => g.add(p, sum)?,
            });
        }
        let pen = g.scale(pen.expect("nonempty"), cfg.lambda as f32)?;
        let obj = g.sub(s, pen)?;
        let loss = g.scale(obj, -1.0)?;
        g.backward(loss)?;
        let grads: Vec<Tensor> = d
            .iter()
            .zip(delta.blocks())
            .map(|(&v, t)| g.grad(v).cloned().unwrap_or_else(|| Tensor::zeros(t.shape())))
            .collect();
        as_params = adam_step(&as_params, &grads, &mut adam, cfg.lr as f32, 0.9, 0.999, 1e-8)?;
        delta = PerturbationSet::from_tensors(as_params.tensors().cloned().collect());
        let (o, s) = recon_objective(net, phi, &delta, x, target, cfg)?;
        trace.push(o);
        if o > best_obj {
            best_obj = o;
            best_ssim = s;
            best = delta.clone();
        }
    }
    Ok(Reconstruction {
        delta: best,
        final_ssim: best_ssim,
        baseline_ssim: baseline,
        objective: trace,
    })
}

/// Pre-guard `ssim(x, x_adv)` for every example; example `i` draws its AdA
/// seed from `(ada.seed, i)`, so different radii share seeds.
#[allow(clippy::too_many_arguments)]
pub fn ssim_values<E: Executor + ?Sized>(
    corruption: &Net,
    phi: &ParamSet,
    clf: &dyn Classify,
    data: &Dataset,
    ada: &AdaConfig,
    ssim_cfg: &SsimConfig,
    exec: &E,
) -> Result<Vec<f64>> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let vals = exec.map(data.len(), |i| -> Result<f64> {
        let mut c = *ada;
        c.seed = rng::derive_seed(ada.seed, "ssim-dist", i as u64);
        let adv = find_adversarial(corruption, phi, clf, &data.images[i], data.labels[i], &c)?;
        ssim(&data.images[i], &adv.x_adv, ssim_cfg)
    });
    vals.into_iter().collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SsimSummary {
    pub count: usize,
    pub mean: f64,
    pub variance: f64,
    /// Quantiles at 0.1, 0.2, …, 0.9 (linear interpolation).
    pub deciles: [f64; 9],
    /// `(bin_left, bin_right, count)`; the last bin is closed on the right.
    pub histogram: Vec<(f64, f64, usize)>,
}

pub const HISTOGRAM_BINS: usize = 40;

pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = libm::floor(pos) as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn histogram(values: &[f64], lo: f64, hi: f64, bins: usize) -> Vec<(f64, f64, usize)> {
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &v in values {
        if v < lo || v > hi {
            continue;
        }
        let b = (libm::floor((v - lo) / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(i, c)| (lo + i as f64 * width, lo + (i + 1) as f64 * width, c))
        .collect()
}

impl SsimSummary {
    /// Summary of SSIM values over `[-1, 1]` in [`HISTOGRAM_BINS`] bins.
    pub fn from_values(values: &[f64]) -> Self {
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let variance = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mut deciles = [0.0; 9];
        for (k, d) in deciles.iter_mut().enumerate() {
            *d = quantile(&sorted, (k + 1) as f64 / 10.0);
        }
        Self {
            count: n,
            mean,
            variance,
            deciles,
            histogram: histogram(values, -1.0, 1.0, HISTOGRAM_BINS),
        }
    }
}

#[allow(clippy::too_many_arguments)]
pub fn ssim_distribution<E: Executor + ?Sized>(
    corruption: &Net,
    phi: &ParamSet,
    clf: &dyn Classify,
    data: &Dataset,
    ada: &AdaConfig,
    ssim_cfg: &SsimConfig,
    exec: &E,
) -> Result<SsimSummary> {
    Ok(SsimSummary::from_values(&ssim_values(corruption, phi, clf, data, ada, ssim_cfg, exec)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Var;
    use crate::corruptions::ALL_KINDS;
    use crate::data::{synthetic, SyntheticConfig};
    use crate::exec::Sequential;
    use crate::nets::{build_net, Architecture, NetSpec};

    /// Logits `[0, w·x + b]`.
    struct Linear {
        w: Tensor,
        b: f32,
    }

    impl Classify for Linear {
        fn logits(&self, g: &mut Graph, x: Var) -> Result<Var> {
            let n = self.w.len();
            let mut wd = vec![0.0; 2 * n];
            for (i, &v) in self.w.data().iter().enumerate() {
                wd[2 * i + 1] = v;
            }
            let w = g.constant(Tensor::new(vec![n, 2], wd)?)?;
            let b = g.constant(Tensor::new(vec![1, 2], vec![0.0, self.b])?)?;
            let xr = g.reshape(x, &[1, n])?;
            let s = g.matmul(xr, w)?;
            let s = g.add(s, b)?;
            g.reshape(s, &[2])
        }
    }

    /// Returns a fixed label regardless of input.
    struct Constant(usize);

    impl Classify for Constant {
        fn logits(&self, g: &mut Graph, _x: Var) -> Result<Var> {
            let mut v = vec![0.0; 2];
            v[self.0] = 1.0;
            g.constant(Tensor::new(vec![2], v)?)
        }
    }

    fn data() -> Dataset {
        synthetic(&SyntheticConfig::new(2, 10, 16, 1)).unwrap()
    }

    #[test]
    fn oracle_classifiers_give_zero_and_one() {
        let d = data();
        let all0 = Dataset::new(d.images.clone(), vec![0; d.len()], 2).unwrap();
        let r = evaluate_corruptions(&Constant(0), &all0, &ALL_KINDS, 0, &Sequential).unwrap();
        assert_eq!(r.mce, 0.0);
        let r = evaluate_corruptions(&Constant(1), &all0, &ALL_KINDS, 0, &Sequential).unwrap();
        assert_eq!(r.mce, 1.0);
        assert_eq!(r.clean_error, 1.0);
    }

    #[test]
    fn mce_arithmetic() {
        let m = [[0.2; SEVERITIES], [0.1, 0.3, 0.4, 0.5, 0.7]];
        assert!((mce_from_matrix(&m) - 0.3).abs() < 1e-12);
    }

    #[test]
    fn empty_inputs_rejected() {
        let d = Dataset::new(vec![], vec![], 2).unwrap();
        assert!(matches!(
            evaluate_corruptions(&Constant(0), &d, &ALL_KINDS, 0, &Sequential),
            Err(Error::EmptyDataset)
        ));
        assert!(evaluate_corruptions(&Constant(0), &data(), &[], 0, &Sequential).is_err());
    }

    #[test]
    fn zero_eps_returns_input() {
        let x = data().images[0].clone();
        let clf = Linear {
            w: Tensor::full(x.shape(), 0.01),
            b: -1.0,
        };
        for norm in [Norm::L2, Norm::Linf] {
            let r = pgd_input_attack(&clf, &x, 0, &PgdConfig { restarts: 2, steps: 5, ..PgdConfig::new(norm, 0.0) }).unwrap();
            assert_eq!(r.x_adv, x);
            assert!(!r.success);
        }
    }

    #[test]
    fn iterates_respect_constraints() {
        let x = data().images[1].clone();
        let clf = Linear {
            w: x.map(|v| v - 0.3),
            b: 0.0,
        };
        for norm in [Norm::L2, Norm::Linf] {
            let cfg = PgdConfig {
                steps: 20,
                restarts: 3,
                ..PgdConfig::new(norm, 0.5)
            };
            let mut worst: f64 = 0.0;
            let mut boxed = true;
            pgd_input_attack_observed(&clf, &x, 0, &cfg, &mut |t| {
                worst = worst.max(norm.of(&t.zip_map(&x, |a, b| a - b).unwrap()));
                boxed &= t.min() >= 0.0 && t.max() <= 1.0;
            })
            .unwrap();
            assert!(worst <= 0.5 + 1e-6 && boxed, "{} {}", norm, worst);
        }
    }

    #[test]
    fn eta_zero_is_plain_inference() {
        let (theta, net) = build_net(NetSpec::classifier(1, 16, 2), 3).unwrap();
        let x = data().images[0].clone();
        let p = stochastic_predict_proba(&net, &theta, &x, 0.0, 50, 9).unwrap();
        let q = Model { net: &net, params: &theta }.predict_proba(&x).unwrap();
        assert_eq!(
            p.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            q.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
        let rows = stochastic_param_eval(&net, &theta, &data(), &default_eta_grid(), 2, 0, &Sequential).unwrap();
        assert_eq!(rows.len(), 6);
    }

    #[test]
    fn single_logit_invariant_to_noise() {
        let (theta, net) = build_net(NetSpec::classifier(1, 16, 1), 3).unwrap();
        let d = data();
        let one = Dataset::new(d.images.clone(), vec![0; d.len()], 1).unwrap();
        let rows = stochastic_param_eval(&net, &theta, &one, &[0.0, 0.1, 1.0], 3, 0, &Sequential).unwrap();
        assert!(rows.iter().all(|r| r.error == 0.0));
    }

    #[test]
    fn reconstruction_of_own_output_is_optimal() {
        let (phi, net) = build_net(NetSpec::corruption(Architecture::MiniCae, 1, 16), 5).unwrap();
        let x = data().images[2].clone();
        let target = net.infer(&phi, &x).unwrap();
        let cfg = ReconConfig {
            steps: 5,
            ..ReconConfig::default()
        };
        let r = reconstruct_corruption(&net, &phi, &x, &target, &cfg).unwrap();
        assert_eq!(r.objective[0], r.baseline_ssim);
        assert!(r.final_ssim >= 0.999);
        let mut best = f64::NEG_INFINITY;
        for &o in &r.objective {
            best = best.max(o);
        }
        assert!(r.final_ssim - cfg.lambda * r.delta.l2_norm_sq() == best);
    }

    #[test]
    fn summary_statistics() {
        let v: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        let s = SsimSummary::from_values(&v);
        assert!((s.mean - 0.5).abs() < 1e-12);
        assert!((s.deciles[4] - 0.5).abs() < 1e-12);
        assert_eq!(s.histogram.iter().map(|h| h.2).sum::<usize>(), 11);
    }
}
