//! Inner maximization over corruption-network weight offsets.
//!
//! A perturbation set δ holds one offset per parameter block of φ. Its size is
//! measured by the relative norm `max_i ‖δ_i‖₂ / ‖φ_i‖₂` and the feasible set
//! is the ball of relative radius ν. The search starts from a random point in
//! the ball, takes signed-gradient ascent steps on the classifier loss of
//! `c_{φ+δ}(x)` and projects each block back after every step.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::autodiff::{sign, Graph, Var};
use crate::error::{Error, Result};
use crate::nets::{corruption_graph, Classify, Net, ParamSet};
use crate::rng;
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationSet {
    blocks: Vec<Tensor>,
}

impl PerturbationSet {
    pub fn zeros_like(phi: &ParamSet) -> Self {
        Self {
            blocks: phi.tensors().map(|t| Tensor::zeros(t.shape())).collect(),
        }
    }

    pub fn from_tensors(blocks: Vec<Tensor>) -> Self {
        Self { blocks }
    }

    pub fn blocks(&self) -> &[Tensor] {
        &self.blocks
    }

    pub fn into_blocks(self) -> Vec<Tensor> {
        self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.blocks
            .iter()
            .flat_map(|t| t.data())
            .map(|&v| v as f64 * v as f64)
            .sum()
    }

    pub fn is_all_zero(&self) -> bool {
        self.blocks.iter().all(|t| t.data().iter().all(|&v| v == 0.0))
    }

    pub fn to_vars(&self, g: &mut Graph, requires_grad: bool) -> Result<Vec<Var>> {
        self.blocks
            .iter()
            .map(|t| g.leaf(t.clone(), requires_grad))
            .collect()
    }

    /// Error listing every block of `phi` whose shape δ does not match.
    pub fn check_aligned(&self, phi: &ParamSet) -> Result<()> {
        let mut bad = Vec::new();
        if self.blocks.len() != phi.len() {
            bad.push(format!(
                "{} offsets for {} blocks",
                self.blocks.len(),
                phi.len()
            ));
        }
        for (d, b) in self.blocks.iter().zip(phi.blocks()) {
            if d.shape() != b.tensor.shape() {
                bad.push(b.name.clone());
            }
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Misaligned(bad))
        }
    }

    /// φ + δ as a fresh parameter set.
    pub fn apply_to(&self, phi: &ParamSet) -> Result<ParamSet> {
        self.check_aligned(phi)?;
        Ok(phi.map(|i, t| t.zip_map(&self.blocks[i], |a, b| a + b).expect("aligned")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaConfig {
    /// Relative perturbation radius ν.
    pub nu: f64,
    /// Inner ascent steps M.
    pub steps: usize,
    /// Absolute inner step size; `None` applies [`inner_step_size`].
    pub step_size: Option<f64>,
    /// Step count at which the step-size rule has no rescaling.
    pub reference_steps: usize,
    pub ssim_threshold: f64,
    pub seed: u64,
}

impl Default for AdaConfig {
    fn default() -> Self {
        Self {
            nu: 0.015,
            steps: 10,
            step_size: None,
            reference_steps: 10,
            ssim_threshold: 0.3,
            seed: 0,
        }
    }
}

impl AdaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.nu >= 0.0 && self.nu.is_finite()) {
            return Err(Error::InvalidConfig(format!("nu must be >= 0, got {}", self.nu)));
        }
        if !(self.ssim_threshold > 0.0 && self.ssim_threshold <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "ssim threshold must lie in (0, 1], got {}",
                self.ssim_threshold
            )));
        }
        if matches!(self.step_size, Some(s) if !(s >= 0.0)) {
            return Err(Error::InvalidConfig("step size must be >= 0".into()));
        }
        Ok(())
    }
}

fn block_ratios(delta: &PerturbationSet, phi: &ParamSet) -> Result<Vec<f64>> {
    delta.check_aligned(phi)?;
    delta
        .blocks
        .iter()
        .zip(phi.blocks())
        .map(|(d, b)| {
            let pn = b.tensor.l2_norm();
            if pn == 0.0 {
                Err(Error::ZeroNormBlock(b.name.clone()))
            } else {
                Ok(d.l2_norm() / pn)
            }
        })
        .collect()
}

/// `max_i ‖δ_i‖₂ / ‖φ_i‖₂`.
pub fn relative_norm(delta: &PerturbationSet, phi: &ParamSet) -> Result<f64> {
    Ok(block_ratios(delta, phi)?.into_iter().fold(0.0, f64::max))
}

fn scaled(t: &Tensor, s: f64) -> Tensor {
    t.map(|v| (v as f64 * s) as f32)
}

/// Rescale `d` onto the sphere of radius `limit` if it lies outside. The
/// scaled block is re-measured and nudged inward until the f32 rounding of
/// the rescale can no longer leave it outside the ball.
fn project_block(d: &Tensor, limit: f64) -> Tensor {
    let n = d.l2_norm();
    if n <= limit {
        return d.clone();
    }
    let mut s = limit / n;
    let mut out = scaled(d, s);
    while out.l2_norm() > limit {
        s *= 1.0 - 1e-7;
        out = scaled(d, s);
    }
    out
}

/// Per block: radius `r ~ U(0, ν‖φ_i‖₂)` and a uniformly random direction.
pub fn random_init(phi: &ParamSet, nu: f64, seed: u64) -> Result<PerturbationSet> {
    let mut r = rng::stream(seed, "delta-init", 0);
    let mut blocks = Vec::with_capacity(phi.len());
    for b in phi.blocks() {
        let limit = nu * b.tensor.l2_norm();
        if limit == 0.0 {
            blocks.push(Tensor::zeros(b.tensor.shape()));
            continue;
        }
        let radius = r.random::<f64>() * limit;
        let dir: Vec<f64> = (0..b.tensor.len()).map(|_| r.sample(StandardNormal)).collect();
        let dn = libm::sqrt(dir.iter().map(|v| v * v).sum::<f64>());
        let data = dir.iter().map(|v| (v / dn * radius) as f32).collect();
        let t = Tensor::new(b.tensor.shape().to_vec(), data)?;
        blocks.push(project_block(&t, limit));
    }
    Ok(PerturbationSet { blocks })
}

/// `δ + η sign(∇)`, with `sign(0) = 0`.
pub fn fgsm_step(delta: &PerturbationSet, grad: &PerturbationSet, step: f64) -> Result<PerturbationSet> {
    if delta.len() != grad.len() {
        return Err(Error::Misaligned(alloc::vec![format!(
            "{} offsets vs {} gradients",
            delta.len(),
            grad.len()
        )]));
    }
    let step = step as f32;
    let blocks = delta
        .blocks
        .iter()
        .zip(&grad.blocks)
        .map(|(d, g)| d.zip_map(g, |d, g| d + step * sign(g)))
        .collect::<Result<Vec<_>>>()?;
    Ok(PerturbationSet { blocks })
}

/// Pull every block back into its ball `‖δ_i‖₂ ≤ ν‖φ_i‖₂`.
pub fn project(delta: &PerturbationSet, phi: &ParamSet, nu: f64) -> Result<PerturbationSet> {
    delta.check_aligned(phi)?;
    let mut blocks = Vec::with_capacity(delta.len());
    for (d, b) in delta.blocks.iter().zip(phi.blocks()) {
        let pn = b.tensor.l2_norm();
        if pn == 0.0 {
            return Err(Error::ZeroNormBlock(b.name.clone()));
        }
        blocks.push(project_block(d, nu * pn));
    }
    Ok(PerturbationSet { blocks })
}

/// Median of a non-empty list; even lengths average the central pair.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// A quarter of the median block radius `ν‖φ_i‖₂`, scaled by
/// `reference_steps / steps` so shorter searches cover the same distance.
pub fn inner_step_size(phi: &ParamSet, nu: f64, steps: usize, reference_steps: usize) -> Result<f64> {
    if steps == 0 {
        return Err(Error::ZeroInnerSteps);
    }
    if phi.is_empty() {
        return Err(Error::InvalidConfig("step size needs at least one block".into()));
    }
    let radii: Vec<f64> = phi.norms().into_iter().map(|n| nu * n).collect();
    Ok(0.25 * median(&radii) * reference_steps as f64 / steps as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Adversarial {
    /// `c_{φ+δ}(x)` before any SSIM guard.
    pub x_adv: Tensor,
    pub delta: PerturbationSet,
    /// Surrogate loss at `δ⁽⁰⁾ … δ⁽ᴹ⁾`.
    pub loss_trace: Vec<f32>,
}

impl Adversarial {
    pub fn final_loss(&self) -> f32 {
        *self.loss_trace.last().expect("trace has M + 1 entries")
    }
}

/// Loss of the classifier on `c_{φ+δ}(x)`, plus the graph vars of δ and the image.
#[allow(clippy::too_many_arguments)]
fn surrogate(
    g: &mut Graph,
    corruption: &Net,
    phi: &ParamSet,
    clf: &(impl Classify + ?Sized),
    delta: &PerturbationSet,
    x: &Tensor,
    y: usize,
    track: bool,
) -> Result<(Vec<Var>, Var, Var)> {
    let d = delta.to_vars(g, track)?;
    let xv = g.constant(x.clone())?;
    let img = corruption_graph(g, corruption, phi, &d, xv)?;
    let z = clf.logits(g, img)?;
    let loss = g.cross_entropy(z, y)?;
    Ok((d, img, loss))
}

/// Random start inside the ball, then `cfg.steps` rounds of signed-gradient
/// ascent on the cross-entropy of `clf(c_{φ+δ}(x))` against `y`, each followed
/// by projection. φ and the classifier are only read.
pub fn find_adversarial(
    corruption: &Net,
    phi: &ParamSet,
    clf: &(impl Classify + ?Sized),
    x: &Tensor,
    y: usize,
    cfg: &AdaConfig,
) -> Result<Adversarial> {
    cfg.validate()?;
    let mut delta = random_init(phi, cfg.nu, cfg.seed)?;
    let step = match (cfg.steps, cfg.step_size) {
        (0, _) => 0.0,
        (_, Some(s)) => s,
        (m, None) => inner_step_size(phi, cfg.nu, m, cfg.reference_steps)?,
    };
    let mut trace = Vec::with_capacity(cfg.steps + 1);
    let mut g = Graph::new();
    for _ in 0..cfg.steps {
        g.reset();
        let (d, _, loss) = surrogate(&mut g, corruption, phi, clf, &delta, x, y, true)?;
        trace.push(g.value(loss).data()[0]);
        g.backward(loss)?;
        let grads = PerturbationSet::from_tensors(
            d.iter()
                .zip(&delta.blocks)
                .map(|(&v, t)| g.grad(v).cloned().unwrap_or_else(|| Tensor::zeros(t.shape())))
                .collect(),
        );
        delta = project(&fgsm_step(&delta, &grads, step)?, phi, cfg.nu)?;
    }
    g.reset();
    let (_, img, loss) = surrogate(&mut g, corruption, phi, clf, &delta, x, y, false)?;
    trace.push(g.value(loss).data()[0]);
    Ok(Adversarial {
        x_adv: g.value(img).clone(),
        delta,
        loss_trace: trace,
    })
}
