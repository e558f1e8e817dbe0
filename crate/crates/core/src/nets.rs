//! Desk-scale corruption networks and the classifier.
//!
//! Every layer contributes two [`ParamBlock`]s, weight then bias, so the
//! relative perturbation norm and the median step-size rule see weights and
//! biases as separate blocks.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::Rng as _;

use crate::autodiff::{Graph, Var};
use crate::error::{shape_err, Error, Result};
use crate::optim::{adam_step, AdamState};
use crate::perturb::PerturbationSet;
use crate::rng;
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq)]
pub struct ParamBlock {
    pub name: String,
    /// 1-based position of the block inside its set.
    pub layer_index: usize,
    pub tensor: Tensor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamSet {
    blocks: Vec<ParamBlock>,
}

impl ParamSet {
    /// Builds a set from `(name, tensor)` pairs, numbering blocks from 1.
    pub fn new(named: Vec<(String, Tensor)>) -> Self {
        let blocks = named
            .into_iter()
            .enumerate()
            .map(|(i, (name, tensor))| ParamBlock {
                name,
                layer_index: i + 1,
                tensor,
            })
            .collect();
        Self { blocks }
    }

    pub fn blocks(&self) -> &[ParamBlock] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn tensors(&self) -> impl Iterator<Item = &Tensor> {
        self.blocks.iter().map(|b| &b.tensor)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.blocks.iter().map(|b| b.name.as_str())
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.blocks.iter().find(|b| b.name == name).map(|b| &b.tensor)
    }

    pub fn norms(&self) -> Vec<f64> {
        self.tensors().map(Tensor::l2_norm).collect()
    }

    pub fn num_params(&self) -> usize {
        self.tensors().map(Tensor::len).sum()
    }

    pub fn checksum(&self) -> u64 {
        let mut h = rng::Fnv::new();
        for b in &self.blocks {
            h.write(b.name.as_bytes());
            h.write(&b.tensor.checksum().to_le_bytes());
        }
        h.finish()
    }

    /// New set with the same names and each tensor replaced by `f(index, tensor)`.
    pub fn map(&self, mut f: impl FnMut(usize, &Tensor) -> Tensor) -> Self {
        Self {
            blocks: self
                .blocks
                .iter()
                .enumerate()
                .map(|(i, b)| ParamBlock {
                    name: b.name.clone(),
                    layer_index: b.layer_index,
                    tensor: f(i, &b.tensor),
                })
                .collect(),
        }
    }

    pub fn replace_tensors(&self, tensors: Vec<Tensor>) -> Result<Self> {
        if tensors.len() != self.blocks.len() {
            return Err(Error::Misaligned(vec![format!(
                "{} tensors for {} blocks",
                tensors.len(),
                self.blocks.len()
            )]));
        }
        let mut bad = Vec::new();
        for (b, t) in self.blocks.iter().zip(&tensors) {
            if b.tensor.shape() != t.shape() {
                bad.push(b.name.clone());
            }
        }
        if !bad.is_empty() {
            return Err(Error::Misaligned(bad));
        }
        let mut it = tensors.into_iter();
        Ok(self.map(|_, _| it.next().expect("length checked")))
    }

    /// Register every block on `g` as a leaf.
    pub fn to_vars(&self, g: &mut Graph, requires_grad: bool) -> Result<Vec<Var>> {
        self.tensors()
            .map(|t| g.leaf(t.clone(), requires_grad))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Architecture {
    MiniCae,
    MiniUnet,
    Classifier,
}

impl Architecture {
    pub fn id(self) -> &'static str {
        match self {
            Architecture::MiniCae => "mini-cae",
            Architecture::MiniUnet => "mini-unet",
            Architecture::Classifier => "classifier",
        }
    }

    pub fn code(self) -> u32 {
        match self {
            Architecture::MiniCae => 0,
            Architecture::MiniUnet => 1,
            Architecture::Classifier => 2,
        }
    }

    pub fn from_code(code: u32) -> Result<Self> {
        match code {
            0 => Ok(Architecture::MiniCae),
            1 => Ok(Architecture::MiniUnet),
            2 => Ok(Architecture::Classifier),
            c => Err(Error::UnknownArchitecture(format!("code {}", c))),
        }
    }

    pub fn is_corruption_net(self) -> bool {
        !matches!(self, Architecture::Classifier)
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Architecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mini-cae" => Ok(Architecture::MiniCae),
            "mini-unet" => Ok(Architecture::MiniUnet),
            "classifier" => Ok(Architecture::Classifier),
            other => Err(Error::UnknownArchitecture(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NetSpec {
    pub arch: Architecture,
    /// Image channels.
    pub channels: usize,
    /// Base filter count; deeper layers use `2 * width`.
    pub width: usize,
    /// Square image side length.
    pub extent: usize,
    /// Logit count, classifier only.
    pub classes: usize,
}

impl NetSpec {
    pub fn corruption(arch: Architecture, channels: usize, extent: usize) -> Self {
        Self {
            arch,
            channels,
            width: 8,
            extent,
            classes: 0,
        }
    }

    pub fn classifier(channels: usize, extent: usize, classes: usize) -> Self {
        Self {
            arch: Architecture::Classifier,
            channels,
            width: 8,
            extent,
            classes,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let need = match self.arch {
            Architecture::MiniUnet => 2,
            _ => 4,
        };
        if self.channels == 0 || self.width == 0 || self.extent == 0 || !self.extent.is_multiple_of(need) {
            return Err(Error::InvalidConfig(format!(
                "{}: channels/width must be positive and extent a multiple of {} (got {:?})",
                self.arch, need, self
            )));
        }
        if self.arch == Architecture::Classifier && self.classes == 0 {
            return Err(Error::InvalidConfig("classifier needs at least one class".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Conv { stride: usize, padding: usize },
    ConvT { stride: usize, padding: usize },
    Dense,
}

#[derive(Debug, Clone, PartialEq)]
struct LayerDef {
    name: &'static str,
    kind: Kind,
    weight_shape: Vec<usize>,
    fan_in: usize,
}

/// A network architecture plus its layer table. Parameters live outside in a
/// [`ParamSet`] so callers can substitute `φ + δ` or a classifier copy freely.
#[derive(Debug, Clone, PartialEq)]
pub struct Net {
    spec: NetSpec,
    layers: Vec<LayerDef>,
}

/// Builds the architecture and draws a deterministic initialization.
pub fn build_net(spec: NetSpec, seed: u64) -> Result<(ParamSet, Net)> {
    let net = Net::new(spec)?;
    let params = net.init(seed);
    Ok((params, net))
}

impl Net {
    pub fn new(spec: NetSpec) -> Result<Self> {
        spec.validate()?;
        let (c, w, e) = (spec.channels, spec.width, spec.extent);
        let conv = |name, out, inp, k, stride, padding| LayerDef {
            name,
            kind: Kind::Conv { stride, padding },
            weight_shape: vec![out, inp, k, k],
            fan_in: inp * k * k,
        };
        let convt = |name, inp, out, k, stride, padding| LayerDef {
            name,
            kind: Kind::ConvT { stride, padding },
            weight_shape: vec![inp, out, k, k],
            fan_in: inp * k * k / (stride * stride),
        };
        let layers = match spec.arch {
            Architecture::MiniCae => vec![
                conv("enc1", w, c, 3, 2, 1),
                conv("enc2", 2 * w, w, 3, 2, 1),
                convt("dec1", 2 * w, w, 4, 2, 1),
                convt("dec2", w, c, 4, 2, 1),
            ],
            Architecture::MiniUnet => vec![
                conv("enc1", w, c, 3, 1, 1),
                conv("enc2", 2 * w, w, 3, 2, 1),
                convt("dec1", 2 * w, w, 4, 2, 1),
                conv("out", c, w, 3, 1, 1),
            ],
            Architecture::Classifier => {
                let feat = 2 * w * (e / 4) * (e / 4);
                vec![
                    conv("conv1", w, c, 3, 2, 1),
                    conv("conv2", 2 * w, w, 3, 2, 1),
                    LayerDef {
                        name: "fc",
                        kind: Kind::Dense,
                        weight_shape: vec![feat, spec.classes],
                        fan_in: feat,
                    },
                ]
            }
        };
        Ok(Self { spec, layers })
    }

    pub fn spec(&self) -> &NetSpec {
        &self.spec
    }

    pub fn input_shape(&self) -> [usize; 3] {
        [self.spec.channels, self.spec.extent, self.spec.extent]
    }

    fn bias_len(layer: &LayerDef) -> usize {
        match layer.kind {
            Kind::Conv { .. } => layer.weight_shape[0],
            Kind::ConvT { .. } => layer.weight_shape[1],
            Kind::Dense => layer.weight_shape[1],
        }
    }

    /// Block names and shapes in parameter order.
    pub fn block_layout(&self) -> Vec<(String, Vec<usize>)> {
        let mut out = Vec::with_capacity(2 * self.layers.len());
        for l in &self.layers {
            out.push((format!("{}.weight", l.name), l.weight_shape.clone()));
            out.push((format!("{}.bias", l.name), vec![Self::bias_len(l)]));
        }
        out
    }

    /// He-uniform weights, biases uniform in `±1/sqrt(fan_in)`.
    pub fn init(&self, seed: u64) -> ParamSet {
        let mut r = rng::stream(seed, "net-init", self.spec.arch.code() as u64);
        let mut named = Vec::with_capacity(2 * self.layers.len());
        for l in &self.layers {
            let wb = libm::sqrtf(6.0 / l.fan_in as f32);
            let n: usize = l.weight_shape.iter().product();
            let w: Vec<f32> = (0..n).map(|_| r.random_range(-wb..wb)).collect();
            named.push((
                format!("{}.weight", l.name),
                Tensor::new(l.weight_shape.clone(), w).expect("layer shape"),
            ));
            let bb = 1.0 / libm::sqrtf(l.fan_in as f32);
            let b: Vec<f32> = (0..Self::bias_len(l)).map(|_| r.random_range(-bb..bb)).collect();
            named.push((
                format!("{}.bias", l.name),
                Tensor::new(vec![b.len()], b).expect("bias shape"),
            ));
        }
        ParamSet::new(named)
    }

    pub fn check_params(&self, params: &ParamSet) -> Result<()> {
        let layout = self.block_layout();
        let mut bad = Vec::new();
        if layout.len() != params.len() {
            bad.push(format!("expected {} blocks, got {}", layout.len(), params.len()));
        }
        for ((name, shape), b) in layout.iter().zip(params.blocks()) {
            if *name != b.name || shape.as_slice() != b.tensor.shape() {
                bad.push(b.name.clone());
            }
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Misaligned(bad))
        }
    }

    fn check_input(&self, g: &Graph, x: Var) -> Result<()> {
        let s = g.value(x).shape();
        if s != self.input_shape() {
            return Err(shape_err(
                "net input",
                format!("{} expects {:?}, got {:?}", self.spec.arch, self.input_shape(), s),
            ));
        }
        Ok(())
    }

    fn apply(&self, g: &mut Graph, layer: usize, params: &[Var], x: Var) -> Result<Var> {
        let l = &self.layers[layer];
        let (w, b) = (params[2 * layer], params[2 * layer + 1]);
        match l.kind {
            Kind::Conv { stride, padding } => g.conv2d(x, w, Some(b), stride, padding),
            Kind::ConvT { stride, padding } => g.conv_transpose2d(x, w, Some(b), stride, padding),
            Kind::Dense => {
                let k = g.value(x).len();
                let flat = g.reshape(x, &[1, k])?;
                let z = g.matmul(flat, w)?;
                let z = g.reshape(z, &[self.spec.classes])?;
                g.add(z, b)
            }
        }
    }

    /// Network output without the final `[0, 1]` clamp (logits for the classifier).
    pub fn forward_raw(&self, g: &mut Graph, params: &[Var], x: Var) -> Result<Var> {
        self.check_input(g, x)?;
        if params.len() != 2 * self.layers.len() {
            return Err(Error::Misaligned(vec![format!(
                "{} parameter vars for {} blocks",
                params.len(),
                2 * self.layers.len()
            )]));
        }
        match self.spec.arch {
            Architecture::MiniCae => {
                let mut h = x;
                for i in 0..4 {
                    h = self.apply(g, i, params, h)?;
                    if i < 3 {
                        h = g.relu(h)?;
                    }
                }
                Ok(h)
            }
            Architecture::MiniUnet => {
                let e1 = self.apply(g, 0, params, x)?;
                let e1 = g.relu(e1)?;
                let e2 = self.apply(g, 1, params, e1)?;
                let e2 = g.relu(e2)?;
                let d1 = self.apply(g, 2, params, e2)?;
                let d1 = g.relu(d1)?;
                let skip = g.add(d1, e1)?;
                let out = self.apply(g, 3, params, skip)?;
                g.add(out, x)
            }
            Architecture::Classifier => {
                let h = self.apply(g, 0, params, x)?;
                let h = g.relu(h)?;
                let h = self.apply(g, 1, params, h)?;
                let h = g.relu(h)?;
                self.apply(g, 2, params, h)
            }
        }
    }

    /// Corruption nets clamp to `[0, 1]`; the classifier returns logits.
    pub fn forward(&self, g: &mut Graph, params: &[Var], x: Var) -> Result<Var> {
        let y = self.forward_raw(g, params, x)?;
        if self.spec.arch.is_corruption_net() {
            g.clamp(y, 0.0, 1.0)
        } else {
            Ok(y)
        }
    }

    /// One-shot inference with constant parameters.
    pub fn infer(&self, params: &ParamSet, x: &Tensor) -> Result<Tensor> {
        let mut g = Graph::new();
        let p = params.to_vars(&mut g, false)?;
        let xv = g.constant(x.clone())?;
        let y = self.forward(&mut g, &p, xv)?;
        Ok(g.value(y).clone())
    }
}

/// `c_{φ+δ}(x)` recorded on `g`: φ enters as constants, δ as the given vars,
/// so gradients reach δ and never φ.
pub fn corruption_graph(
    g: &mut Graph,
    net: &Net,
    phi: &ParamSet,
    delta: &[Var],
    x: Var,
) -> Result<Var> {
    if delta.len() != phi.len() {
        return Err(Error::Misaligned(vec![format!(
            "{} offsets for {} blocks",
            delta.len(),
            phi.len()
        )]));
    }
    let mut eff = Vec::with_capacity(phi.len());
    for (b, &d) in phi.blocks().iter().zip(delta) {
        if g.value(d).shape() != b.tensor.shape() {
            return Err(Error::Misaligned(vec![b.name.clone()]));
        }
        let p = g.constant(b.tensor.clone())?;
        eff.push(g.add(p, d)?);
    }
    net.forward(g, &eff, x)
}

/// `c_{φ+δ}(x)`, clamped to `[0, 1]`.
pub fn forward_corruption(
    net: &Net,
    phi: &ParamSet,
    delta: &PerturbationSet,
    x: &Tensor,
) -> Result<Tensor> {
    delta.check_aligned(phi)?;
    let mut g = Graph::new();
    let d = delta.to_vars(&mut g, false)?;
    let xv = g.constant(x.clone())?;
    let y = corruption_graph(&mut g, net, phi, &d, xv)?;
    Ok(g.value(y).clone())
}

/// Anything that maps an image to one row of logits on a graph.
pub trait Classify: Sync {
    fn logits(&self, g: &mut Graph, x: Var) -> Result<Var>;

    fn predict_proba(&self, x: &Tensor) -> Result<Vec<f32>> {
        let mut g = Graph::new();
        let xv = g.constant(x.clone())?;
        let z = self.logits(&mut g, xv)?;
        let p = g.softmax(z)?;
        Ok(g.value(p).data().to_vec())
    }

    fn predict(&self, x: &Tensor) -> Result<usize> {
        Ok(argmax(&self.predict_proba(x)?))
    }
}

/// Classifier network with frozen parameters.
#[derive(Debug, Clone)]
pub struct Model<'a> {
    pub net: &'a Net,
    pub params: &'a ParamSet,
}

impl Classify for Model<'_> {
    fn logits(&self, g: &mut Graph, x: Var) -> Result<Var> {
        let p = self.params.to_vars(g, false)?;
        self.net.forward(g, &p, x)
    }
}

/// First index of the maximum.
pub fn argmax(v: &[f32]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PretrainConfig {
    pub epochs: usize,
    pub lr: f32,
    /// Weight on the mean squared term next to the mean absolute error.
    pub mse_weight: f32,
    pub seed: u64,
}

impl Default for PretrainConfig {
    fn default() -> Self {
        Self {
            epochs: 10,
            lr: 3e-3,
            mse_weight: 0.05,
            seed: 0,
        }
    }
}

/// Mean absolute plus weighted mean squared pixel error, recorded on `g`.
pub fn reconstruction_loss(g: &mut Graph, out: Var, target: Var, mse_weight: f32) -> Result<Var> {
    let e = g.sub(out, target)?;
    let a = g.abs(e)?;
    let mae = g.mean(a)?;
    let sq = g.mul(e, e)?;
    let mse = g.mean(sq)?;
    let mse = g.scale(mse, mse_weight)?;
    g.add(mae, mse)
}

/// Mean absolute pixel error of the clamped corruption-net output.
pub fn mean_reconstruction_error(net: &Net, params: &ParamSet, images: &[Tensor]) -> Result<f64> {
    if images.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut total = 0.0;
    for x in images {
        let y = net.infer(params, x)?;
        total += y
            .data()
            .iter()
            .zip(x.data())
            .map(|(a, b)| (a - b).abs() as f64)
            .sum::<f64>()
            / x.len() as f64;
    }
    Ok(total / images.len() as f64)
}

/// Trains a corruption net to reproduce its input with per-example Adam steps.
/// Returns the trained parameters and the mean loss of each epoch.
pub fn pretrain_corruption(
    net: &Net,
    init: &ParamSet,
    images: &[Tensor],
    cfg: &PretrainConfig,
) -> Result<(ParamSet, Vec<f64>)> {
    if !net.spec().arch.is_corruption_net() {
        return Err(Error::InvalidConfig(format!(
            "pretraining needs a corruption net, got {}",
            net.spec().arch
        )));
    }
    if images.is_empty() {
        return Err(Error::EmptyDataset);
    }
    net.check_params(init)?;
    let mut params = init.clone();
    let mut state = AdamState::new(&params);
    let mut order: Vec<usize> = (0..images.len()).collect();
    let mut trace = Vec::with_capacity(cfg.epochs);
    let mut g = Graph::new();
    for epoch in 0..cfg.epochs {
        let mut r = rng::stream(cfg.seed, "pretrain-order", epoch as u64);
        rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut r);
        let mut total = 0.0;
        for &i in &order {
            g.reset();
            let p = params.to_vars(&mut g, true)?;
            let x = g.constant(images[i].clone())?;
            let y = net.forward_raw(&mut g, &p, x)?;
            let loss = reconstruction_loss(&mut g, y, x, cfg.mse_weight)?;
            total += g.value(loss).data()[0] as f64;
            g.backward(loss)?;
            let grads: Vec<Tensor> = p
                .iter()
                .zip(params.tensors())
                .map(|(&v, t)| g.grad(v).cloned().unwrap_or_else(|| Tensor::zeros(t.shape())))
                .collect();
            params = adam_step(&params, &grads, &mut state, cfg.lr, 0.9, 0.999, 1e-8)?;
        }
        trace.push(total / images.len() as f64);
    }
    Ok((params, trace))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corruption_nets_preserve_shape() {
        for arch in [Architecture::MiniCae, Architecture::MiniUnet] {
            let (p, net) = build_net(NetSpec::corruption(arch, 1, 16), 3).unwrap();
            let y = net.infer(&p, &Tensor::full(&[1, 16, 16], 0.5)).unwrap();
            assert_eq!(y.shape(), &[1, 16, 16]);
            assert!(y.min() >= 0.0 && y.max() <= 1.0);
        }
    }

    #[test]
    fn classifier_logits_len() {
        let (p, net) = build_net(NetSpec::classifier(1, 16, 2), 3).unwrap();
        let y = net.infer(&p, &Tensor::full(&[1, 16, 16], 0.5)).unwrap();
        assert_eq!(y.shape(), &[2]);
    }

    #[test]
    fn same_seed_same_params() {
        let spec = NetSpec::corruption(Architecture::MiniCae, 1, 16);
        let (a, _) = build_net(spec, 11).unwrap();
        let (b, _) = build_net(spec, 11).unwrap();
        let (c, _) = build_net(spec, 12).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.checksum(), b.checksum());
        assert_ne!(a.checksum(), c.checksum());
    }

    #[test]
    fn blocks_numbered_contiguously_with_positive_norms() {
        let (p, _) = build_net(NetSpec::corruption(Architecture::MiniUnet, 1, 16), 0).unwrap();
        for (i, b) in p.blocks().iter().enumerate() {
            assert_eq!(b.layer_index, i + 1);
            let n = b.tensor.l2_norm();
            assert!(n.is_finite() && n > 0.0, "{}", b.name);
        }
        assert_eq!(p.len(), 8);
    }

    #[test]
    fn unknown_architecture() {
        assert_eq!(
            "vq-vae".parse::<Architecture>(),
            Err(Error::UnknownArchitecture("vq-vae".into()))
        );
        assert_eq!("mini-unet".parse::<Architecture>(), Ok(Architecture::MiniUnet));
    }

    #[test]
    fn unet_identity_with_zeroed_output_conv() {
        let spec = NetSpec::corruption(Architecture::MiniUnet, 1, 16);
        let (p, net) = build_net(spec, 5).unwrap();
        let p = p.map(|_, t| t.clone());
        let zeroed = p.map(|i, t| {
            // out.weight and out.bias are the last two blocks
            if i >= 6 {
                Tensor::zeros(t.shape())
            } else {
                t.clone()
            }
        });
        let mut r = rng::stream(1, "test", 0);
        let x: Vec<f32> = (0..256).map(|_| r.random::<f32>()).collect();
        let x = Tensor::new(vec![1, 16, 16], x).unwrap();
        let y = net.infer(&zeroed, &x).unwrap();
        for (a, b) in y.data().iter().zip(x.data()) {
            assert!((a - b).abs() <= 1e-6);
        }
    }

    #[test]
    fn zero_delta_matches_plain_forward() {
        let spec = NetSpec::corruption(Architecture::MiniCae, 1, 16);
        let (p, net) = build_net(spec, 5).unwrap();
        let x = Tensor::full(&[1, 16, 16], 0.3);
        let d = PerturbationSet::zeros_like(&p);
        let a = forward_corruption(&net, &p, &d, &x).unwrap();
        let b = net.infer(&p, &x).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, forward_corruption(&net, &p, &d, &x).unwrap());
    }

    #[test]
    fn misaligned_delta_lists_names() {
        let (p, net) = build_net(NetSpec::corruption(Architecture::MiniCae, 1, 16), 5).unwrap();
        let mut blocks: Vec<Tensor> = p.tensors().cloned().collect();
        blocks[1] = Tensor::zeros(&[3]);
        let d = PerturbationSet::from_tensors(blocks);
        match forward_corruption(&net, &p, &d, &Tensor::zeros(&[1, 16, 16])) {
            Err(Error::Misaligned(names)) => assert_eq!(names, vec!["enc1.bias".to_string()]),
            other => panic!("{:?}", other),
        }
    }
}
