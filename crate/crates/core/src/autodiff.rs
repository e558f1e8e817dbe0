//! Tape-based reverse-mode automatic differentiation.
//!
//! A [`Graph`] records one forward computation. Each recorded operation
//! returns a [`Var`] handle; [`Graph::backward`] walks the tape in reverse
//! recording order exactly once and fills the gradient of every node that
//! (transitively) depends on a leaf created with `requires_grad = true`.
//!
//! Images are single examples in `[C, H, W]` layout. Convolution weights are
//! `[out, in, kh, kw]`; transposed-convolution weights are `[in, out, kh, kw]`.
//! Reductions and convolutions accumulate in `f64`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{shape_err, Error, Result};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Conv2dGeom {
    pub stride: usize,
    pub padding: usize,
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Div(Var, Var),
    Scale(Var, f32),
    AddScalar(Var),
    Relu(Var),
    Abs(Var),
    Clamp(Var, f32, f32),
    Reshape(Var),
    MatMul(Var, Var),
    Conv2d {
        input: Var,
        weight: Var,
        bias: Option<Var>,
        geom: Conv2dGeom,
    },
    ConvTranspose2d {
        input: Var,
        weight: Var,
        bias: Option<Var>,
        geom: Conv2dGeom,
    },
    Sum(Var),
    Mean(Var),
    Softmax(Var),
    CrossEntropy { logits: Var, label: usize },
    Blend(Var, Var, f32),
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
}

#[derive(Debug, Default)]
pub struct Graph {
    nodes: Vec<Node>,
    grads: Vec<Option<Tensor>>,
    consumed: bool,
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Drop the tape so the graph can record a fresh forward pass.
    pub fn reset(&mut self) {
        self.nodes.clear();
        self.grads.clear();
        self.consumed = false;
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn leaf(&mut self, value: Tensor, requires_grad: bool) -> Result<Var> {
        self.push(value, Op::Leaf, requires_grad)
    }

    pub fn constant(&mut self, value: Tensor) -> Result<Var> {
        self.leaf(value, false)
    }

    pub fn param(&mut self, value: Tensor) -> Result<Var> {
        self.leaf(value, true)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    /// Gradient of the loss with respect to `v`, available after [`Graph::backward`].
    pub fn grad(&self, v: Var) -> Option<&Tensor> {
        self.grads.get(v.0).and_then(|g| g.as_ref())
    }

    fn push(&mut self, value: Tensor, op: Op, requires_grad: bool) -> Result<Var> {
        if self.consumed {
            return Err(Error::GraphConsumed);
        }
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Ok(Var(self.nodes.len() - 1))
    }

    fn rg(&self, vars: &[Var]) -> bool {
        vars.iter().any(|v| self.nodes[v.0].requires_grad)
    }

    fn same_shape(&self, op: &'static str, a: Var, b: Var) -> Result<()> {
        let (sa, sb) = (self.value(a).shape(), self.value(b).shape());
        if sa != sb {
            return Err(shape_err(op, format!("{:?} vs {:?}", sa, sb)));
        }
        Ok(())
    }

    fn binary(
        &mut self,
        name: &'static str,
        a: Var,
        b: Var,
        op: Op,
        f: impl Fn(f32, f32) -> f32,
    ) -> Result<Var> {
        self.same_shape(name, a, b)?;
        let value = self.value(a).zip_map(self.value(b), f)?;
        let rg = self.rg(&[a, b]);
        self.push(value, op, rg)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary("add", a, b, Op::Add(a, b), |x, y| x + y)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary("sub", a, b, Op::Sub(a, b), |x, y| x - y)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary("mul", a, b, Op::Mul(a, b), |x, y| x * y)
    }

    pub fn div(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary("div", a, b, Op::Div(a, b), |x, y| x / y)
    }

    pub fn scale(&mut self, a: Var, k: f32) -> Result<Var> {
        let value = self.value(a).map(|v| v * k);
        let rg = self.rg(&[a]);
        self.push(value, Op::Scale(a, k), rg)
    }

    pub fn add_scalar(&mut self, a: Var, k: f32) -> Result<Var> {
        let value = self.value(a).map(|v| v + k);
        let rg = self.rg(&[a]);
        self.push(value, Op::AddScalar(a), rg)
    }

    pub fn relu(&mut self, a: Var) -> Result<Var> {
        let value = self.value(a).map(|v| v.max(0.0));
        let rg = self.rg(&[a]);
        self.push(value, Op::Relu(a), rg)
    }

    pub fn abs(&mut self, a: Var) -> Result<Var> {
        let value = self.value(a).map(f32::abs);
        let rg = self.rg(&[a]);
        self.push(value, Op::Abs(a), rg)
    }

    /// Clamp to `[lo, hi]`; the gradient passes only where the input was inside.
    pub fn clamp(&mut self, a: Var, lo: f32, hi: f32) -> Result<Var> {
        let value = self.value(a).clamp(lo, hi);
        let rg = self.rg(&[a]);
        self.push(value, Op::Clamp(a, lo, hi), rg)
    }

    pub fn reshape(&mut self, a: Var, shape: &[usize]) -> Result<Var> {
        let value = self.value(a).clone().reshape(shape)?;
        let rg = self.rg(&[a]);
        self.push(value, Op::Reshape(a), rg)
    }

    /// `(1 - gamma) * a + gamma * b`.
    pub fn blend(&mut self, a: Var, b: Var, gamma: f32) -> Result<Var> {
        self.binary("blend", a, b, Op::Blend(a, b, gamma), |x, y| {
            (1.0 - gamma) * x + gamma * y
        })
    }

    /// `[m, k] x [k, n] -> [m, n]`.
    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (sa, sb) = (self.value(a).shape(), self.value(b).shape());
        let (m, k, n) = match (sa, sb) {
            ([m, k], [k2, n]) if k == k2 => (*m, *k, *n),
            _ => return Err(shape_err("matmul", format!("{:?} x {:?}", sa, sb))),
        };
        let (ad, bd) = (self.value(a).data(), self.value(b).data());
        let mut out = vec![0.0f32; m * n];
        for i in 0..m {
            for j in 0..n {
                let mut acc = 0.0f64;
                for p in 0..k {
                    acc += ad[i * k + p] as f64 * bd[p * n + j] as f64;
                }
                out[i * n + j] = acc as f32;
            }
        }
        let rg = self.rg(&[a, b]);
        self.push(Tensor::new(vec![m, n], out)?, Op::MatMul(a, b), rg)
    }

    pub fn conv2d(
        &mut self,
        input: Var,
        weight: Var,
        bias: Option<Var>,
        stride: usize,
        padding: usize,
    ) -> Result<Var> {
        let geom = Conv2dGeom { stride, padding };
        let d = self.conv_dims("conv2d", input, weight, bias, geom, false)?;
        let (x, w) = (self.value(input).data(), self.value(weight).data());
        let b = bias.map(|b| self.value(b).data());
        let mut out = vec![0.0f32; d.oc * d.oh * d.ow];
        for o in 0..d.oc {
            for i in 0..d.oh {
                for j in 0..d.ow {
                    let mut acc = b.map_or(0.0, |b| b[o] as f64);
                    for c in 0..d.ic {
                        for ki in 0..d.kh {
                            let Some(y) = (i * stride + ki).checked_sub(padding).filter(|&y| y < d.ih)
                            else {
                                continue;
                            };
                            for kj in 0..d.kw {
                                let Some(xx) =
                                    (j * stride + kj).checked_sub(padding).filter(|&v| v < d.iw)
                                else {
                                    continue;
                                };
                                acc += w[((o * d.ic + c) * d.kh + ki) * d.kw + kj] as f64
                                    * x[(c * d.ih + y) * d.iw + xx] as f64;
                            }
                        }
                    }
                    out[(o * d.oh + i) * d.ow + j] = acc as f32;
                }
            }
        }
        let mut deps = vec![input, weight];
        deps.extend(bias);
        let rg = self.rg(&deps);
        self.push(
            Tensor::new(vec![d.oc, d.oh, d.ow], out)?,
            Op::Conv2d {
                input,
                weight,
                bias,
                geom,
            },
            rg,
        )
    }

    pub fn conv_transpose2d(
        &mut self,
        input: Var,
        weight: Var,
        bias: Option<Var>,
        stride: usize,
        padding: usize,
    ) -> Result<Var> {
        let geom = Conv2dGeom { stride, padding };
        let d = self.conv_dims("conv_transpose2d", input, weight, bias, geom, true)?;
        let (x, w) = (self.value(input).data(), self.value(weight).data());
        let mut acc = vec![0.0f64; d.oc * d.oh * d.ow];
        if let Some(b) = bias {
            let b = self.value(b).data();
            for o in 0..d.oc {
                acc[o * d.oh * d.ow..(o + 1) * d.oh * d.ow].fill(b[o] as f64);
            }
        }
        for c in 0..d.ic {
            for i in 0..d.ih {
                for j in 0..d.iw {
                    let xv = x[(c * d.ih + i) * d.iw + j] as f64;
                    for o in 0..d.oc {
                        for ki in 0..d.kh {
                            let Some(y) = (i * stride + ki).checked_sub(padding).filter(|&y| y < d.oh)
                            else {
                                continue;
                            };
                            for kj in 0..d.kw {
                                let Some(xx) =
                                    (j * stride + kj).checked_sub(padding).filter(|&v| v < d.ow)
                                else {
                                    continue;
                                };
                                acc[(o * d.oh + y) * d.ow + xx] +=
                                    xv * w[((c * d.oc + o) * d.kh + ki) * d.kw + kj] as f64;
                            }
                        }
                    }
                }
            }
        }
        let out = acc.into_iter().map(|v| v as f32).collect();
        let mut deps = vec![input, weight];
        deps.extend(bias);
        let rg = self.rg(&deps);
        self.push(
            Tensor::new(vec![d.oc, d.oh, d.ow], out)?,
            Op::ConvTranspose2d {
                input,
                weight,
                bias,
                geom,
            },
            rg,
        )
    }

    fn conv_dims(
        &self,
        op: &'static str,
        input: Var,
        weight: Var,
        bias: Option<Var>,
        geom: Conv2dGeom,
        transposed: bool,
    ) -> Result<ConvDims> {
        let (si, sw) = (self.value(input).shape(), self.value(weight).shape());
        let ([ic, ih, iw], [w0, w1, kh, kw]) = (si, sw) else {
            return Err(shape_err(
                op,
                format!("input {:?} must be [C,H,W], weight {:?} must be rank 4", si, sw),
            ));
        };
        let (wic, oc) = if transposed { (*w0, *w1) } else { (*w1, *w0) };
        if wic != *ic {
            return Err(shape_err(
                op,
                format!("input channels {} vs weight {:?}", ic, sw),
            ));
        }
        if geom.stride == 0 {
            return Err(shape_err(op, "stride must be positive".into()));
        }
        if let Some(b) = bias {
            let sb = self.value(b).shape();
            if sb != [oc] {
                return Err(shape_err(op, format!("bias {:?} vs {} outputs", sb, oc)));
            }
        }
        let (oh, ow) = if transposed {
            let h = ((*ih - 1) * geom.stride + kh).checked_sub(2 * geom.padding);
            let w = ((*iw - 1) * geom.stride + kw).checked_sub(2 * geom.padding);
            match (h, w) {
                (Some(h), Some(w)) if h > 0 && w > 0 => (h, w),
                _ => return Err(shape_err(op, format!("padding too large for {:?}", si))),
            }
        } else {
            let (ph, pw) = (ih + 2 * geom.padding, iw + 2 * geom.padding);
            if ph < *kh || pw < *kw {
                return Err(shape_err(
                    op,
                    format!("kernel {}x{} larger than padded input {}x{}", kh, kw, ph, pw),
                ));
            }
            ((ph - kh) / geom.stride + 1, (pw - kw) / geom.stride + 1)
        };
        Ok(ConvDims {
            ic: *ic,
            ih: *ih,
            iw: *iw,
            oc,
            oh,
            ow,
            kh: *kh,
            kw: *kw,
        })
    }

    pub fn sum(&mut self, a: Var) -> Result<Var> {
        let s = self.value(a).sum() as f32;
        let rg = self.rg(&[a]);
        self.push(Tensor::scalar(s), Op::Sum(a), rg)
    }

    pub fn mean(&mut self, a: Var) -> Result<Var> {
        let m = self.value(a).mean() as f32;
        let rg = self.rg(&[a]);
        self.push(Tensor::scalar(m), Op::Mean(a), rg)
    }

    /// Softmax over the last axis.
    pub fn softmax(&mut self, a: Var) -> Result<Var> {
        let t = self.value(a);
        let n = *t.shape().last().ok_or_else(|| shape_err("softmax", "rank 0".into()))?;
        let mut out = Vec::with_capacity(t.len());
        for row in t.data().chunks(n) {
            out.extend(softmax_row(row));
        }
        let shape = t.shape().to_vec();
        let rg = self.rg(&[a]);
        self.push(Tensor::new(shape, out)?, Op::Softmax(a), rg)
    }

    /// Cross-entropy of a single row of logits against `label`.
    pub fn cross_entropy(&mut self, logits: Var, label: usize) -> Result<Var> {
        let t = self.value(logits);
        let n = t.len();
        if !matches!(t.shape(), [_] | [1, _]) {
            return Err(shape_err(
                "cross_entropy",
                format!("expected one row of logits, got {:?}", t.shape()),
            ));
        }
        if label >= n {
            return Err(Error::LabelOutOfRange { label, classes: n });
        }
        let loss = log_sum_exp(t.data()) - t.data()[label] as f64;
        let rg = self.rg(&[logits]);
        self.push(
            Tensor::scalar(loss as f32),
            Op::CrossEntropy { logits, label },
            rg,
        )
    }

    /// Reverse pass from a single-element `loss`.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        if self.consumed {
            return Err(Error::GraphConsumed);
        }
        let shape = self.value(loss).shape().to_vec();
        if shape.iter().product::<usize>() != 1 {
            return Err(Error::NonScalarLoss(shape));
        }
        self.consumed = true;
        self.grads = (0..self.nodes.len()).map(|_| None).collect();
        self.grads[loss.0] = Some(Tensor::full(&shape, 1.0));

        for idx in (0..=loss.0).rev() {
            if !self.nodes[idx].requires_grad {
                continue;
            }
            let Some(g) = self.grads[idx].take() else {
                continue;
            };
            self.backprop_node(idx, &g)?;
            self.grads[idx] = Some(g);
        }
        Ok(())
    }

    fn accumulate(&mut self, v: Var, delta: Vec<f32>) {
        if !self.nodes[v.0].requires_grad {
            return;
        }
        match &mut self.grads[v.0] {
            Some(g) => {
                for (a, d) in g.data_mut().iter_mut().zip(delta) {
                    *a += d;
                }
            }
            slot @ None => {
                let shape = self.nodes[v.0].value.shape().to_vec();
                *slot = Some(Tensor::new(shape, delta).expect("gradient shape"));
            }
        }
    }

    fn backprop_node(&mut self, idx: usize, g: &Tensor) -> Result<()> {
        let gd = g.data();
        let op = self.nodes[idx].op.clone();
        match op {
            Op::Leaf => {}
            Op::Add(a, b) => {
                self.accumulate(a, gd.to_vec());
                self.accumulate(b, gd.to_vec());
            }
            Op::Sub(a, b) => {
                self.accumulate(a, gd.to_vec());
                self.accumulate(b, gd.iter().map(|v| -v).collect());
            }
            Op::Mul(a, b) => {
                let ga = mul_elems(gd, self.value(b).data());
                let gb = mul_elems(gd, self.value(a).data());
                self.accumulate(a, ga);
                self.accumulate(b, gb);
            }
            Op::Div(a, b) => {
                let (av, bv) = (self.value(a).data(), self.value(b).data());
                let ga: Vec<f32> = gd.iter().zip(bv).map(|(g, b)| g / b).collect();
                let gb: Vec<f32> = gd
                    .iter()
                    .zip(av.iter().zip(bv))
                    .map(|(g, (a, b))| -g * a / (b * b))
                    .collect();
                self.accumulate(a, ga);
                self.accumulate(b, gb);
            }
            Op::Scale(a, k) => self.accumulate(a, gd.iter().map(|v| v * k).collect()),
            Op::AddScalar(a) | Op::Reshape(a) => self.accumulate(a, gd.to_vec()),
            Op::Relu(a) => {
                let x = self.value(a).data();
                let ga = gd
                    .iter()
                    .zip(x)
                    .map(|(g, &x)| if x > 0.0 { *g } else { 0.0 })
                    .collect();
                self.accumulate(a, ga);
            }
            Op::Abs(a) => {
                let x = self.value(a).data();
                let ga = gd.iter().zip(x).map(|(g, &x)| g * sign(x)).collect();
                self.accumulate(a, ga);
            }
            Op::Clamp(a, lo, hi) => {
                let x = self.value(a).data();
                let ga = gd
                    .iter()
                    .zip(x)
                    .map(|(g, &x)| if x >= lo && x <= hi { *g } else { 0.0 })
                    .collect();
                self.accumulate(a, ga);
            }
            Op::Blend(a, b, gamma) => {
                self.accumulate(a, gd.iter().map(|v| v * (1.0 - gamma)).collect());
                self.accumulate(b, gd.iter().map(|v| v * gamma).collect());
            }
            Op::MatMul(a, b) => {
                let (m, k) = (self.value(a).shape()[0], self.value(a).shape()[1]);
                let n = self.value(b).shape()[1];
                let (ad, bd) = (self.value(a).data(), self.value(b).data());
                let mut ga = vec![0.0f32; m * k];
                let mut gb = vec![0.0f32; k * n];
                for i in 0..m {
                    for p in 0..k {
                        let mut acc = 0.0f64;
                        for j in 0..n {
                            acc += gd[i * n + j] as f64 * bd[p * n + j] as f64;
                        }
                        ga[i * k + p] = acc as f32;
                    }
                }
                for p in 0..k {
                    for j in 0..n {
                        let mut acc = 0.0f64;
                        for i in 0..m {
                            acc += ad[i * k + p] as f64 * gd[i * n + j] as f64;
                        }
                        gb[p * n + j] = acc as f32;
                    }
                }
                self.accumulate(a, ga);
                self.accumulate(b, gb);
            }
            Op::Conv2d {
                input,
                weight,
                bias,
                geom,
            } => {
                let d = self.conv_dims("conv2d", input, weight, bias, geom, false)?;
                let (x, w) = (self.value(input).data(), self.value(weight).data());
                let mut gx = vec![0.0f64; x.len()];
                let mut gw = vec![0.0f64; w.len()];
                let mut gbias = vec![0.0f64; d.oc];
                let (s, p) = (geom.stride, geom.padding);
                for o in 0..d.oc {
                    for i in 0..d.oh {
                        for j in 0..d.ow {
                            let go = gd[(o * d.oh + i) * d.ow + j] as f64;
                            if go == 0.0 {
                                continue;
                            }
                            gbias[o] += go;
                            for c in 0..d.ic {
                                for ki in 0..d.kh {
                                    let Some(y) = (i * s + ki).checked_sub(p).filter(|&y| y < d.ih)
                                    else {
                                        continue;
                                    };
                                    for kj in 0..d.kw {
                                        let Some(xx) =
                                            (j * s + kj).checked_sub(p).filter(|&v| v < d.iw)
                                        else {
                                            continue;
                                        };
                                        let wi = ((o * d.ic + c) * d.kh + ki) * d.kw + kj;
                                        let xi = (c * d.ih + y) * d.iw + xx;
                                        gx[xi] += go * w[wi] as f64;
                                        gw[wi] += go * x[xi] as f64;
                                    }
                                }
                            }
                        }
                    }
                }
                self.accumulate(input, to_f32(gx));
                self.accumulate(weight, to_f32(gw));
                if let Some(b) = bias {
                    self.accumulate(b, to_f32(gbias));
                }
            }
            Op::ConvTranspose2d {
                input,
                weight,
                bias,
                geom,
            } => {
                let d = self.conv_dims("conv_transpose2d", input, weight, bias, geom, true)?;
                let (x, w) = (self.value(input).data(), self.value(weight).data());
                let mut gx = vec![0.0f64; x.len()];
                let mut gw = vec![0.0f64; w.len()];
                let (s, p) = (geom.stride, geom.padding);
                for c in 0..d.ic {
                    for i in 0..d.ih {
                        for j in 0..d.iw {
                            let xi = (c * d.ih + i) * d.iw + j;
                            let xv = x[xi] as f64;
                            let mut acc = 0.0f64;
                            for o in 0..d.oc {
                                for ki in 0..d.kh {
                                    let Some(y) = (i * s + ki).checked_sub(p).filter(|&y| y < d.oh)
                                    else {
                                        continue;
                                    };
                                    for kj in 0..d.kw {
                                        let Some(xx) =
                                            (j * s + kj).checked_sub(p).filter(|&v| v < d.ow)
                                        else {
                                            continue;
                                        };
                                        let go = gd[(o * d.oh + y) * d.ow + xx] as f64;
                                        let wi = ((c * d.oc + o) * d.kh + ki) * d.kw + kj;
                                        acc += go * w[wi] as f64;
                                        gw[wi] += go * xv;
                                    }
                                }
                            }
                            gx[xi] = acc;
                        }
                    }
                }
                self.accumulate(input, to_f32(gx));
                self.accumulate(weight, to_f32(gw));
                if let Some(b) = bias {
                    let plane = d.oh * d.ow;
                    let gb = (0..d.oc)
                        .map(|o| gd[o * plane..(o + 1) * plane].iter().map(|&v| v as f64).sum::<f64>() as f32)
                        .collect();
                    self.accumulate(b, gb);
                }
            }
            Op::Sum(a) => {
                let n = self.value(a).len();
                self.accumulate(a, vec![gd[0]; n]);
            }
            Op::Mean(a) => {
                let n = self.value(a).len();
                self.accumulate(a, vec![gd[0] / n as f32; n]);
            }
            Op::Softmax(a) => {
                let y = &self.nodes[idx].value;
                let n = *y.shape().last().expect("softmax rank");
                let mut ga = Vec::with_capacity(y.len());
                for (yr, gr) in y.data().chunks(n).zip(gd.chunks(n)) {
                    let dot: f64 = yr.iter().zip(gr).map(|(&y, &g)| y as f64 * g as f64).sum();
                    ga.extend(yr.iter().zip(gr).map(|(&y, &g)| (y as f64 * (g as f64 - dot)) as f32));
                }
                self.accumulate(a, ga);
            }
            Op::CrossEntropy { logits, label } => {
                let mut p = softmax_row(self.value(logits).data());
                p[label] -= 1.0;
                let g0 = gd[0];
                self.accumulate(logits, p.into_iter().map(|v| v * g0).collect());
            }
        }
        Ok(())
    }
}

struct ConvDims {
    ic: usize,
    ih: usize,
    iw: usize,
    oc: usize,
    oh: usize,
    ow: usize,
    kh: usize,
    kw: usize,
}

fn mul_elems(a: &[f32], b: &[f32]) -> Vec<f32> {
    a.iter().zip(b).map(|(x, y)| x * y).collect()
}

fn to_f32(v: Vec<f64>) -> Vec<f32> {
    v.into_iter().map(|x| x as f32).collect()
}

/// `sign(0) = 0`.
pub fn sign(x: f32) -> f32 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

pub fn log_sum_exp(row: &[f32]) -> f64 {
    let m = row.iter().copied().fold(f32::NEG_INFINITY, f32::max) as f64;
    m + libm::log(row.iter().map(|&v| libm::exp(v as f64 - m)).sum())
}

pub fn softmax_row(row: &[f32]) -> Vec<f32> {
    let m = row.iter().copied().fold(f32::NEG_INFINITY, f32::max) as f64;
    let e: Vec<f64> = row.iter().map(|&v| libm::exp(v as f64 - m)).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| (v / s) as f32).collect()
}
