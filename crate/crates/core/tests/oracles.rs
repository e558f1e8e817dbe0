mod support;

use ada_core::augment::{run_pipeline, PipelineConfig, PipelineCtx};
use ada_core::autodiff::{Graph, Var};
use ada_core::corruptions::{corrupt, CorruptionSpec, ALL_KINDS};
use ada_core::data::{synthetic, SyntheticConfig};
use ada_core::eval::{pgd_input_attack, ssim_values, Norm, PgdConfig};
use ada_core::exec::Sequential;
use ada_core::nets::{
    build_net, mean_reconstruction_error, pretrain_corruption, Architecture, Classify, Model, NetSpec,
    PretrainConfig,
};
use ada_core::optim::{sgd_nesterov_step, SgdState};
use ada_core::perturb::{find_adversarial, AdaConfig};
use ada_core::rng;
use ada_core::ssim::{ssim, SsimConfig};
use ada_core::{Result, Tensor};
use rand::Rng as _;
use support::images::{add_noise, smooth_image};

#[test]
fn pretraining_halves_reconstruction_error() {
    let train = synthetic(&SyntheticConfig::new(2, 64, 16, 1)).unwrap();
    let held = synthetic(&SyntheticConfig::new(2, 32, 16, 2)).unwrap();
    for arch in [Architecture::MiniCae, Architecture::MiniUnet] {
        let (init, net) = build_net(NetSpec::corruption(arch, 1, 16), 3).unwrap();
        let before = mean_reconstruction_error(&net, &init, &held.images).unwrap();
        let (trained, _) = pretrain_corruption(&net, &init, &train.images, &PretrainConfig::default()).unwrap();
        let after = mean_reconstruction_error(&net, &trained, &held.images).unwrap();
        assert!(after <= 0.5 * before, "{}: {} -> {}", arch, before, after);
    }
}

/// Logits `[0, w·x + b]` for a fixed `w`.
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

#[test]
fn pgd_matches_linear_margin() {
    // Class 0 wins while w·x + b < 0. Along −w the margin closes after
    // |w·x + b| / ‖w‖ in l2; picking points well inside the box keeps the
    // clamp inactive.
    let mut agree = 0;
    for k in 0..20u64 {
        let mut r = rng::stream(k, "linear-case", 0);
        let x = Tensor::new(vec![1, 4, 4], (0..16).map(|_| r.random_range(0.4..0.6)).collect()).unwrap();
        let w = Tensor::new(vec![16], (0..16).map(|_| r.random_range(-1.0..1.0)).collect()).unwrap();
        let wn = w.l2_norm();
        let margin = r.random_range(0.05..0.3) * wn;
        let wx: f64 = w.data().iter().zip(x.data()).map(|(&a, &b)| a as f64 * b as f64).sum();
        let clf = Linear { w: w.clone(), b: (-wx - margin) as f32 };
        let eps = r.random_range(0.02..0.4);
        let predicted = wn * eps >= margin;
        let cfg = PgdConfig { steps: 100, restarts: 2, seed: k, ..PgdConfig::new(Norm::L2, eps) };
        let res = pgd_input_attack(&clf, &x, 0, &cfg).unwrap();
        let d = res.x_adv.zip_map(&x, |a, b| a - b).unwrap();
        assert!(d.l2_norm() <= eps + 1e-6);
        agree += (res.success == predicted) as usize;
    }
    assert_eq!(agree, 20);
}

#[test]
fn ssim_drops_as_noise_grows() {
    let cfg = SsimConfig::default();
    let mut monotone = 0;
    for s in 0..100u64 {
        let x = smooth_image(s, 1, 16);
        let vals: Vec<f64> = (1..=10)
            .map(|i| ssim(&x, &add_noise(&x, 0.05 * i as f64, s), &cfg).unwrap())
            .collect();
        monotone += vals.windows(2).all(|p| p[1] <= p[0]) as usize;
    }
    assert!(monotone >= 95, "{}", monotone);
}

#[test]
fn mean_ssim_falls_with_severity() {
    let cfg = SsimConfig::default();
    let data = synthetic(&SyntheticConfig::new(2, 100, 16, 7)).unwrap();
    for kind in ALL_KINDS {
        let means: Vec<f64> = (1..=5)
            .map(|severity| {
                data.images
                    .iter()
                    .enumerate()
                    .map(|(i, x)| {
                        let spec = CorruptionSpec { kind, severity, seed: i as u64 };
                        ssim(x, &corrupt(x, &spec).unwrap(), &cfg).unwrap()
                    })
                    .sum::<f64>()
                    / data.len() as f64
            })
            .collect();
        assert!(means.windows(2).all(|p| p[1] <= p[0]), "{}: {:?}", kind, means);
    }
}

#[test]
fn larger_radius_finds_higher_loss() {
    let (phi, cnet) = build_net(NetSpec::corruption(Architecture::MiniCae, 1, 16), 4).unwrap();
    let (theta, net) = build_net(NetSpec::classifier(1, 16, 2), 5).unwrap();
    let clf = Model { net: &net, params: &theta };
    let data = synthetic(&SyntheticConfig::new(2, 50, 16, 8)).unwrap();
    let mut violations = 0;
    for (i, x) in data.images.iter().enumerate() {
        let loss = |nu: f64| {
            let cfg = AdaConfig { nu, steps: 5, seed: i as u64, ..AdaConfig::default() };
            find_adversarial(&cnet, &phi, &clf, x, data.labels[i], &cfg).unwrap().final_loss()
        };
        violations += (loss(0.03) < loss(0.01)) as usize;
    }
    assert!(violations <= 5, "{}", violations);
}

#[test]
fn nominal_steps_reduce_frozen_batch_loss() {
    let data = synthetic(&SyntheticConfig::new(2, 8, 16, 9)).unwrap();
    let mut improved = 0;
    for seed in 0..10u64 {
        let (mut theta, net) = build_net(NetSpec::classifier(1, 16, 2), seed).unwrap();
        let mut state = SgdState::new(&theta);
        let batch_loss = |theta: &ada_core::ParamSet| -> (f64, Vec<Tensor>) {
            let mut total = 0.0;
            let mut sum: Vec<Tensor> = theta.tensors().map(|t| Tensor::zeros(t.shape())).collect();
            for (x, &y) in data.images.iter().zip(&data.labels) {
                let mut g = Graph::new();
                let p = theta.to_vars(&mut g, true).unwrap();
                let xv = g.constant(x.clone()).unwrap();
                let z = net.forward(&mut g, &p, xv).unwrap();
                let l = g.cross_entropy(z, y).unwrap();
                total += g.value(l).data()[0] as f64;
                g.backward(l).unwrap();
                for (s, v) in sum.iter_mut().zip(&p) {
                    *s = s.zip_map(g.grad(*v).unwrap(), |a, b| a + b / 8.0).unwrap();
                }
            }
            (total / 8.0, sum)
        };
        let (start, _) = batch_loss(&theta);
        for _ in 0..10 {
            let (_, grads) = batch_loss(&theta);
            theta = sgd_nesterov_step(&theta, &grads, &mut state, 0.05, 0.9, 0.0).unwrap();
        }
        improved += (batch_loss(&theta).0 < start) as usize;
    }
    assert!(improved >= 8, "{}", improved);
}

#[test]
fn guarded_pipeline_output_meets_threshold() {
    let (phi, cnet) = build_net(NetSpec::corruption(Architecture::MiniCae, 1, 16), 6).unwrap();
    let (theta, net) = build_net(NetSpec::classifier(1, 16, 2), 6).unwrap();
    let model = Model { net: &net, params: &theta };
    // A large radius so the guard has work to do.
    let ctx = PipelineCtx {
        corruption: &cnet,
        phi: &phi,
        classifier: &model,
        ada: AdaConfig { nu: 0.5, steps: 3, ssim_threshold: 0.7, ..AdaConfig::default() },
        ssim: SsimConfig::default(),
    };
    let cfg = PipelineConfig { use_standard_aug: true, use_ada: true, seed: 1, ..PipelineConfig::default() };
    let data = synthetic(&SyntheticConfig::new(2, 8, 16, 10)).unwrap();
    for (i, x) in data.images.iter().enumerate() {
        let out = run_pipeline(x, data.labels[i], &cfg, Some(&ctx), i as u64).unwrap();
        let rec = out.ada.unwrap();
        assert!(ssim(&rec.ada_input, &out.x, &ctx.ssim).unwrap() >= 0.7 - 0.05);
    }
}

#[test]
fn zero_radius_ssim_is_clean_corruption() {
    let (phi, cnet) = build_net(NetSpec::corruption(Architecture::MiniUnet, 1, 16), 6).unwrap();
    let (theta, net) = build_net(NetSpec::classifier(1, 16, 2), 6).unwrap();
    let data = synthetic(&SyntheticConfig::new(2, 6, 16, 11)).unwrap();
    let ada = AdaConfig { nu: 0.0, steps: 2, ..AdaConfig::default() };
    let cfg = SsimConfig::default();
    let vals = ssim_values(&cnet, &phi, &Model { net: &net, params: &theta }, &data, &ada, &cfg, &Sequential).unwrap();
    for (v, x) in vals.iter().zip(&data.images) {
        assert_eq!(*v, ssim(x, &cnet.infer(&phi, x).unwrap(), &cfg).unwrap());
    }
}
