//! Command-line front end. Every command reads one [`RunConfig`], writes its
//! reports plus `resolved.ini` into the output directory, and maps failures
//! onto [`CliError::exit_code`].
//!
//! All randomness derives from the master seed `run.seed` through
//! `derive_seed(seed, tag, 0)` with one tag per use: `gen-train`, `gen-test`,
//! `corruption-init`, `pretrain`, `classifier-init`, `train`, `pipeline`,
//! `ada`, `eval`, `attack`, `noise`, `reconstruct` and `export`.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use ada_core::corruptions::{corrupt, CorruptionSpec};
use ada_core::data::{synthetic, Dataset, SyntheticConfig, MEAN_IMAGE_MARGIN};
use ada_core::eval::{
    evaluate_corruptions, reconstruct_corruption, robust_accuracy, ssim_distribution, stochastic_param_eval,
    EvalReport, PgdConfig, ReconConfig, RobustEntry,
};
use ada_core::nets::{mean_reconstruction_error, pretrain_corruption, Model, PretrainConfig};
use ada_core::rng::derive_seed;
use ada_core::ssim::SsimConfig;
use ada_core::trainer::{self, AdaSetup, Checkpoint, EpochLog, TrainConfig};
use ada_core::{AdaConfig, Net, NetSpec, ParamSet};
use ada_core::augment::PipelineConfig;

use crate::config::{ConfigError, RunConfig, SweepMode};
use crate::exec::Pool;
use crate::formats::FormatError;
use crate::report::{self, SweepRow};
use crate::store;

pub const RESOLVED_CONFIG: &str = "resolved.ini";
pub const CLASSIFIER_FILE: &str = "checkpoint.adck";
pub const CORRUPTION_FILE: &str = "corruption.adck";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("usage: {0}")]
    Usage(String),
    #[error("missing checkpoint {0}")]
    MissingCheckpoint(PathBuf),
    #[error("data: {0}")]
    Data(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    NonFinite(ada_core::Error),
    #[error("{0}")]
    Core(ada_core::Error),
}

impl CliError {
    /// 2 config or usage, 3 missing checkpoint, 4 bad data, 5 io,
    /// 6 non-finite loss, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Usage(_) => 2,
            CliError::MissingCheckpoint(_) => 3,
            CliError::Data(_) => 4,
            CliError::Io(_) => 5,
            CliError::NonFinite(_) => 6,
            CliError::Core(_) => 1,
        }
    }
}

impl From<ada_core::Error> for CliError {
    fn from(e: ada_core::Error) -> Self {
        match e {
            ada_core::Error::NonFiniteLoss { .. } => CliError::NonFinite(e),
            ada_core::Error::InvalidConfig(m) => CliError::Usage(m),
            ada_core::Error::EmptyDataset | ada_core::Error::LabelOutOfRange { .. } => CliError::Data(e.to_string()),
            e => CliError::Core(e),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "ada", version, about = "Adversarial weight-perturbation training on desk-scale data")]
pub struct Args {
    /// INI run configuration; every key defaults when absent.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory for reports, checkpoints and resolved.ini.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Worker threads. Results do not depend on this.
    #[arg(long, global = true, default_value_t = 1)]
    pub workers: usize,
    /// Overrides run.seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// Synthetic train/test sets into <out>/train and <out>/test.
    GenData,
    /// Corrupted copies of data.test as kind_severity.adat.
    ExportCorrupted,
    /// Train the corruption net to reproduce data.train.
    Pretrain,
    /// Train the classifier with the configured pipeline.
    Train,
    /// Corruption-suite error matrix and mCE for eval.checkpoint.
    Eval,
    /// Fit weight perturbations that imitate a target corruption.
    Reconstruct,
    /// Input-space PGD robust accuracy.
    Attack,
    /// Error under Gaussian parameter noise.
    NoiseEval,
    /// Pre-guard SSIM distribution of AdA examples.
    SsimDist,
    /// Train and evaluate over an inner-step or radius grid.
    Sweep,
}

fn read_config(path: Option<&Path>) -> Result<RunConfig, CliError> {
    match path {
        None => Ok(RunConfig::default()),
        Some(p) => {
            let text = fs::read_to_string(p)
                .map_err(|e| CliError::Usage(format!("cannot read config {}: {}", p.display(), e)))?;
            Ok(RunConfig::parse(&text)?)
        }
    }
}

pub fn run(args: &Args) -> Result<(), CliError> {
    let mut cfg = read_config(args.config.as_deref())?;
    if let Some(s) = args.seed {
        cfg.run.seed = s;
    }
    let pool = Pool::new(args.workers).map_err(|e| CliError::Usage(e.to_string()))?;
    fs::create_dir_all(&args.out)?;
    report::write(&args.out, RESOLVED_CONFIG, &cfg.render())?;
    let ctx = Ctx {
        cfg: &cfg,
        out: &args.out,
        pool: &pool,
    };
    log::info!("{:?} with {} worker(s), seed {}", args.command, pool.workers(), cfg.run.seed);
    match args.command {
        Command::GenData => ctx.gen_data(),
        Command::ExportCorrupted => ctx.export_corrupted(),
        Command::Pretrain => ctx.pretrain(),
        Command::Train => ctx.train().map(|_| ()),
        Command::Eval => ctx.eval(),
        Command::Reconstruct => ctx.reconstruct(),
        Command::Attack => ctx.attack(),
        Command::NoiseEval => ctx.noise_eval(),
        Command::SsimDist => ctx.ssim_dist(),
        Command::Sweep => ctx.sweep(),
    }
}

fn data_err(path: &Path, e: FormatError) -> CliError {
    match e {
        FormatError::Io(io) if io.kind() == std::io::ErrorKind::NotFound => {
            CliError::Data(format!("{}: {}", path.display(), io))
        }
        FormatError::Io(io) => CliError::Io(io),
        e => CliError::Data(format!("{}: {}", path.display(), e)),
    }
}

fn checkpoint_err(path: &Path, e: FormatError) -> CliError {
    match e {
        FormatError::Io(io) if io.kind() == std::io::ErrorKind::NotFound => CliError::MissingCheckpoint(path.into()),
        FormatError::Io(io) => CliError::Io(io),
        e => CliError::Data(format!("{}: {}", path.display(), e)),
    }
}

fn write_err(e: FormatError) -> CliError {
    match e {
        FormatError::Io(io) => CliError::Io(io),
        e => CliError::Data(e.to_string()),
    }
}

fn image_geometry(data: &Dataset) -> Result<(usize, usize), CliError> {
    let s = data.images.first().ok_or(CliError::Data("empty dataset".into()))?.shape();
    if s.len() != 3 || s[1] != s[2] {
        return Err(CliError::Data(format!("images must be square [C, H, W], got {:?}", s)));
    }
    Ok((s[0], s[1]))
}

fn limit(data: Dataset, n: usize) -> Dataset {
    if n == 0 || n >= data.len() {
        data
    } else {
        data.subset(&(0..n).collect::<Vec<_>>())
    }
}

struct Ctx<'a> {
    cfg: &'a RunConfig,
    out: &'a Path,
    pool: &'a Pool,
}

struct Trained {
    net: Net,
    checkpoint: Checkpoint,
    logs: Vec<EpochLog>,
}

impl Ctx<'_> {
    fn seed(&self, tag: &str) -> u64 {
        derive_seed(self.cfg.run.seed, tag, 0)
    }

    fn ssim_cfg(&self) -> SsimConfig {
        let s = &self.cfg.ssim;
        SsimConfig {
            window: s.window,
            sigma: s.sigma,
            k1: s.k1,
            k2: s.k2,
            range: s.range,
        }
    }

    fn ada_cfg(&self) -> AdaConfig {
        let a = &self.cfg.ada;
        AdaConfig {
            nu: a.nu,
            steps: a.steps,
            step_size: a.step_size.0,
            reference_steps: a.reference_steps,
            ssim_threshold: a.ssim_threshold,
            seed: self.seed("ada"),
        }
    }

    fn train_cfg(&self) -> TrainConfig {
        let t = &self.cfg.train;
        TrainConfig {
            epochs: t.epochs,
            batch_size: t.batch_size,
            nano_batch: t.nano_batch,
            lr: t.lr,
            warmup_epochs: t.warmup_epochs,
            momentum: t.momentum,
            weight_decay: t.weight_decay,
            reference_batch: t.reference_batch,
            seed: self.seed("train"),
        }
    }

    fn pipeline_cfg(&self) -> PipelineConfig {
        let p = &self.cfg.pipeline;
        PipelineConfig {
            use_deepaugment_mini: p.deepaugment_mini,
            use_standard_aug: p.standard_aug,
            use_ada: p.ada,
            use_augmix_mini: p.augmix_mini,
            seed: self.seed("pipeline"),
        }
    }

    fn load_data(&self, path: &str, classes: Option<usize>) -> Result<Dataset, CliError> {
        let p = Path::new(path);
        store::load_dataset(p, classes).map_err(|e| data_err(p, e))
    }

    fn load_classifier(&self) -> Result<(Net, Checkpoint), CliError> {
        let p = Path::new(&self.cfg.eval.checkpoint);
        let (spec, ck) = store::load_classifier(p).map_err(|e| checkpoint_err(p, e))?;
        Ok((Net::new(spec)?, ck))
    }

    fn load_corruption(&self) -> Result<(Net, ParamSet), CliError> {
        let p = Path::new(&self.cfg.corruption.checkpoint);
        let (spec, phi) = store::load_corruption(p).map_err(|e| checkpoint_err(p, e))?;
        Ok((Net::new(spec)?, phi))
    }

    fn gen_data(&self) -> Result<(), CliError> {
        let g = &self.cfg.gen;
        if g.n < g.classes {
            return Err(CliError::Usage(format!("gen.n = {} is below gen.classes = {}", g.n, g.classes)));
        }
        for split in ["train", "test"] {
            let sc = SyntheticConfig::new(g.classes, g.n, g.extent, self.seed(&format!("gen-{}", split)));
            let data = synthetic(&sc)?;
            let means = data.class_means();
            for a in 0..means.len() {
                for b in a + 1..means.len() {
                    let d = means[a].zip_map(&means[b], |p, q| p - q)?.l2_norm();
                    if d < MEAN_IMAGE_MARGIN {
                        return Err(CliError::Data(format!(
                            "{} classes {} and {} mean images differ by {} < {}",
                            split, a, b, d, MEAN_IMAGE_MARGIN
                        )));
                    }
                }
            }
            store::save_dataset(&self.out.join(split), &data).map_err(write_err)?;
            log::info!("{}: {} images, class counts {:?}", split, data.len(), data.class_counts());
        }
        Ok(())
    }

    fn export_corrupted(&self) -> Result<(), CliError> {
        let data = self.load_data(&self.cfg.data.test, None)?;
        let names = store::export_corrupted(self.out, &data, &self.cfg.eval.kinds.0, self.seed("export"))
            .map_err(write_err)?;
        log::info!("wrote {} files", names.len());
        Ok(())
    }

    fn pretrain(&self) -> Result<(), CliError> {
        let data = self.load_data(&self.cfg.data.train, None)?;
        let (channels, extent) = image_geometry(&data)?;
        let mut spec = NetSpec::corruption(self.cfg.corruption.arch, channels, extent);
        spec.width = self.cfg.corruption.width;
        let net = Net::new(spec)?;
        let init = net.init(self.seed("corruption-init"));
        let p = &self.cfg.pretrain;
        let pc = PretrainConfig {
            epochs: p.epochs,
            lr: p.lr as f32,
            mse_weight: p.mse_weight as f32,
            seed: self.seed("pretrain"),
        };
        let (phi, trace) = pretrain_corruption(&net, &init, &data.images, &pc)?;
        let err = mean_reconstruction_error(&net, &phi, &data.images)?;
        log::info!("pretrained {} to mean abs error {:.4}", spec.arch, err);
        store::save_corruption(&self.out.join(CORRUPTION_FILE), &spec, &phi).map_err(write_err)?;
        report::write(self.out, "pretrain.csv", &report::pretrain_csv(&trace, err))?;
        Ok(())
    }

    /// Trains into `dir` with the given AdA settings.
    fn train_into(&self, dir: &Path, pipeline: &PipelineConfig, ada: &AdaConfig) -> Result<Trained, CliError> {
        let data = self.load_data(&self.cfg.data.train, None)?;
        let (channels, extent) = image_geometry(&data)?;
        let mut spec = NetSpec::classifier(channels, extent, data.classes.max(2));
        spec.width = self.cfg.classifier.width;
        let net = Net::new(spec)?;
        let start = if self.cfg.train.resume.is_empty() {
            Checkpoint::fresh(net.init(self.seed("classifier-init")), self.cfg.run.seed)
        } else {
            let p = Path::new(&self.cfg.train.resume);
            let (rspec, ck) = store::load_classifier(p).map_err(|e| checkpoint_err(p, e))?;
            if rspec != spec {
                return Err(CliError::Usage(format!("resume checkpoint has net {:?}, config gives {:?}", rspec, spec)));
            }
            if ck.seed != self.cfg.run.seed {
                return Err(CliError::Usage(format!(
                    "resume checkpoint was trained with seed {}, config has {}",
                    ck.seed, self.cfg.run.seed
                )));
            }
            ck
        };
        let corruption = if pipeline.use_ada || pipeline.use_deepaugment_mini {
            Some(self.load_corruption()?)
        } else {
            None
        };
        let setup = corruption.as_ref().map(|(c, phi)| AdaSetup {
            corruption: c,
            phi,
            ada: *ada,
            ssim: self.ssim_cfg(),
        });
        fs::create_dir_all(dir)?;
        let ck_path = dir.join(CLASSIFIER_FILE);
        let mut rows = Vec::new();
        let mut write_failure = None;
        let keep_epochs = self.cfg.train.keep_epochs;
        let result = trainer::train(
            &net,
            &data,
            &self.train_cfg(),
            pipeline,
            setup.as_ref(),
            start,
            self.pool,
            |ck, row| {
                rows.push(*row);
                let keep = dir.join(format!("epoch_{}.adck", ck.epoch));
                let written = store::save_classifier(&ck_path, &spec, ck)
                    .and_then(|_| if keep_epochs { store::save_classifier(&keep, &spec, ck) } else { Ok(()) })
                    .map_err(write_err)
                    .and_then(|_| Ok(report::write(dir, "metrics.csv", &report::metrics_csv(&rows))?));
                written.map_err(|e| {
                    write_failure = Some(e);
                    ada_core::Error::InvalidConfig("report write failed".into())
                })
            },
        );
        if let Some(e) = write_failure {
            return Err(e);
        }
        let (checkpoint, logs) = match result {
            Err(e @ ada_core::Error::NonFiniteLoss { .. }) => {
                report::write(dir, "nonfinite.txt", &format!("{}\n", e))?;
                return Err(e.into());
            }
            r => r?,
        };
        if logs.is_empty() {
            store::save_classifier(&ck_path, &spec, &checkpoint).map_err(write_err)?;
            report::write(dir, "metrics.csv", &report::metrics_csv(&logs))?;
        }
        Ok(Trained { net, checkpoint, logs })
    }

    fn train(&self) -> Result<Trained, CliError> {
        self.train_into(self.out, &self.pipeline_cfg(), &self.ada_cfg())
    }

    fn robust_entries(&self, clf: &Model<'_>, data: &Dataset) -> Result<Vec<RobustEntry>, CliError> {
        let a = &self.cfg.attack;
        let data = limit(data.clone(), a.limit);
        let mut out = Vec::new();
        for &norm in &a.norms {
            for &eps in &a.eps {
                let mut pc = PgdConfig::new(norm, eps);
                pc.steps = a.steps;
                pc.restarts = a.restarts;
                pc.seed = self.seed("attack");
                out.push(robust_accuracy(clf, &data, &pc, self.pool)?);
            }
        }
        Ok(out)
    }

    fn eval_model(&self, dir: &Path, net: &Net, theta: &ParamSet) -> Result<EvalReport, CliError> {
        let data = self.load_data(&self.cfg.data.test, Some(net.spec().classes))?;
        let clf = Model { net, params: theta };
        let mut r = evaluate_corruptions(&clf, &data, &self.cfg.eval.kinds.0, self.seed("eval"), self.pool)?;
        if self.cfg.eval.robust {
            r.robust = self.robust_entries(&clf, &data)?;
            report::write(dir, "robust.csv", &report::robust_csv(&r.robust))?;
        }
        report::write(dir, "eval.csv", &report::eval_csv(&r))?;
        report::write(dir, "eval_summary.txt", &report::eval_summary(&r))?;
        log::info!("mCE {:.4}, clean error {:.4}", r.mce, r.clean_error);
        Ok(r)
    }

    fn eval(&self) -> Result<(), CliError> {
        let (net, ck) = self.load_classifier()?;
        self.eval_model(self.out, &net, &ck.theta).map(|_| ())
    }

    fn reconstruct(&self) -> Result<(), CliError> {
        let (net, phi) = self.load_corruption()?;
        let r = &self.cfg.reconstruct;
        let data = limit(self.load_data(&self.cfg.data.test, None)?, r.count);
        let rc = ReconConfig {
            steps: r.steps,
            lr: r.lr,
            lambda: r.lambda,
            ssim: self.ssim_cfg(),
        };
        let seed = self.seed("reconstruct");
        let results = ada_core::exec::Executor::map(self.pool, data.len(), |i| {
            let spec = CorruptionSpec {
                kind: r.kind,
                severity: r.severity,
                seed: derive_seed(seed, "reconstruct-example", i as u64),
            };
            let target = corrupt(&data.images[i], &spec)?;
            reconstruct_corruption(&net, &phi, &data.images[i], &target, &rc)
        });
        let rows = results.into_iter().collect::<Result<Vec<_>, _>>()?;
        let improved = rows.iter().filter(|x| x.final_ssim >= x.baseline_ssim + 0.05).count();
        report::write(self.out, "reconstruct.csv", &report::reconstruct_csv(&rows))?;
        report::write(
            self.out,
            "reconstruct_summary.txt",
            &format!(
                "kind={} severity={} images={} improved_by_0.05={}\n",
                r.kind.name(),
                r.severity,
                rows.len(),
                improved
            ),
        )?;
        Ok(())
    }

    fn attack(&self) -> Result<(), CliError> {
        let (net, ck) = self.load_classifier()?;
        let data = self.load_data(&self.cfg.data.test, Some(net.spec().classes))?;
        let clf = Model {
            net: &net,
            params: &ck.theta,
        };
        let rows = self.robust_entries(&clf, &data)?;
        report::write(self.out, "robust.csv", &report::robust_csv(&rows))?;
        Ok(())
    }

    fn noise_eval(&self) -> Result<(), CliError> {
        let (net, ck) = self.load_classifier()?;
        let n = &self.cfg.noise;
        let data = limit(self.load_data(&self.cfg.data.test, Some(net.spec().classes))?, n.limit);
        let rows = stochastic_param_eval(&net, &ck.theta, &data, &n.etas, n.samples, self.seed("noise"), self.pool)?;
        report::write(self.out, "noise.csv", &report::noise_csv(&rows))?;
        Ok(())
    }

    fn ssim_dist(&self) -> Result<(), CliError> {
        let (net, ck) = self.load_classifier()?;
        let (cnet, phi) = self.load_corruption()?;
        let data = limit(
            self.load_data(&self.cfg.data.test, Some(net.spec().classes))?,
            self.cfg.ssim_dist.limit,
        );
        let clf = Model {
            net: &net,
            params: &ck.theta,
        };
        let s = ssim_distribution(&cnet, &phi, &clf, &data, &self.ada_cfg(), &self.ssim_cfg(), self.pool)?;
        report::write(self.out, "ssim_hist.csv", &report::histogram_csv(&s))?;
        report::write(self.out, "ssim_summary.txt", &report::ssim_summary(&s))?;
        Ok(())
    }

    fn sweep(&self) -> Result<(), CliError> {
        let mode = self.cfg.sweep.mode;
        let values = if self.cfg.sweep.values.is_empty() {
            mode.default_values()
        } else {
            self.cfg.sweep.values.clone()
        };
        if !self.cfg.train.resume.is_empty() {
            return Err(CliError::Usage("train.resume cannot be combined with sweep".into()));
        }
        let mut pipeline = self.pipeline_cfg();
        pipeline.use_ada = true;
        let mut rows = Vec::new();
        for (i, &v) in values.iter().enumerate() {
            let mut ada = self.ada_cfg();
            match mode {
                SweepMode::Steps => {
                    if !(v >= 0.0 && v.fract() == 0.0) {
                        return Err(CliError::Usage(format!("sweep step count {} is not a whole number", v)));
                    }
                    ada.steps = v as usize;
                }
                SweepMode::Radius => ada.nu *= v,
            }
            let dir = self.out.join(format!("point_{}", i));
            log::info!("sweep point {}: steps {} nu {}", i, ada.steps, ada.nu);
            let t = self.train_into(&dir, &pipeline, &ada)?;
            let r = self.eval_model(&dir, &t.net, &t.checkpoint.theta)?;
            let last = t.logs.last();
            rows.push(SweepRow {
                point: i,
                value: v,
                steps: ada.steps,
                nu: ada.nu,
                mce: r.mce,
                clean_error: r.clean_error,
                final_loss: last.map_or(f64::NAN, |l| l.loss),
                mean_delta_norm: last.map_or(0.0, |l| l.mean_delta_norm),
            });
        }
        let name = match mode {
            SweepMode::Steps => "steps",
            SweepMode::Radius => "radius",
        };
        report::write(self.out, "sweep.csv", &report::sweep_csv(name, &rows))?;
        Ok(())
    }
}
