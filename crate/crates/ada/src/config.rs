//! Flat INI configuration: `[section]` headers, `key = value` lines, `#` or
//! `;` comments. Every key has a default; unknown sections and keys are
//! errors. [`RunConfig::render`] writes every key back out, so a rendered
//! file reproduces the run on its own.

use std::fmt::Write as _;
use std::str::FromStr;

use ada_core::corruptions::{Kind, ALL_KINDS};
use ada_core::eval::Norm;
use ada_core::nets::Architecture;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("config line {line}: {key}: {message}")]
pub struct ConfigError {
    pub line: usize,
    pub key: String,
    pub message: String,
}

trait Value: Sized {
    fn parse(s: &str) -> Result<Self, String>;
    fn render(&self) -> String;
}

macro_rules! from_str_value {
    ($($t:ty),*) => {$(
        impl Value for $t {
            fn parse(s: &str) -> Result<Self, String> {
                s.parse().map_err(|e| format!("{:?}: {}", s, e))
            }
            fn render(&self) -> String {
                self.to_string()
            }
        }
    )*};
}

from_str_value!(u64, usize, f64, bool, String, Architecture);

/// Inner step size: `auto` applies the median rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSize(pub Option<f64>);

impl Value for StepSize {
    fn parse(s: &str) -> Result<Self, String> {
        if s == "auto" {
            Ok(StepSize(None))
        } else {
            f64::parse(s).map(|v| StepSize(Some(v)))
        }
    }
    fn render(&self) -> String {
        self.0.map_or_else(|| "auto".into(), |v| v.to_string())
    }
}

fn parse_list<T>(s: &str, f: impl Fn(&str) -> Result<T, String>) -> Result<Vec<T>, String> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(',').map(|p| f(p.trim())).collect()
}

impl Value for Vec<f64> {
    fn parse(s: &str) -> Result<Self, String> {
        parse_list(s, f64::parse)
    }
    fn render(&self) -> String {
        self.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
    }
}

impl Value for Vec<Norm> {
    fn parse(s: &str) -> Result<Self, String> {
        parse_list(s, |p| Norm::from_str(p).map_err(|e| e.to_string()))
    }
    fn render(&self) -> String {
        self.iter().map(|v| v.name()).collect::<Vec<_>>().join(",")
    }
}

/// Corruption kinds; `all` is the full suite.
#[derive(Debug, Clone, PartialEq)]
pub struct Kinds(pub Vec<Kind>);

impl Value for Kinds {
    fn parse(s: &str) -> Result<Self, String> {
        if s == "all" {
            return Ok(Kinds(ALL_KINDS.to_vec()));
        }
        let v = parse_list(s, |p| Kind::from_str(p).map_err(|e| e.to_string()))?;
        if v.is_empty() {
            return Err("empty corruption suite".into());
        }
        Ok(Kinds(v))
    }
    fn render(&self) -> String {
        if self.0 == ALL_KINDS {
            "all".into()
        } else {
            self.0.iter().map(|k| k.name()).collect::<Vec<_>>().join(",")
        }
    }
}

impl Value for Kind {
    fn parse(s: &str) -> Result<Self, String> {
        Kind::from_str(s).map_err(|e| e.to_string())
    }
    fn render(&self) -> String {
        self.name().into()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMode {
    /// Inner steps M ∈ {0, 2, 4, 6, 8, 10}.
    Steps,
    /// Radius multipliers {0.5, 0.75, 1, 1.25, 1.5} on ν.
    Radius,
}

impl SweepMode {
    pub fn default_values(self) -> Vec<f64> {
        match self {
            SweepMode::Steps => vec![0.0, 2.0, 4.0, 6.0, 8.0, 10.0],
            SweepMode::Radius => vec![0.5, 0.75, 1.0, 1.25, 1.5],
        }
    }
}

impl Value for SweepMode {
    fn parse(s: &str) -> Result<Self, String> {
        match s {
            "steps" => Ok(SweepMode::Steps),
            "radius" => Ok(SweepMode::Radius),
            _ => Err(format!("{:?}: expected steps or radius", s)),
        }
    }
    fn render(&self) -> String {
        match self {
            SweepMode::Steps => "steps",
            SweepMode::Radius => "radius",
        }
        .into()
    }
}

macro_rules! section {
    ($name:ident, $tag:literal { $($field:ident : $ty:ty = $default:expr),* $(,)? }) => {
        #[derive(Debug, Clone, PartialEq)]
        pub struct $name {
            $(pub $field: $ty),*
        }

        impl Default for $name {
            fn default() -> Self {
                Self { $($field: $default),* }
            }
        }

        impl $name {
            pub const NAME: &'static str = $tag;

            fn set(&mut self, key: &str, value: &str) -> Option<Result<(), String>> {
                match key {
                    $(stringify!($field) => Some(<$ty as Value>::parse(value).map(|v| self.$field = v)),)*
                    _ => None,
                }
            }

            fn entries(&self) -> Vec<(&'static str, String)> {
                vec![$((stringify!($field), Value::render(&self.$field))),*]
            }
        }
    };
}

section!(RunSection, "run" { seed: u64 = 0 });

section!(DataSection, "data" {
    train: String = "data/train".into(),
    test: String = "data/test".into(),
});

section!(GenSection, "gen" {
    classes: usize = 2,
    n: usize = 200,
    extent: usize = 16,
});

section!(ClassifierSection, "classifier" { width: usize = 8 });

section!(CorruptionSection, "corruption" {
    arch: Architecture = Architecture::MiniCae,
    width: usize = 8,
    checkpoint: String = "corruption.adck".into(),
});

section!(PretrainSection, "pretrain" {
    epochs: usize = 10,
    lr: f64 = 0.003,
    mse_weight: f64 = 0.05,
});

section!(TrainSection, "train" {
    epochs: usize = 30,
    batch_size: usize = 32,
    nano_batch: usize = 8,
    lr: f64 = 0.1,
    warmup_epochs: usize = 5,
    momentum: f64 = 0.9,
    weight_decay: f64 = 0.0005,
    reference_batch: usize = 256,
    resume: String = String::new(),
    keep_epochs: bool = false,
});

section!(PipelineSection, "pipeline" {
    deepaugment_mini: bool = false,
    standard_aug: bool = false,
    ada: bool = false,
    augmix_mini: bool = false,
});

section!(AdaSection, "ada" {
    nu: f64 = 0.015,
    steps: usize = 10,
    step_size: StepSize = StepSize(None),
    reference_steps: usize = 10,
    ssim_threshold: f64 = 0.3,
});

section!(SsimSection, "ssim" {
    window: usize = 11,
    sigma: f64 = 1.5,
    k1: f64 = 0.01,
    k2: f64 = 0.03,
    range: f64 = 1.0,
});

section!(EvalSection, "eval" {
    checkpoint: String = "checkpoint.adck".into(),
    kinds: Kinds = Kinds(ALL_KINDS.to_vec()),
    robust: bool = false,
});

section!(AttackSection, "attack" {
    norms: Vec<Norm> = vec![Norm::L2, Norm::Linf],
    eps: Vec<f64> = vec![0.25],
    steps: usize = 100,
    restarts: usize = 10,
    limit: usize = 0,
});

section!(ReconstructSection, "reconstruct" {
    steps: usize = 50,
    lr: f64 = 0.001,
    lambda: f64 = 0.00001,
    kind: Kind = Kind::GaussianBlur,
    severity: usize = 3,
    count: usize = 20,
});

section!(NoiseSection, "noise" {
    etas: Vec<f64> = ada_core::eval::default_eta_grid(),
    samples: usize = 50,
    limit: usize = 0,
});

section!(SsimDistSection, "ssim_dist" { limit: usize = 0 });

section!(SweepSection, "sweep" {
    mode: SweepMode = SweepMode::Steps,
    values: Vec<f64> = Vec::new(),
});

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunConfig {
    pub run: RunSection,
    pub data: DataSection,
    pub gen: GenSection,
    pub classifier: ClassifierSection,
    pub corruption: CorruptionSection,
    pub pretrain: PretrainSection,
    pub train: TrainSection,
    pub pipeline: PipelineSection,
    pub ada: AdaSection,
    pub ssim: SsimSection,
    pub eval: EvalSection,
    pub attack: AttackSection,
    pub reconstruct: ReconstructSection,
    pub noise: NoiseSection,
    pub ssim_dist: SsimDistSection,
    pub sweep: SweepSection,
}

macro_rules! each_section {
    ($cfg:expr, $f:ident) => {
        [
            $f!($cfg.run),
            $f!($cfg.data),
            $f!($cfg.gen),
            $f!($cfg.classifier),
            $f!($cfg.corruption),
            $f!($cfg.pretrain),
            $f!($cfg.train),
            $f!($cfg.pipeline),
            $f!($cfg.ada),
            $f!($cfg.ssim),
            $f!($cfg.eval),
            $f!($cfg.attack),
            $f!($cfg.reconstruct),
            $f!($cfg.noise),
            $f!($cfg.ssim_dist),
            $f!($cfg.sweep),
        ]
    };
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = RunConfig::default();
        let mut section: Option<String> = None;
        let mut seen = std::collections::BTreeSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let err = |key: &str, message: String| ConfigError {
                line,
                key: key.to_string(),
                message,
            };
            let l = raw.trim();
            if l.is_empty() || l.starts_with('#') || l.starts_with(';') {
                continue;
            }
            if let Some(rest) = l.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| err(l, "unterminated section header".into()))?
                    .trim();
                if !cfg.section_names().contains(&name) {
                    return Err(err(name, "unknown section".into()));
                }
                section = Some(name.to_string());
                continue;
            }
            let (key, value) = l
                .split_once('=')
                .ok_or_else(|| err(l, "expected key = value".into()))?;
            let (key, value) = (key.trim(), value.trim());
            let sec = section
                .as_deref()
                .ok_or_else(|| err(key, "key outside any section".into()))?;
            let full = format!("{}.{}", sec, key);
            if !seen.insert(full.clone()) {
                return Err(err(&full, "duplicate key".into()));
            }
            match cfg.set(sec, key, value) {
                None => return Err(err(&full, "unknown key".into())),
                Some(Err(m)) => return Err(err(&full, m)),
                Some(Ok(())) => {}
            }
        }
        Ok(cfg)
    }

    fn section_names(&self) -> Vec<&'static str> {
        vec![
            RunSection::NAME,
            DataSection::NAME,
            GenSection::NAME,
            ClassifierSection::NAME,
            CorruptionSection::NAME,
            PretrainSection::NAME,
            TrainSection::NAME,
            PipelineSection::NAME,
            AdaSection::NAME,
            SsimSection::NAME,
            EvalSection::NAME,
            AttackSection::NAME,
            ReconstructSection::NAME,
            NoiseSection::NAME,
            SsimDistSection::NAME,
            SweepSection::NAME,
        ]
    }

    fn set(&mut self, section: &str, key: &str, value: &str) -> Option<Result<(), String>> {
        match section {
            RunSection::NAME => self.run.set(key, value),
            DataSection::NAME => self.data.set(key, value),
            GenSection::NAME => self.gen.set(key, value),
            ClassifierSection::NAME => self.classifier.set(key, value),
            CorruptionSection::NAME => self.corruption.set(key, value),
            PretrainSection::NAME => self.pretrain.set(key, value),
            TrainSection::NAME => self.train.set(key, value),
            PipelineSection::NAME => self.pipeline.set(key, value),
            AdaSection::NAME => self.ada.set(key, value),
            SsimSection::NAME => self.ssim.set(key, value),
            EvalSection::NAME => self.eval.set(key, value),
            AttackSection::NAME => self.attack.set(key, value),
            ReconstructSection::NAME => self.reconstruct.set(key, value),
            NoiseSection::NAME => self.noise.set(key, value),
            SsimDistSection::NAME => self.ssim_dist.set(key, value),
            SweepSection::NAME => self.sweep.set(key, value),
            _ => None,
        }
    }

    /// Every section and key, defaults included.
    pub fn render(&self) -> String {
        macro_rules! pair {
            ($s:expr) => {
                (section_name(&$s), $s.entries())
            };
        }
        let mut out = String::new();
        for (name, entries) in each_section!(self, pair) {
            if !out.is_empty() {
                out.push('\n');
            }
            let _ = writeln!(out, "[{}]", name);
            for (k, v) in entries {
                let _ = writeln!(out, "{} = {}", k, v);
            }
        }
        out
    }
}

trait Named {
    const TAG: &'static str;
}

macro_rules! named {
    ($($t:ty),*) => {$(impl Named for $t { const TAG: &'static str = <$t>::NAME; })*};
}

named!(
    RunSection,
    DataSection,
    GenSection,
    ClassifierSection,
    CorruptionSection,
    PretrainSection,
    TrainSection,
    PipelineSection,
    AdaSection,
    SsimSection,
    EvalSection,
    AttackSection,
    ReconstructSection,
    NoiseSection,
    SsimDistSection,
    SweepSection
);

fn section_name<T: Named>(_: &T) -> &'static str {
    T::TAG
}
