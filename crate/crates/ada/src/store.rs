//! On-disk layouts built from the ADAT/ADCK containers.
//!
//! A dataset directory holds `images.adat` (`[N, C, H, W]`) and `labels.adat`
//! (`[N]`, integer-valued). A checkpoint is an ADCK file with the records
//! `meta/spec` (`[arch code, channels, width, extent, classes]`),
//! `meta/epoch`, `meta/seed` and one record per parameter block, prefixed
//! `theta/` and `velocity/` for a classifier, `phi/` for a corruption net.

use std::fs;
use std::path::Path;

use ada_core::corruptions::{corrupt, CorruptionSpec, Kind, SEVERITIES};
use ada_core::data::Dataset;
use ada_core::optim::SgdState;
use ada_core::trainer::Checkpoint;
use ada_core::{Architecture, NetSpec, ParamSet, Tensor};

use crate::formats::{self, tensor_u64, u64_tensor, FormatError};

pub const IMAGES_FILE: &str = "images.adat";
pub const LABELS_FILE: &str = "labels.adat";

fn invalid(msg: impl Into<String>) -> FormatError {
    FormatError::Invalid(msg.into())
}

fn core_err(e: ada_core::Error) -> FormatError {
    FormatError::Invalid(e.to_string())
}

pub fn labels_tensor(labels: &[usize]) -> Tensor {
    Tensor::new(vec![labels.len()], labels.iter().map(|&l| l as f32).collect()).expect("rank 1")
}

pub fn save_dataset(dir: &Path, data: &Dataset) -> Result<(), FormatError> {
    fs::create_dir_all(dir)?;
    formats::save_tensor(&dir.join(IMAGES_FILE), &Tensor::stack(&data.images).map_err(core_err)?)?;
    formats::save_tensor(&dir.join(LABELS_FILE), &labels_tensor(&data.labels))?;
    Ok(())
}

/// Reads a dataset directory. `classes` defaults to one past the largest label.
pub fn load_dataset(dir: &Path, classes: Option<usize>) -> Result<Dataset, FormatError> {
    let images = formats::load_tensor(&dir.join(IMAGES_FILE))?;
    let labels = formats::load_tensor(&dir.join(LABELS_FILE))?;
    if images.rank() != 4 {
        return Err(invalid(format!("images must be [N, C, H, W], got {:?}", images.shape())));
    }
    let n = images.shape()[0];
    if labels.shape() != [n] {
        return Err(invalid(format!("labels shape {:?} does not match {} images", labels.shape(), n)));
    }
    let labels: Vec<usize> = labels
        .data()
        .iter()
        .map(|&v| {
            if v >= 0.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(invalid(format!("label {} is not a class index", v)))
            }
        })
        .collect::<Result<_, _>>()?;
    let images = (0..n)
        .map(|i| images.index_axis0(i))
        .collect::<Result<Vec<_>, _>>()
        .map_err(core_err)?;
    let classes = classes.unwrap_or_else(|| labels.iter().max().map_or(0, |m| m + 1));
    Dataset::new(images, labels, classes).map_err(core_err)
}

/// Writes `kind_severity.adat` for every kind and severity plus `labels.adat`.
/// Example `i` draws its corruption randomness from `derive_seed(seed, "export-example", i)`.
pub fn export_corrupted(dir: &Path, data: &Dataset, kinds: &[Kind], seed: u64) -> Result<Vec<String>, FormatError> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for &kind in kinds {
        for severity in 1..=SEVERITIES {
            let images = data
                .images
                .iter()
                .enumerate()
                .map(|(i, x)| {
                    let spec = CorruptionSpec {
                        kind,
                        severity,
                        seed: ada_core::rng::derive_seed(seed, "export-example", i as u64),
                    };
                    corrupt(x, &spec)
                })
                .collect::<Result<Vec<_>, _>>()
                .map_err(core_err)?;
            let name = format!("{}_{}.adat", kind.name(), severity);
            formats::save_tensor(&dir.join(&name), &Tensor::stack(&images).map_err(core_err)?)?;
            written.push(name);
        }
    }
    formats::save_tensor(&dir.join(LABELS_FILE), &labels_tensor(&data.labels))?;
    written.push(LABELS_FILE.into());
    Ok(written)
}

fn spec_tensor(spec: &NetSpec) -> Tensor {
    let v = [
        spec.arch.code() as f32,
        spec.channels as f32,
        spec.width as f32,
        spec.extent as f32,
        spec.classes as f32,
    ];
    Tensor::from_slice(&[5], &v).expect("rank 1")
}

fn tensor_spec(t: &Tensor) -> Result<NetSpec, FormatError> {
    let d = t.data();
    if t.shape() != [5] || d.iter().any(|v| *v < 0.0 || v.fract() != 0.0) {
        return Err(invalid("malformed meta/spec record"));
    }
    let spec = NetSpec {
        arch: Architecture::from_code(d[0] as u32).map_err(core_err)?,
        channels: d[1] as usize,
        width: d[2] as usize,
        extent: d[3] as usize,
        classes: d[4] as usize,
    };
    spec.validate().map_err(core_err)?;
    Ok(spec)
}

struct Records(Vec<(String, Tensor)>);

impl Records {
    fn take(&mut self, name: &str) -> Result<Tensor, FormatError> {
        let i = self
            .0
            .iter()
            .position(|(n, _)| n == name)
            .ok_or_else(|| invalid(format!("missing record {}", name)))?;
        Ok(self.0.remove(i).1)
    }

    fn take_prefix(&mut self, prefix: &str) -> Vec<(String, Tensor)> {
        let (hit, rest): (Vec<_>, Vec<_>) = std::mem::take(&mut self.0).into_iter().partition(|(n, _)| n.starts_with(prefix));
        self.0 = rest;
        hit.into_iter().map(|(n, t)| (n[prefix.len()..].to_string(), t)).collect()
    }

    fn finish(self) -> Result<(), FormatError> {
        match self.0.first() {
            None => Ok(()),
            Some((n, _)) => Err(invalid(format!("unexpected record {}", n))),
        }
    }
}

fn prefixed<'a>(prefix: &str, params: &'a ParamSet) -> impl Iterator<Item = (String, Tensor)> + 'a {
    let prefix = prefix.to_string();
    params.blocks().iter().map(move |b| (format!("{}{}", prefix, b.name), b.tensor.clone()))
}

/// Classifier training state.
pub fn save_classifier(path: &Path, spec: &NetSpec, ck: &Checkpoint) -> Result<(), FormatError> {
    let mut records = vec![
        ("meta/spec".to_string(), spec_tensor(spec)),
        ("meta/epoch".to_string(), u64_tensor(ck.epoch as u64)),
        ("meta/seed".to_string(), u64_tensor(ck.seed)),
    ];
    records.extend(prefixed("theta/", &ck.theta));
    for (b, v) in ck.theta.blocks().iter().zip(&ck.velocity.velocity) {
        records.push((format!("velocity/{}", b.name), v.clone()));
    }
    Ok(formats::save_records(path, &records)?)
}

pub fn load_classifier(path: &Path) -> Result<(NetSpec, Checkpoint), FormatError> {
    let mut r = Records(formats::load_records(path)?);
    let spec = tensor_spec(&r.take("meta/spec")?)?;
    if spec.arch.is_corruption_net() {
        return Err(invalid(format!("{} holds a {} net, not a classifier", path.display(), spec.arch)));
    }
    let epoch = tensor_u64(&r.take("meta/epoch")?)? as usize;
    let seed = tensor_u64(&r.take("meta/seed")?)?;
    let theta = ParamSet::new(r.take_prefix("theta/"));
    let velocity = r.take_prefix("velocity/");
    r.finish()?;
    let names: Vec<&str> = theta.names().collect();
    if velocity.len() != names.len() || velocity.iter().zip(&names).any(|((n, _), m)| n != m) {
        return Err(invalid("velocity records do not match theta records"));
    }
    let velocity = SgdState {
        velocity: velocity.into_iter().map(|(_, t)| t).collect(),
    };
    let net = ada_core::Net::new(spec).map_err(core_err)?;
    net.check_params(&theta).map_err(core_err)?;
    Ok((
        spec,
        Checkpoint {
            theta,
            velocity,
            epoch,
            seed,
        },
    ))
}

/// Corruption-net parameters φ.
pub fn save_corruption(path: &Path, spec: &NetSpec, phi: &ParamSet) -> Result<(), FormatError> {
    let mut records = vec![("meta/spec".to_string(), spec_tensor(spec))];
    records.extend(prefixed("phi/", phi));
    Ok(formats::save_records(path, &records)?)
}

pub fn load_corruption(path: &Path) -> Result<(NetSpec, ParamSet), FormatError> {
    let mut r = Records(formats::load_records(path)?);
    let spec = tensor_spec(&r.take("meta/spec")?)?;
    if !spec.arch.is_corruption_net() {
        return Err(invalid(format!("{} holds a classifier, not a corruption net", path.display())));
    }
    let phi = ParamSet::new(r.take_prefix("phi/"));
    r.finish()?;
    ada_core::Net::new(spec).map_err(core_err)?.check_params(&phi).map_err(core_err)?;
    Ok((spec, phi))
}
