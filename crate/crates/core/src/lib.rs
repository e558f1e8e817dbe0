//! Adversarial training against common image corruptions through optimized
//! perturbations to the weights of small image-to-image corruption networks.
//!
//! The crate is `no_std` and only needs an allocator. File formats, the CLI
//! and parallel execution live in the companion `ada` crate.

#![no_std]
// `!(x >= 0.0)` style checks reject NaN on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod augment;
pub mod autodiff;
pub mod corruptions;
pub mod data;
pub mod error;
pub mod eval;
pub mod exec;
pub mod nets;
pub mod optim;
pub mod perturb;
pub mod rng;
pub mod ssim;
pub mod tensor;
pub mod trainer;

pub use autodiff::{Graph, Var};
pub use error::{Error, Result};
pub use nets::{Architecture, Net, NetSpec, ParamBlock, ParamSet};
pub use perturb::{AdaConfig, PerturbationSet};
pub use tensor::Tensor;
