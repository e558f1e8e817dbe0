use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("{op}: shape mismatch ({detail})")]
    Shape { op: &'static str, detail: String },

    #[error("backward requires a scalar loss, got shape {0:?}")]
    NonScalarLoss(Vec<usize>),

    #[error("graph already consumed by a backward pass; reset before reuse")]
    GraphConsumed,

    #[error("unknown architecture `{0}`")]
    UnknownArchitecture(String),

    #[error("unknown corruption kind `{0}`")]
    UnknownCorruption(String),

    #[error("parameter blocks misaligned: {0:?}")]
    Misaligned(Vec<String>),

    #[error("parameter block `{0}` has zero norm")]
    ZeroNormBlock(String),

    #[error("inner step size undefined for zero inner steps")]
    ZeroInnerSteps,

    #[error("image extent {extent} smaller than SSIM window {window}")]
    ImageTooSmall { extent: usize, window: usize },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("AdA stage requested without corruption/classifier context")]
    MissingContext,

    #[error("non-finite loss at epoch {epoch}, step {step} (loss {loss}, batch {batch:?})")]
    NonFiniteLoss {
        epoch: usize,
        step: usize,
        loss: f32,
        batch: Vec<usize>,
    },

    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
}

pub(crate) fn shape_err(op: &'static str, detail: String) -> Error {
    Error::Shape { op, detail }
}
