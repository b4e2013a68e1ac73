use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch { what: String, expected: String, found: String },

    #[error("non-finite value {value} in {field} at {location}")]
    NonFiniteValue { field: &'static str, location: String, value: f32 },

    #[error("{field}: value {value} at {location} is outside 1..={max}")]
    LabelOutOfRange { field: &'static str, location: String, value: u32, max: u32 },

    #[error("invalid {what}: {reason}")]
    InvalidConfig { what: &'static str, reason: String },

    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: String, found: String },

    #[error("malformed header: {0}")]
    BadHeader(String),

    #[error("header declares {requested} payload bytes, above the {cap}-byte cap")]
    HeaderTooLarge { requested: u64, cap: u64 },

    #[error("truncated payload: expected {expected} bytes, found {actual}")]
    TruncatedPayload { expected: u64, actual: u64 },

    #[error("trailing data: expected {expected} payload bytes, found {actual}")]
    TrailingData { expected: u64, actual: u64 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("band index {index} out of range for a cube with {bands} bands")]
    BandOutOfRange { index: usize, bands: usize },

    #[error("palette has {available} colours but the map needs {needed}")]
    PaletteTooSmall { needed: usize, available: usize },

    #[error("class {class} has no labeled pixels")]
    EmptyClass { class: u16 },

    #[error("training fraction {fraction} cannot give {min_per_class} pixel(s) to every class ({needed} needed, {available} available)")]
    FractionTooSmall { fraction: f64, min_per_class: usize, needed: usize, available: usize },

    #[error("non-finite training loss at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },

    #[error("requested {requested} superpixels but the image has only {pixels} pixels")]
    TooManySuperpixels { requested: usize, pixels: usize },

    #[error("segment {segment} is empty")]
    EmptySegment { segment: usize },

    #[error("mask selects no pixels")]
    EmptyMask,

    #[error("encoding failed: {0}")]
    Encode(String),

    #[error("run (fraction {fraction}, seed {seed}): {source}")]
    Run {
        fraction: f64,
        seed: u64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn dims(what: impl Into<String>, expected: (usize, usize), found: (usize, usize)) -> Self {
        Error::DimensionMismatch {
            what: what.into(),
            expected: format!("{}x{}", expected.0, expected.1),
            found: format!("{}x{}", found.0, found.1),
        }
    }

    /// Short machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::NonFiniteValue { .. } => "NonFiniteValue",
            Error::LabelOutOfRange { .. } => "LabelOutOfRange",
            Error::InvalidConfig { .. } => "InvalidConfig",
            Error::BadMagic { .. } => "BadMagic",
            Error::BadHeader(_) => "BadHeader",
            Error::HeaderTooLarge { .. } => "HeaderTooLarge",
            Error::TruncatedPayload { .. } => "TruncatedPayload",
            Error::TrailingData { .. } => "TrailingData",
            Error::Io { .. } => "IoFailure",
            Error::BandOutOfRange { .. } => "BandOutOfRange",
            Error::PaletteTooSmall { .. } => "PaletteTooSmall",
            Error::EmptyClass { .. } => "EmptyClass",
            Error::FractionTooSmall { .. } => "FractionTooSmall",
            Error::NonFiniteLoss { .. } => "NonFiniteLoss",
            Error::TooManySuperpixels { .. } => "TooManySuperpixels",
            Error::EmptySegment { .. } => "EmptySegment",
            Error::EmptyMask => "EmptyMask",
            Error::Encode(_) => "EncodeFailure",
            Error::Run { source, .. } => source.kind(),
        }
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::NonFiniteLoss { .. } => true,
            Error::Run { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}
