use std::path::PathBuf;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    // -- validation --
    #[error("embedding dimension mismatch: feature map has {features} channels, text bank has {text}")]
    ChannelMismatch { features: usize, text: usize },

    #[error("arity mismatch: {tokens} tokens but {bins} depth bins")]
    ArityMismatch { tokens: usize, bins: usize },

    #[error("zero-norm {what} embedding at index {index}")]
    ZeroNormVector { what: &'static str, index: usize },

    #[error("invalid feature map: {0}")]
    InvalidFeatureMap(String),

    #[error("invalid text bank: {0}")]
    InvalidTextBank(String),

    #[error("invalid bin partition: {0}")]
    InvalidBins(String),

    #[error("invalid depth map: {0}")]
    InvalidDepthMap(String),

    #[error("temperature must be finite and > 0, got {0}")]
    InvalidTemperature(f64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("shape error: {0}")]
    ShapeError(String),

    #[error("patch ({row}, {col}) out of range for a {height}x{width} grid")]
    IndexOutOfRange {
        row: usize,
        col: usize,
        height: usize,
        width: usize,
    },

    // -- evaluation --
    #[error("shape mismatch: prediction {pred:?} vs ground truth {gt:?}")]
    ShapeMismatch {
        pred: (usize, usize),
        gt: (usize, usize),
    },

    #[error("no valid ground-truth pixels inside the evaluation mask")]
    EmptyMask,

    #[error("prediction {value} at pixel {index} is not a positive finite depth")]
    NonPositivePrediction { index: usize, value: f64 },

    #[error("image {index}: {source}")]
    Image {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("no manifest records match scene class {0:?}")]
    EmptyClassFilter(String),

    #[error("no text bank supplied for prompt design {0:?}")]
    MissingTextBank(String),

    #[error("record {0:?} has no ground truth")]
    MissingGroundTruth(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    // -- input format --
    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },

    #[error("unsupported container version {0}")]
    UnsupportedVersion(u8),

    #[error("unsupported container rank {0}")]
    UnsupportedRank(u8),

    #[error("truncated payload: needed {needed} bytes, {available} available")]
    TruncatedPayload { needed: usize, available: usize },

    #[error("{0} unexpected trailing bytes")]
    TrailingBytes(usize),

    #[error("metadata mismatch: {0}")]
    MetadataMismatch(String),

    #[error("malformed metadata: {0}")]
    BadMetadata(#[from] serde_json::Error),

    #[error("manifest {path}:{line}: {message}")]
    Manifest {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn at_image(self, index: usize) -> Self {
        Error::Image {
            index,
            source: Box::new(self),
        }
    }

    /// Process exit code for the CLI: 2 input format, 3 validation, 4 evaluation.
    pub fn exit_code(&self) -> i32 {
        use Error::*;
        match self {
            BadMagic { .. }
            | UnsupportedVersion(_)
            | UnsupportedRank(_)
            | TruncatedPayload { .. }
            | TrailingBytes(_)
            | MetadataMismatch(_)
            | BadMetadata(_)
            | Manifest { .. }
            | Io { .. } => 2,
            ChannelMismatch { .. }
            | ArityMismatch { .. }
            | ZeroNormVector { .. }
            | InvalidFeatureMap(_)
            | InvalidTextBank(_)
            | InvalidBins(_)
            | InvalidDepthMap(_)
            | InvalidTemperature(_)
            | InvalidConfig(_)
            | ShapeError(_)
            | IndexOutOfRange { .. } => 3,
            ShapeMismatch { .. }
            | EmptyMask
            | NonPositivePrediction { .. }
            | EmptyClassFilter(_)
            | MissingTextBank(_)
            | MissingGroundTruth(_)
            | Empty(_) => 4,
            Image { source, .. } => source.exit_code(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
