//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// File shorter than the 8-byte header-length prefix, or the declared
    /// header does not fit in the file.
    #[error("malformed header length: {0}")]
    MalformedHeaderLength(String),

    /// Header is not valid UTF-8 JSON of the expected shape.
    #[error("invalid header JSON: {0}")]
    InvalidHeaderJson(String),

    /// A tensor declares a dtype other than F32.
    #[error("tensor {tensor:?} has unsupported dtype {dtype:?} (only F32 is accepted)")]
    UnsupportedDtype { tensor: String, dtype: String },

    /// Tensor offsets out of range, reversed, or inconsistent with the shape.
    #[error("tensor {tensor:?} has invalid offsets: {reason}")]
    InvalidOffsets { tensor: String, reason: String },

    /// Two tensors claim overlapping byte ranges in the data section.
    #[error("tensors {first:?} and {second:?} overlap in the data section")]
    OverlappingTensors { first: String, second: String },

    /// Tensor ranges do not tile the data section exactly (gaps or trailing
    /// bytes beyond the declared extents).
    #[error("data section is {actual} bytes but tensors declare {declared}")]
    DataSizeMismatch { declared: usize, actual: usize },

    #[error("unknown tensor {0:?}")]
    UnknownTensor(String),

    #[error("index {index} out of range for tensor {tensor:?} with {len} elements")]
    IndexOutOfRange {
        tensor: String,
        index: usize,
        len: usize,
    },

    /// A per-parameter payload chunk does not match the method's width.
    #[error("payload chunk of {got} bytes, method requires {expected}")]
    ChunkLengthMismatch { expected: usize, got: usize },

    /// The payload does not fit in the selected tensors.
    #[error("payload of {required} bytes exceeds capacity of {available} bytes")]
    CapacityExceeded { available: usize, required: usize },

    /// A plan or manifest is inconsistent with the container it is applied to.
    #[error("invalid plan: {0}")]
    InvalidPlan(String),

    #[error("payload must be at least one byte")]
    EmptyPayload,

    #[error("entropy of empty input is undefined")]
    EmptyInput,

    /// All entropies equal; the normalization denominator is zero.
    #[error("entropy normalization undefined: max equals min")]
    DegenerateNormalization,

    #[error("expected a vector of length {expected}, got {got}")]
    VectorLengthMismatch { expected: usize, got: usize },

    #[error("invalid trigger target {0:?}: want an even-length hex string")]
    InvalidTargetHex(String),

    #[error("invalid network architecture: {0}")]
    InvalidArchitecture(String),

    /// Training loss became non-finite.
    #[error("training diverged: loss is not finite at epoch {epoch}")]
    Divergence { epoch: usize },

    #[error("line {line}: {msg}")]
    CsvParse { line: usize, msg: String },

    #[error("{0}")]
    InvalidArgument(String),
}
