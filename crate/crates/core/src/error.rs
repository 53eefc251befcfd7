use thiserror::Error;

use crate::model::BlockLabel;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Missing field or wrong type in an input file; `path` is the JSON path.
    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },

    #[error("geometry error in block {block_id} on page {page_index}: {message}")]
    Geometry {
        page_index: u32,
        block_id: u32,
        message: String,
    },

    #[error("document `{0}` has no text block with font spans")]
    EmptyDocument(String),

    #[error("degenerate {side} boundary {value} on page {page_index}")]
    DegenerateBoundary {
        page_index: u32,
        side: &'static str,
        value: f64,
    },

    #[error("detection error: {0}")]
    Detect(String),

    #[error("caption block {block_id} is not on page {page_index}")]
    CaptionNotOnPage { block_id: u32, page_index: u32 },

    #[error("training data contains a single class ({0})")]
    SingleClass(String),

    #[error("non-finite feature in row {row}")]
    NonFiniteFeature { row: usize },

    #[error("feature dimension mismatch: model expects {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("class {label} has too few rows ({size}) for a split at ratio {ratio}")]
    ClassTooSmall {
        label: BlockLabel,
        size: usize,
        ratio: f64,
    },

    #[error("prediction and gold key sets differ: {0}")]
    KeyMismatch(String),

    #[error("duplicate row (doc `{doc_id}`, block {block_id})")]
    DuplicateRow { doc_id: String, block_id: u32 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("block {block_id}: {source}")]
    InBlock {
        block_id: u32,
        #[source]
        source: Box<Error>,
    },

    #[error("run {run}: {source}")]
    InRun {
        run: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable machine-readable name of the error kind.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Schema { .. } => "SchemaError",
            Error::Geometry { .. } => "GeometryError",
            Error::EmptyDocument(_) => "EmptyDocumentError",
            Error::DegenerateBoundary { .. } => "DegenerateBoundaryError",
            Error::Detect(_) => "DetectError",
            Error::CaptionNotOnPage { .. } => "CaptionNotOnPageError",
            Error::SingleClass(_) => "SingleClassError",
            Error::NonFiniteFeature { .. } => "NonFiniteFeatureError",
            Error::DimensionMismatch { .. } => "DimensionMismatchError",
            Error::ClassTooSmall { .. } => "ClassTooSmallError",
            Error::KeyMismatch(_) => "KeyMismatchError",
            Error::DuplicateRow { .. } => "DuplicateRowError",
            Error::InvalidParameter(_) => "InvalidParameterError",
            Error::Config(_) => "ConfigError",
            Error::InBlock { source, .. } | Error::InRun { source, .. } => source.kind(),
            Error::Io(_) => "IoError",
        }
    }

    pub fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Innermost error, skipping block/run context wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::InBlock { source, .. } | Error::InRun { source, .. } => source.root(),
            other => other,
        }
    }
}
