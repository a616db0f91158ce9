use std::path::PathBuf;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by grid construction, pipeline operations, and I/O.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid grid dimensions {height}x{width} (data length {len})")]
    InvalidDimensions {
        height: usize,
        width: usize,
        len: usize,
    },

    #[error("shape mismatch: {left_height}x{left_width} vs {right_height}x{right_width}")]
    ShapeMismatch {
        left_height: usize,
        left_width: usize,
        right_height: usize,
        right_width: usize,
    },

    #[error("label {value} at ({row}, {col}) is out of range for {num_classes} classes")]
    LabelOutOfRange {
        value: u16,
        row: usize,
        col: usize,
        num_classes: u16,
    },

    #[error("ignore id {ignore_id} must not be a valid class id (num_classes {num_classes})")]
    IgnoreIdInClassRange { ignore_id: u16, num_classes: u16 },

    #[error("class count mismatch: {left} vs {right}")]
    ClassCountMismatch { left: u16, right: u16 },

    #[error("no distance map provided for class {0}")]
    MissingClassMap(u16),

    #[error("boundary threshold gamma must be positive, got {0}")]
    InvalidGamma(f32),

    #[error("unsupported direction count {0}: expected 4, 8, or 16")]
    UnsupportedDirectionCount(u8),

    #[error("direction category {category} is out of range for m={m}")]
    CategoryOutOfRange { category: u8, m: u8 },

    #[error("direction count mismatch: {left} vs {right}")]
    DirectionCountMismatch { left: u8, right: u8 },

    #[error("offset scale must be at least 1")]
    InvalidScale,

    #[error("instance set is empty")]
    EmptyInstanceSet,

    #[error("bin edges must be strictly increasing")]
    UnsortedBinEdges,

    #[error("boundary width must be positive, got {0}")]
    InvalidWidth(f32),

    #[error("boundary F-score threshold must be positive, got {0}")]
    InvalidThreshold(f64),

    #[error("synthetic shape of extent {extent} cannot fit in a {height}x{width} image")]
    ShapeDoesNotFit {
        extent: u32,
        height: usize,
        width: usize,
    },

    #[error("invalid synthesis config: {0}")]
    InvalidSynthConfig(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {reason}")]
    PngFormat { path: PathBuf, reason: String },

    #[error("{path}: {reason}")]
    NpyFormat { path: PathBuf, reason: String },

    #[error("manifest {path} is invalid:\n{}", violations.join("\n"))]
    ManifestInvalid {
        path: PathBuf,
        violations: Vec<String>,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
