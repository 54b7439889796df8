use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("failed to write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("missing sidecar {0}")]
    MissingSidecar(PathBuf),

    #[error("malformed npy header: {0}")]
    MalformedHeader(String),

    #[error("expected a rank-3 tensor, got shape {0:?}")]
    BadRank(Vec<u64>),

    #[error("non-finite feature at patch {patch}, component {component}")]
    NonFiniteFeature { patch: usize, component: usize },

    #[error("zero-norm feature vector at patch {0}")]
    ZeroNormFeature(usize),

    #[error("invalid feature map: {0}")]
    InvalidFeatureMap(String),

    #[error("rle counts sum to {got}, expected {expected}")]
    RleCountMismatch { got: u64, expected: u64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("schema violation: {0}")]
    Schema(String),

    #[error("invalid json in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("image error for {path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("graph needs at least 2 nodes, got {0}")]
    TooFewNodes(usize),

    #[error("eigensolver did not converge: residual {residual:e} exceeds tolerance {tol:e}")]
    NoConvergence { residual: f64, tol: f64 },

    #[error("degenerate partition")]
    DegeneratePartition,

    #[error("partition side is empty")]
    EmptySide,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("transformed mask is empty")]
    EmptyTransformedMask,

    #[error("no usable trajectories")]
    NoTrajectories,

    #[error("frame count mismatch: {0} vs {1}")]
    FrameCountMismatch(usize, usize),

    #[error("duplicate video id {0}")]
    DuplicateVideo(String),

    #[error("no ground truth for video {0}")]
    MissingGroundTruth(String),
}

pub type Result<T> = std::result::Result<T, Error>;
