//! Unsupervised video instance segmentation toolkit.
//!
//! - [`spectral`] and [`maskcut`]: multi-object mask discovery from patch
//!   features by iterated Normalized Cuts.
//! - [`crf`]: dense-CRF mean-field refinement of pixel masks.
//! - [`synthesis`]: turn an image pair plus masks into a short video with
//!   ground-truth trajectories by copy-paste.
//! - [`metrics`]: class-agnostic video AP/AR and DAVIS J/F scoring.
//! - [`io`]: NPY features, RLE masks, JSON manifests and PNG images.
//! - [`planted`]: synthetic feature grids with known objects.

pub mod crf;
pub mod error;
pub mod io;
pub mod mask;
pub mod maskcut;
pub mod metrics;
pub mod planted;
pub mod spectral;
pub mod synthesis;
pub mod video;

pub use error::{Error, Result};
pub use mask::BinaryMask;
pub use video::{MaskSet, Trajectory, VideoRecord};
