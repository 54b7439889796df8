//! Instance containers shared by discovery, synthesis and evaluation.

use crate::error::{Error, Result};
use crate::mask::BinaryMask;

/// Up to `t` instance masks discovered in one image, with a confidence per mask.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MaskSet {
    pub masks: Vec<BinaryMask>,
    pub scores: Vec<f64>,
}

impl MaskSet {
    pub fn new(masks: Vec<BinaryMask>, scores: Vec<f64>) -> Result<Self> {
        if masks.len() != scores.len() {
            return Err(Error::Schema(format!(
                "{} masks but {} scores",
                masks.len(),
                scores.len()
            )));
        }
        if let Some(first) = masks.first() {
            if let Some(bad) = masks.iter().find(|m| !m.same_dims(first)) {
                return Err(Error::DimensionMismatch(format!(
                    "mask set mixes {:?} and {:?}",
                    first.dims(),
                    bad.dims()
                )));
            }
        }
        if let Some(s) = scores.iter().find(|s| !(0.0..=1.0).contains(*s)) {
            return Err(Error::Schema(format!("score {s} outside [0, 1]")));
        }
        Ok(Self { masks, scores })
    }

    pub fn len(&self) -> usize {
        self.masks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masks.is_empty()
    }

    pub fn dims(&self) -> Option<(usize, usize)> {
        self.masks.first().map(BinaryMask::dims)
    }
}

/// One instance through a video. `None` frames mean the instance is not visible.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub instance_id: u64,
    pub frames: Vec<Option<BinaryMask>>,
    pub score: f64,
}

impl Trajectory {
    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    /// Mean per-frame area over frames where the instance is present.
    pub fn mean_area(&self) -> f64 {
        let (sum, n) = self
            .frames
            .iter()
            .flatten()
            .filter(|m| !m.is_empty())
            .fold((0usize, 0usize), |(s, n), m| (s + m.area(), n + 1));
        if n == 0 {
            0.0
        } else {
            sum as f64 / n as f64
        }
    }

    pub fn is_visible(&self) -> bool {
        self.frames.iter().flatten().any(|m| !m.is_empty())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VideoRecord {
    pub video_id: String,
    pub frame_count: usize,
    pub height: usize,
    pub width: usize,
    /// Frame image paths; may be empty for prediction-only records.
    pub frame_paths: Vec<String>,
    pub trajectories: Vec<Trajectory>,
}

impl VideoRecord {
    pub fn validate(&self) -> Result<()> {
        if !self.frame_paths.is_empty() && self.frame_paths.len() != self.frame_count {
            return Err(Error::Schema(format!(
                "video {}: {} frame paths for frame_count {}",
                self.video_id,
                self.frame_paths.len(),
                self.frame_count
            )));
        }
        for t in &self.trajectories {
            if t.frames.len() != self.frame_count {
                return Err(Error::Schema(format!(
                    "video {}: trajectory {} has {} frame slots, expected {}",
                    self.video_id,
                    t.instance_id,
                    t.frames.len(),
                    self.frame_count
                )));
            }
            for m in t.frames.iter().flatten() {
                if m.dims() != (self.height, self.width) {
                    return Err(Error::DimensionMismatch(format!(
                        "video {}: trajectory {} mask is {:?}, video is {}x{}",
                        self.video_id,
                        t.instance_id,
                        m.dims(),
                        self.height,
                        self.width
                    )));
                }
            }
            if !(0.0..=1.0).contains(&t.score) {
                return Err(Error::Schema(format!(
                    "video {}: trajectory {} score {} outside [0, 1]",
                    self.video_id, t.instance_id, t.score
                )));
            }
        }
        Ok(())
    }
}
