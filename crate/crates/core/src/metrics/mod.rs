//! Class-agnostic video instance segmentation metrics.
//!
//! - [`st_iou`]: spatio-temporal IoU, intersections and unions summed over frames.
//! - [`evaluate_ap`]: AP/AR over IoU thresholds with greedy score-ordered
//!   matching and 101-point interpolated precision, plus size buckets.
//! - [`evaluate_davis`]: region (J) and boundary (F) measures with optimal
//!   one-to-one assignment.

mod ap;
mod davis;
mod hungarian;

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mask::BinaryMask;
use crate::video::{Trajectory, VideoRecord};

pub use ap::{evaluate_ap, AreaRange, AR_KS};
pub use davis::{boundary_f, boundary_pixels, boundary_radius, evaluate_davis, region_j};
pub use hungarian::hungarian_max;

/// IoU thresholds 0.50, 0.55, ..., 0.95.
pub fn default_thresholds() -> Vec<f64> {
    (0..10).map(|i| (50 + 5 * i) as f64 / 100.0).collect()
}

fn frame_counts(a: &Trajectory, b: &Trajectory) -> Result<()> {
    if a.frames.len() != b.frames.len() {
        return Err(Error::FrameCountMismatch(a.frames.len(), b.frames.len()));
    }
    Ok(())
}

/// Intersection and union areas of two optional masks (absent = empty).
pub(crate) fn inter_union(a: Option<&BinaryMask>, b: Option<&BinaryMask>) -> Result<(usize, usize)> {
    match (a, b) {
        (Some(a), Some(b)) => Ok((a.intersection_area(b)?, a.union_area(b)?)),
        (Some(m), None) | (None, Some(m)) => Ok((0, m.area())),
        (None, None) => Ok((0, 0)),
    }
}

/// `sum_f |a_f & b_f| / sum_f |a_f | b_f|`, or 0 if both are empty throughout.
pub fn st_iou(a: &Trajectory, b: &Trajectory) -> Result<f64> {
    frame_counts(a, b)?;
    let (mut inter, mut union) = (0usize, 0usize);
    for (fa, fb) in a.frames.iter().zip(&b.frames) {
        let (i, u) = inter_union(fa.as_ref(), fb.as_ref())?;
        inter += i;
        union += u;
    }
    Ok(if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdAp {
    pub iou: f64,
    pub ap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecallAtK {
    pub k: usize,
    pub ar: Option<f64>,
}

/// Evaluation summary. Absent values (`None`, `null` in JSON) mean there was
/// no ground truth to score against or the protocol does not produce them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub protocol: String,
    pub videos: usize,
    pub gt_instances: usize,
    pub pred_instances: usize,
    pub ap_per_threshold: Vec<ThresholdAp>,
    pub ap_mean: Option<f64>,
    pub ap50: Option<f64>,
    pub ap75: Option<f64>,
    pub ap_small: Option<f64>,
    pub ap_medium: Option<f64>,
    pub ap_large: Option<f64>,
    pub ar_at: Vec<RecallAtK>,
    pub j_mean: Option<f64>,
    pub f_mean: Option<f64>,
    pub jf_mean: Option<f64>,
}

impl EvalReport {
    pub(crate) fn empty(protocol: &str) -> Self {
        Self {
            protocol: protocol.to_string(),
            videos: 0,
            gt_instances: 0,
            pred_instances: 0,
            ap_per_threshold: Vec::new(),
            ap_mean: None,
            ap50: None,
            ap75: None,
            ap_small: None,
            ap_medium: None,
            ap_large: None,
            ar_at: Vec::new(),
            j_mean: None,
            f_mean: None,
            jf_mean: None,
        }
    }

    /// Fixed-width plain-text table.
    pub fn to_table(&self) -> String {
        let fmt = |v: Option<f64>| v.map_or_else(|| "    -".to_string(), |v| format!("{v:5.3}"));
        let mut s = String::new();
        let _ = writeln!(
            s,
            "protocol {:<6} videos {:>5}  gt {:>6}  pred {:>6}",
            self.protocol, self.videos, self.gt_instances, self.pred_instances
        );
        if !self.ap_per_threshold.is_empty() {
            let _ = writeln!(s, "{:<12}{:>8}", "metric", "value");
            for t in &self.ap_per_threshold {
                let _ = writeln!(s, "{:<12}{:>8}", format!("AP@{:.2}", t.iou), fmt(t.ap));
            }
            for (name, v) in [
                ("AP", self.ap_mean),
                ("AP50", self.ap50),
                ("AP75", self.ap75),
                ("AP_S", self.ap_small),
                ("AP_M", self.ap_medium),
                ("AP_L", self.ap_large),
            ] {
                let _ = writeln!(s, "{:<12}{:>8}", name, fmt(v));
            }
            for r in &self.ar_at {
                let _ = writeln!(s, "{:<12}{:>8}", format!("AR@{}", r.k), fmt(r.ar));
            }
        }
        if self.jf_mean.is_some() {
            let _ = writeln!(s, "{:<12}{:>8}", "metric", "value");
            for (name, v) in [("J", self.j_mean), ("F", self.f_mean), ("J&F", self.jf_mean)] {
                let _ = writeln!(s, "{:<12}{:>8}", name, fmt(v));
            }
        }
        s
    }
}

/// GT videos paired with their predictions (absent predictions pair with
/// nothing). Fails on duplicate ids or predictions for unknown videos.
pub(crate) fn pair_videos<'a>(
    preds: &'a [VideoRecord],
    gts: &'a [VideoRecord],
) -> Result<Vec<(&'a VideoRecord, Option<&'a VideoRecord>)>> {
    let mut gt_index = HashMap::new();
    for (i, g) in gts.iter().enumerate() {
        if gt_index.insert(g.video_id.as_str(), i).is_some() {
            return Err(Error::DuplicateVideo(g.video_id.clone()));
        }
    }
    let mut pred_for: Vec<Option<&VideoRecord>> = vec![None; gts.len()];
    for p in preds {
        let Some(&i) = gt_index.get(p.video_id.as_str()) else {
            return Err(Error::MissingGroundTruth(p.video_id.clone()));
        };
        if pred_for[i].is_some() {
            return Err(Error::DuplicateVideo(p.video_id.clone()));
        }
        let g = &gts[i];
        if (p.frame_count, p.height, p.width) != (g.frame_count, g.height, g.width) {
            return Err(Error::DimensionMismatch(format!(
                "video {}: prediction is {} frames of {}x{}, ground truth {} frames of {}x{}",
                p.video_id, p.frame_count, p.height, p.width, g.frame_count, g.height, g.width
            )));
        }
        pred_for[i] = Some(p);
    }
    Ok(gts.iter().zip(pred_for).collect())
}
