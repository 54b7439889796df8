use super::{hungarian_max, inter_union, pair_videos, EvalReport};
use crate::error::Result;
use crate::mask::BinaryMask;
use crate::video::{Trajectory, VideoRecord};

/// Boundary tolerance as a fraction of the frame diagonal.
const BOUNDARY_FRACTION: f64 = 0.008;

/// Foreground pixels with at least one background 4-neighbour; outside the
/// image counts as background.
pub fn boundary_pixels(mask: &BinaryMask) -> BinaryMask {
    let (h, w) = mask.dims();
    BinaryMask::from_fn(h, w, |r, c| {
        mask.get(r, c)
            && (r == 0
                || c == 0
                || r + 1 == h
                || c + 1 == w
                || !mask.get(r - 1, c)
                || !mask.get(r + 1, c)
                || !mask.get(r, c - 1)
                || !mask.get(r, c + 1))
    })
}

/// Matching radius in pixels for an `h x w` frame, rounded up.
pub fn boundary_radius(h: usize, w: usize) -> usize {
    (BOUNDARY_FRACTION * ((h * h + w * w) as f64).sqrt()).ceil() as usize
}

/// Dilation by a disk of `radius` (offsets with `dr^2 + dc^2 <= radius^2`).
fn dilate(mask: &BinaryMask, radius: usize) -> BinaryMask {
    let (h, w) = mask.dims();
    let rad = radius as isize;
    let offsets: Vec<(isize, isize)> = (-rad..=rad)
        .flat_map(|dr| (-rad..=rad).map(move |dc| (dr, dc)))
        .filter(|(dr, dc)| dr * dr + dc * dc <= rad * rad)
        .collect();
    let mut out = BinaryMask::zeros(h, w);
    for r in 0..h {
        for c in 0..w {
            if !mask.get(r, c) {
                continue;
            }
            for &(dr, dc) in &offsets {
                let (rr, cc) = (r as isize + dr, c as isize + dc);
                if rr >= 0 && cc >= 0 && (rr as usize) < h && (cc as usize) < w {
                    out.set(rr as usize, cc as usize, true);
                }
            }
        }
    }
    out
}

/// Per-frame IoU averaged over frames; frames empty in both count as 1.
pub fn region_j(pred: &Trajectory, gt: &Trajectory) -> Result<f64> {
    super::frame_counts(pred, gt)?;
    if gt.frames.is_empty() {
        return Ok(1.0);
    }
    let mut sum = 0.0;
    for (p, g) in pred.frames.iter().zip(&gt.frames) {
        let (i, u) = inter_union(p.as_ref(), g.as_ref())?;
        sum += if u == 0 { 1.0 } else { i as f64 / u as f64 };
    }
    Ok(sum / gt.frames.len() as f64)
}

/// Boundary F-measure of one frame. Absent masks are empty.
fn frame_f(pred: Option<&BinaryMask>, gt: Option<&BinaryMask>, h: usize, w: usize) -> Result<f64> {
    let empty = BinaryMask::zeros(h, w);
    let pb = boundary_pixels(pred.unwrap_or(&empty));
    let gb = boundary_pixels(gt.unwrap_or(&empty));
    let (np, ng) = (pb.area(), gb.area());
    if np == 0 && ng == 0 {
        return Ok(1.0);
    }
    if np == 0 || ng == 0 {
        return Ok(0.0);
    }
    let radius = boundary_radius(h, w);
    let precision = pb.intersection_area(&dilate(&gb, radius))? as f64 / np as f64;
    let recall = gb.intersection_area(&dilate(&pb, radius))? as f64 / ng as f64;
    Ok(if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    })
}

/// Boundary F-measure averaged over frames of an `h x w` video.
pub fn boundary_f(pred: &Trajectory, gt: &Trajectory, h: usize, w: usize) -> Result<f64> {
    super::frame_counts(pred, gt)?;
    if gt.frames.is_empty() {
        return Ok(1.0);
    }
    let mut sum = 0.0;
    for (p, g) in pred.frames.iter().zip(&gt.frames) {
        sum += frame_f(p.as_ref(), g.as_ref(), h, w)?;
    }
    Ok(sum / gt.frames.len() as f64)
}

/// J and F per ground-truth instance of one video, after assigning
/// predictions one-to-one to maximise the summed `(J + F) / 2`.
pub(crate) fn score_video(gt: &VideoRecord, pred: Option<&VideoRecord>) -> Result<Vec<(f64, f64)>> {
    let preds: &[Trajectory] = pred.map_or(&[], |p| &p.trajectories);
    let mut pairs = Vec::with_capacity(gt.trajectories.len());
    for g in &gt.trajectories {
        let row = preds
            .iter()
            .map(|p| Ok((region_j(p, g)?, boundary_f(p, g, gt.height, gt.width)?)))
            .collect::<Result<Vec<(f64, f64)>>>()?;
        pairs.push(row);
    }
    let scores: Vec<Vec<f64>> = pairs
        .iter()
        .map(|row| row.iter().map(|(j, f)| (j + f) / 2.0).collect())
        .collect();
    let assignment = hungarian_max(&scores);
    Ok(assignment
        .iter()
        .enumerate()
        .map(|(g, a)| a.map_or((0.0, 0.0), |p| pairs[g][p]))
        .collect())
}

/// DAVIS region (J), boundary (F) and J&F means over all ground-truth instances.
pub fn evaluate_davis(preds: &[VideoRecord], gts: &[VideoRecord]) -> Result<EvalReport> {
    for r in preds.iter().chain(gts) {
        r.validate()?;
    }
    let mut per_instance = Vec::new();
    for (g, p) in pair_videos(preds, gts)? {
        per_instance.extend(score_video(g, p)?);
    }
    let mut report = EvalReport::empty("davis");
    report.videos = gts.len();
    report.gt_instances = per_instance.len();
    report.pred_instances = preds.iter().map(|p| p.trajectories.len()).sum();
    if !per_instance.is_empty() {
        let n = per_instance.len() as f64;
        let j = per_instance.iter().map(|x| x.0).sum::<f64>() / n;
        let f = per_instance.iter().map(|x| x.1).sum::<f64>() / n;
        report.j_mean = Some(j);
        report.f_mean = Some(f);
        report.jf_mean = Some((j + f) / 2.0);
    }
    Ok(report)
}
