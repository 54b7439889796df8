use super::{pair_videos, st_iou, EvalReport, RecallAtK, ThresholdAp};
use crate::error::{Error, Result};
use crate::video::VideoRecord;

/// Per-video prediction budgets for AR.
pub const AR_KS: [usize; 2] = [1, 10];

const RECALL_POINTS: usize = 101;

/// Size buckets on the mean per-frame area of an instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AreaRange {
    All,
    /// `< 32^2`
    Small,
    /// `[32^2, 96^2)`
    Medium,
    /// `>= 96^2`
    Large,
}

impl AreaRange {
    pub fn contains(self, area: f64) -> bool {
        let (lo, hi) = match self {
            AreaRange::All => return true,
            AreaRange::Small => (0.0, 32.0 * 32.0),
            AreaRange::Medium => (32.0 * 32.0, 96.0 * 96.0),
            AreaRange::Large => (96.0 * 96.0, f64::INFINITY),
        };
        lo <= area && area < hi
    }
}

/// Everything about one video that does not depend on the threshold.
struct VideoTable {
    gt_areas: Vec<f64>,
    /// Predictions in descending score order (stable).
    scores: Vec<f64>,
    pred_areas: Vec<f64>,
    /// `iou[d][g]` for sorted prediction `d` and ground truth `g`.
    iou: Vec<Vec<f64>>,
}

impl VideoTable {
    fn new(gt: &VideoRecord, pred: Option<&VideoRecord>) -> Result<Self> {
        let mut preds: Vec<_> = pred.map_or(Vec::new(), |p| p.trajectories.iter().collect());
        preds.sort_by(|a, b| b.score.total_cmp(&a.score));
        let iou = preds
            .iter()
            .map(|p| gt.trajectories.iter().map(|g| st_iou(p, g)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            gt_areas: gt.trajectories.iter().map(|g| g.mean_area()).collect(),
            scores: preds.iter().map(|p| p.score).collect(),
            pred_areas: preds.iter().map(|p| p.mean_area()).collect(),
            iou,
        })
    }
}

/// Outcome of one prediction after matching.
#[derive(Debug, Clone, Copy)]
struct Detection {
    score: f64,
    true_positive: bool,
    ignored: bool,
}

/// Greedy matching of the top `max_dets` predictions of one video.
///
/// Each prediction takes the unmatched in-range ground truth of highest IoU
/// (lowest index on ties) provided the IoU reaches `tau`; failing that, an
/// unmatched out-of-range one. Matches to out-of-range ground truth and
/// unmatched out-of-range predictions are ignored.
fn match_video(
    v: &VideoTable,
    tau: f64,
    range: AreaRange,
    max_dets: usize,
) -> (Vec<Detection>, usize) {
    let gt_ignored: Vec<bool> = v.gt_areas.iter().map(|&a| !range.contains(a)).collect();
    let mut gt_taken = vec![false; v.gt_areas.len()];
    let mut dets = Vec::new();
    for d in 0..v.scores.len().min(max_dets) {
        let pick = |want_ignored: bool, taken: &[bool]| {
            let mut best: Option<(usize, f64)> = None;
            for (g, &iou) in v.iou[d].iter().enumerate() {
                if taken[g] || gt_ignored[g] != want_ignored || iou < tau {
                    continue;
                }
                if best.is_none_or(|(_, b)| iou > b) {
                    best = Some((g, iou));
                }
            }
            best.map(|(g, _)| g)
        };
        let matched = pick(false, &gt_taken).or_else(|| pick(true, &gt_taken));
        let det = match matched {
            Some(g) => {
                gt_taken[g] = true;
                Detection {
                    score: v.scores[d],
                    true_positive: true,
                    ignored: gt_ignored[g],
                }
            }
            None => Detection {
                score: v.scores[d],
                true_positive: false,
                ignored: !range.contains(v.pred_areas[d]),
            },
        };
        dets.push(det);
    }
    (dets, gt_ignored.iter().filter(|&&i| !i).count())
}

/// 101-point interpolated AP of score-sorted detections, or `None` without ground truth.
fn average_precision(mut dets: Vec<Detection>, n_gt: usize) -> Option<f64> {
    if n_gt == 0 {
        return None;
    }
    // stable: equal scores keep video order, then within-video order
    dets.sort_by(|a, b| b.score.total_cmp(&a.score));
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut recall = Vec::new();
    let mut precision = Vec::new();
    for d in dets.iter().filter(|d| !d.ignored) {
        if d.true_positive {
            tp += 1;
        } else {
            fp += 1;
        }
        recall.push(tp as f64 / n_gt as f64);
        precision.push(tp as f64 / (tp + fp) as f64);
    }
    for i in (0..precision.len().saturating_sub(1)).rev() {
        if precision[i + 1] > precision[i] {
            precision[i] = precision[i + 1];
        }
    }
    let mut sum = 0.0;
    for k in 0..RECALL_POINTS {
        let r = k as f64 / (RECALL_POINTS - 1) as f64;
        let idx = recall.partition_point(|&x| x < r);
        if idx < precision.len() {
            sum += precision[idx];
        }
    }
    Some(sum / RECALL_POINTS as f64)
}

fn mean(values: impl IntoIterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = values.into_iter().flatten().collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn ap_over(tables: &[VideoTable], tau: f64, range: AreaRange) -> Option<f64> {
    let mut dets = Vec::new();
    let mut n_gt = 0;
    for v in tables {
        let (d, n) = match_video(v, tau, range, usize::MAX);
        dets.extend(d);
        n_gt += n;
    }
    average_precision(dets, n_gt)
}

fn recall_over(tables: &[VideoTable], tau: f64, k: usize) -> Option<f64> {
    let (mut tp, mut n_gt) = (0usize, 0usize);
    for v in tables {
        let (d, n) = match_video(v, tau, AreaRange::All, k);
        tp += d.iter().filter(|d| d.true_positive).count();
        n_gt += n;
    }
    (n_gt > 0).then(|| tp as f64 / n_gt as f64)
}

/// AP per threshold, mean AP, AP50/AP75, size-bucket AP and AR@1/AR@10
/// (recall averaged over the same thresholds).
///
/// Every prediction video must have ground truth; ground-truth videos
/// without predictions count as all misses.
pub fn evaluate_ap(preds: &[VideoRecord], gts: &[VideoRecord], thresholds: &[f64]) -> Result<EvalReport> {
    if thresholds.is_empty() || thresholds.iter().any(|t| !(0.0..=1.0).contains(t)) {
        return Err(Error::InvalidParameter(
            "IoU thresholds must be a non-empty list in [0, 1]".into(),
        ));
    }
    for r in preds.iter().chain(gts) {
        r.validate()?;
    }
    let pairs = pair_videos(preds, gts)?;
    let tables = pairs
        .iter()
        .map(|(g, p)| VideoTable::new(g, *p))
        .collect::<Result<Vec<_>>>()?;

    let per_threshold: Vec<ThresholdAp> = thresholds
        .iter()
        .map(|&t| ThresholdAp {
            iou: t,
            ap: ap_over(&tables, t, AreaRange::All),
        })
        .collect();
    let at = |x: f64| {
        per_threshold
            .iter()
            .find(|t| (t.iou - x).abs() < 1e-12)
            .and_then(|t| t.ap)
    };
    let bucket = |range| mean(thresholds.iter().map(|&t| ap_over(&tables, t, range)));

    let mut report = EvalReport::empty("ytvis");
    report.videos = gts.len();
    report.gt_instances = gts.iter().map(|g| g.trajectories.len()).sum();
    report.pred_instances = preds.iter().map(|p| p.trajectories.len()).sum();
    report.ap_mean = mean(per_threshold.iter().map(|t| t.ap));
    report.ap50 = at(0.5);
    report.ap75 = at(0.75);
    report.ap_small = bucket(AreaRange::Small);
    report.ap_medium = bucket(AreaRange::Medium);
    report.ap_large = bucket(AreaRange::Large);
    report.ar_at = AR_KS
        .iter()
        .map(|&k| RecallAtK {
            k,
            ar: mean(thresholds.iter().map(|&t| recall_over(&tables, t, k))),
        })
        .collect();
    report.ap_per_threshold = per_threshold;
    Ok(report)
}
