use std::collections::HashSet;

use vidcut::io::{load_video_manifest, write_atomic};
use vidcut::metrics::{default_thresholds, evaluate_ap, evaluate_davis, EvalReport};
use vidcut::VideoRecord;

use super::{json_bytes, warn};
use crate::error::{CliError, CliResult};
use crate::{EvalArgs, Protocol};

pub fn score(preds: &[VideoRecord], gts: &[VideoRecord], protocol: Protocol, thresholds: &[f64]) -> CliResult<EvalReport> {
    let gt_ids: HashSet<&str> = gts.iter().map(|g| g.video_id.as_str()).collect();
    let unknown: Vec<&str> = preds
        .iter()
        .map(|p| p.video_id.as_str())
        .filter(|id| !gt_ids.contains(id))
        .collect();
    if !unknown.is_empty() {
        return Err(CliError::Mismatch(format!(
            "predictions for videos missing from ground truth: {}",
            unknown.join(", ")
        )));
    }
    let pred_ids: HashSet<&str> = preds.iter().map(|p| p.video_id.as_str()).collect();
    for g in gts.iter().filter(|g| !pred_ids.contains(g.video_id.as_str())) {
        warn(format!("no predictions for video {}; scored as all misses", g.video_id));
    }
    Ok(match protocol {
        Protocol::Ytvis => evaluate_ap(preds, gts, thresholds)?,
        Protocol::Davis => evaluate_davis(preds, gts)?,
    })
}

pub fn run(a: &EvalArgs) -> CliResult<()> {
    let thresholds = match &a.thresholds {
        Some(t) => t.clone(),
        None => default_thresholds(),
    };
    if thresholds.is_empty() || thresholds.iter().any(|t| !(0.0..=1.0).contains(t)) {
        return Err(CliError::Config("thresholds must lie in [0, 1]".into()));
    }
    let preds = load_video_manifest(&a.pred)?;
    let gts = load_video_manifest(&a.gt)?;
    let report = score(&preds, &gts, a.protocol, &thresholds)?;
    if let Some(parent) = a.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    write_atomic(&a.out, &json_bytes(&report))?;
    print!("{}", report.to_table());
    Ok(())
}
