use std::collections::HashMap;

use image::RgbImage;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use vidcut::io::{load_rgb, load_video_manifest, manifest_to_string, save_rgb, write_atomic};
use vidcut::synthesis::{derive_seed, synthesize, MotionModel, SynthConfig, SyntheticVideo};
use vidcut::{Error, MaskSet, VideoRecord};

use super::{list_stems, warn};
use crate::error::{CliError, CliResult, Staging};
use crate::{Motion, SynthArgs};

/// Manifest of synthesized trajectories, relative to the output directory.
pub const MANIFEST: &str = "trajectories.json";

fn config(a: &SynthArgs) -> CliResult<SynthConfig> {
    if a.frames < 2 {
        return Err(CliError::Config("frames must be ≥ 2".into()));
    }
    let cfg = SynthConfig {
        frames: a.frames,
        scale_range: (a.scale_min, a.scale_max),
        rotation_max_deg: a.rotation_max,
        brightness_range: (a.brightness_min, a.brightness_max),
        contrast_range: (a.contrast_min, a.contrast_max),
        max_shift_fraction: a.max_shift,
        min_visible_fraction: a.min_visible,
        motion: match a.motion {
            Motion::Interpolate => MotionModel::Interpolate,
            Motion::Independent => MotionModel::Independent,
        },
        seed: a.seed,
        ..SynthConfig::default()
    };
    cfg.validate().map_err(|e| CliError::Config(e.to_string()))?;
    Ok(cfg)
}

/// First-frame masks of a single-image record.
fn mask_set(rec: &VideoRecord) -> CliResult<MaskSet> {
    let mut masks = Vec::new();
    let mut scores = Vec::new();
    for t in &rec.trajectories {
        if let Some(Some(m)) = t.frames.first() {
            if !m.is_empty() {
                masks.push(m.clone());
                scores.push(t.score);
            }
        }
    }
    Ok(MaskSet::new(masks, scores)?)
}

struct Entry {
    stem: String,
    image: RgbImage,
    masks: MaskSet,
}

pub fn run(a: &SynthArgs) -> CliResult<()> {
    let base = config(a)?;
    let records = load_video_manifest(&a.masks)?;
    let mut by_id: HashMap<&str, &VideoRecord> = HashMap::new();
    for r in &records {
        if by_id.insert(r.video_id.as_str(), r).is_some() {
            return Err(CliError::Mismatch(format!("duplicate video id {} in {}", r.video_id, a.masks.display())));
        }
    }

    let mut entries = Vec::new();
    for stem in list_stems(&a.images, "png")? {
        let masks = match by_id.get(stem.as_str()) {
            Some(rec) => mask_set(rec)?,
            None => MaskSet::new(vec![], vec![])?,
        };
        if masks.is_empty() {
            warn(format!("skipping {stem}: no masks"));
            continue;
        }
        let path = a.images.join(format!("{stem}.png"));
        let image = load_rgb(&path)?;
        let dims = (image.height() as usize, image.width() as usize);
        if masks.dims() != Some(dims) {
            return Err(CliError::Mismatch(format!(
                "{}: image is {}x{}, masks are {:?}",
                path.display(),
                dims.0,
                dims.1,
                masks.dims()
            )));
        }
        entries.push(Entry { stem, image, masks });
    }
    if entries.is_empty() {
        warn("no images with masks; nothing to synthesize");
    }

    // seeded shuffled pairing: the k-th target takes the next image in the shuffle as source
    let mut order: Vec<usize> = (0..entries.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(a.seed));
    let n = order.len();
    let jobs: Vec<(usize, usize, usize)> = (0..n).map(|k| (k, order[k], order[(k + 1) % n])).collect();

    let results: Vec<(String, Result<SyntheticVideo, Error>)> = jobs
        .par_iter()
        .map(|&(k, t, s)| {
            let (tgt, src) = (&entries[t], &entries[s]);
            let id = format!("{k:05}_{}_{}", tgt.stem, src.stem);
            let cfg = SynthConfig {
                seed: derive_seed(a.seed, k as u64),
                ..base.clone()
            };
            let v = synthesize(&id, &tgt.image, &tgt.masks, &src.image, &src.masks, &cfg);
            (id, v)
        })
        .collect();

    let mut staging = Staging::new(&a.out)?;
    let mut out_records = Vec::new();
    for (id, result) in results {
        let mut video = match result {
            Ok(v) => v,
            Err(Error::NoTrajectories) => {
                warn(format!("skipping {id}: no trajectory survived"));
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        for (f, frame) in video.frames.iter().enumerate() {
            let rel = format!("videos/{id}/{f:05}.png");
            save_rgb(frame, &staging.path(&rel)?)?;
            video.record.frame_paths.push(rel);
        }
        println!("{id}: {} frames, {} trajectories", video.frames.len(), video.record.trajectories.len());
        out_records.push(video.record);
    }
    let manifest = staging.path(MANIFEST)?;
    write_atomic(&manifest, manifest_to_string(&out_records).as_bytes())?;
    staging.commit()
}
