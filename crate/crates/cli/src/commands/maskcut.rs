use std::path::{Path, PathBuf};

use rayon::prelude::*;
use vidcut::crf::CrfParams;
use vidcut::io::{load_feature_map, load_rgb, manifest_to_string, save_label_png, sidecar_path, write_atomic};
use vidcut::maskcut::{discover, MaskCutConfig};
use vidcut::{MaskSet, Trajectory, VideoRecord};

use super::{list_stems, warn};
use crate::error::{CliError, CliResult, Staging};
use crate::{CrfArgs, MaskcutArgs};

/// Manifest written next to the label maps.
pub const MANIFEST: &str = "masks.json";

pub fn crf_params(a: &CrfArgs) -> CliResult<Option<CrfParams>> {
    if a.no_crf {
        return Ok(None);
    }
    let p = CrfParams {
        iterations: a.crf_iterations,
        unary_fg_prob: a.crf_unary_prob,
        gauss_sigma_xy: a.crf_gauss_sigma,
        gauss_weight: a.crf_gauss_weight,
        bilateral_sigma_xy: a.crf_bilateral_sigma_xy,
        bilateral_sigma_rgb: a.crf_bilateral_sigma_rgb,
        bilateral_weight: a.crf_bilateral_weight,
        neighborhood_radius: a.crf_radius,
    };
    p.validate().map_err(|e| CliError::Config(e.to_string()))?;
    Ok(Some(p))
}

struct Item {
    stem: String,
    npy: PathBuf,
    image: PathBuf,
}

fn discover_one(item: &Item, cfg: &MaskCutConfig, crf: Option<&CrfParams>) -> CliResult<(MaskSet, usize, usize)> {
    let fm = load_feature_map(&item.npy)?;
    let img = load_rgb(&item.image)?;
    let (h, w) = (fm.image_height(), fm.image_width());
    if (img.height() as usize, img.width() as usize) != (h, w) {
        return Err(CliError::Mismatch(format!(
            "{}: image is {}x{} but features describe {h}x{w}",
            item.image.display(),
            img.height(),
            img.width()
        )));
    }
    Ok((discover(&fm, Some(&img), cfg, crf)?, h, w))
}

pub fn run(a: &MaskcutArgs) -> CliResult<()> {
    if a.t == 0 {
        return Err(CliError::Config("t must be ≥ 1".into()));
    }
    if !(0.0..1.0).contains(&a.tau) {
        return Err(CliError::Config(format!("tau must lie in [0, 1), got {}", a.tau)));
    }
    let crf = crf_params(&a.crf)?;
    let cfg = MaskCutConfig {
        t: a.t,
        tau: a.tau,
        seed_component: !a.no_seed_component,
        ..MaskCutConfig::default()
    };

    // check every input path before doing any work
    let stems = list_stems(&a.features, "npy")?;
    if stems.is_empty() {
        warn(format!("no .npy feature files in {}", a.features.display()));
    }
    let mut items = Vec::with_capacity(stems.len());
    for stem in stems {
        let npy = a.features.join(format!("{stem}.npy"));
        let side = sidecar_path(&npy);
        if !side.is_file() {
            return Err(CliError::Config(format!("missing sidecar {}", side.display())));
        }
        let image = a.images.join(format!("{stem}.png"));
        if !image.is_file() {
            return Err(CliError::Io(format!("missing image {}", image.display())));
        }
        items.push(Item { stem, npy, image });
    }

    let results: Vec<CliResult<(MaskSet, usize, usize)>> = items
        .par_iter()
        .map(|it| discover_one(it, &cfg, crf.as_ref()))
        .collect();

    let mut staging = Staging::new(&a.out)?;
    let mut records = Vec::with_capacity(items.len());
    for (item, result) in items.iter().zip(results) {
        let (set, h, w) = result?;
        let png = staging.path(&format!("masks/{}.png", item.stem))?;
        save_label_png(&set.masks, h, w, &png)?;
        records.push(VideoRecord {
            video_id: item.stem.clone(),
            frame_count: 1,
            height: h,
            width: w,
            frame_paths: vec![path_string(&item.image)],
            trajectories: set
                .masks
                .into_iter()
                .zip(set.scores)
                .enumerate()
                .map(|(k, (m, score))| Trajectory {
                    instance_id: k as u64 + 1,
                    frames: vec![Some(m)],
                    score,
                })
                .collect(),
        });
        println!("{}: {} masks", item.stem, records.last().map_or(0, |r| r.trajectories.len()));
    }
    let manifest = staging.path(MANIFEST)?;
    write_atomic(&manifest, manifest_to_string(&records).as_bytes())?;
    staging.commit()
}

fn path_string(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}
