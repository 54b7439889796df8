//! Iterated Normalized-Cut discovery of up to `t` object masks per image.
//!
//! Each round solves the Fiedler problem on the current affinity graph, takes
//! the foreground side, keeps the 4-connected component around the strongest
//! patch, and then suppresses every affinity touching the claimed patches to
//! [`EPSILON_WEIGHT`](crate::spectral::EPSILON_WEIGHT). For a binarized
//! affinity this is exactly what zeroing the claimed patches' features does.

use image::RgbImage;

use crate::crf::{crf_refine, CrfParams};
use crate::error::{Error, Result};
use crate::io::FeatureMap;
use crate::mask::BinaryMask;
use crate::spectral::{self, bipartition_active, build_affinity, fiedler_with, Solver};
use crate::video::MaskSet;

/// Default number of discovery rounds.
pub const DEFAULT_T: usize = 3;

/// Rounds stop once fewer unclaimed patches than this remain.
const MIN_ACTIVE_PATCHES: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct MaskCutConfig {
    pub t: usize,
    pub tau: f64,
    pub tol: f64,
    /// Keep only the connected component containing the seed patch.
    pub seed_component: bool,
    pub solver: Solver,
}

impl Default for MaskCutConfig {
    fn default() -> Self {
        Self {
            t: DEFAULT_T,
            tau: spectral::DEFAULT_TAU,
            tol: spectral::DEFAULT_TOL,
            seed_component: true,
            solver: Solver::Auto,
        }
    }
}

/// Patch-resolution masks with default settings for everything but `t` and `tau`.
pub fn maskcut(fm: &FeatureMap, t: usize, tau: f64) -> Result<MaskSet> {
    maskcut_with(
        fm,
        &MaskCutConfig {
            t,
            tau,
            ..MaskCutConfig::default()
        },
    )
}

pub fn maskcut_with(fm: &FeatureMap, cfg: &MaskCutConfig) -> Result<MaskSet> {
    if cfg.t == 0 {
        return Err(Error::InvalidParameter("t must be >= 1".into()));
    }
    let (rows, cols) = (fm.rows(), fm.cols());
    let n = rows * cols;
    let mut graph = build_affinity(fm, cfg.tau)?;
    let mut claimed = vec![false; n];
    let mut masks = Vec::new();
    let mut raw_scores = Vec::new();

    for round in 0..cfg.t {
        let active: Vec<bool> = claimed.iter().map(|c| !c).collect();
        if active.iter().filter(|&&a| a).count() < MIN_ACTIVE_PATCHES || n < 2 {
            break;
        }
        if round > 0 {
            graph.suppress(&claimed);
        }
        let fr = fiedler_with(&graph, cfg.tol, cfg.solver)?;
        let part = match bipartition_active(&fr, rows, cols, &active) {
            Ok(p) => p,
            Err(Error::DegeneratePartition) => break,
            Err(e) => return Err(e),
        };
        let fg = if cfg.seed_component {
            part.foreground
                .component_at(part.seed / cols, part.seed % cols)
        } else {
            part.foreground
        };
        if fg.is_empty() {
            break;
        }
        let (sum, count) = fg
            .bits()
            .iter()
            .zip(&fr.eigenvector)
            .filter(|(&b, _)| b)
            .fold((0.0, 0usize), |(s, c), (_, &x)| (s + part.orientation * x, c + 1));
        raw_scores.push(sum / count as f64);
        for (c, &b) in claimed.iter_mut().zip(fg.bits()) {
            *c |= b;
        }
        masks.push(fg);
    }

    MaskSet::new(masks, normalize_scores(&raw_scores))
}

/// Min-max normalization to `[0, 1]`; a set with no spread scores 1.
fn normalize_scores(raw: &[f64]) -> Vec<f64> {
    let lo = raw.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = raw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(hi - lo > 0.0) {
        return vec![1.0; raw.len()];
    }
    raw.iter().map(|s| (s - lo) / (hi - lo)).collect()
}

/// Nearest-neighbour expansion of a patch mask to pixels, cropped to the image.
pub fn upsample_mask(
    mask: &BinaryMask,
    patch_size: usize,
    image_height: usize,
    image_width: usize,
) -> Result<BinaryMask> {
    if patch_size == 0
        || mask.height() != image_height.div_ceil(patch_size)
        || mask.width() != image_width.div_ceil(patch_size)
    {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} patch mask does not tile a {image_height}x{image_width} image with patch {patch_size}",
            mask.height(),
            mask.width()
        )));
    }
    Ok(BinaryMask::from_fn(image_height, image_width, |r, c| {
        mask.get(r / patch_size, c / patch_size)
    }))
}

/// Full discovery for one image: patch masks, upsampling, optional CRF refinement.
///
/// `image` must match the feature map's image size. Refinement can make
/// masks overlap, so each refined mask loses the pixels of earlier ones;
/// masks left empty are dropped along with their scores.
pub fn discover(
    fm: &FeatureMap,
    image: Option<&RgbImage>,
    cfg: &MaskCutConfig,
    crf: Option<&CrfParams>,
) -> Result<MaskSet> {
    let patches = maskcut_with(fm, cfg)?;
    let (h, w) = (fm.image_height(), fm.image_width());
    let mut masks = Vec::with_capacity(patches.len());
    let mut scores = Vec::with_capacity(patches.len());
    let mut claimed = BinaryMask::zeros(h, w);
    for (m, &s) in patches.masks.iter().zip(&patches.scores) {
        let up = upsample_mask(m, fm.patch_size(), h, w)?;
        let mut refined = match (crf, image) {
            (Some(params), Some(img)) => crf_refine(img, &up, params)?,
            _ => up,
        };
        refined.subtract_assign(&claimed)?;
        claimed.or_assign(&refined)?;
        if !refined.is_empty() {
            masks.push(refined);
            scores.push(s);
        }
    }
    MaskSet::new(masks, scores)
}
