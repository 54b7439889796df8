//! Synthetic feature grids with planted objects, for tests and the demo run.
//!
//! A scene is a background cluster plus `objects` rectangular object
//! clusters. Every cluster has its own unit centroid (coordinate axes, so the
//! centroids are mutually orthogonal) and each patch adds isotropic Gaussian
//! noise. Objects never overlap, never touch each other and never cover a
//! grid corner.

use image::{Rgb, RgbImage};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::io::FeatureMap;

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedConfig {
    pub objects: usize,
    /// Feature dimensionality; must exceed `objects`.
    pub dim: usize,
    /// Per-component noise standard deviation.
    pub noise: f64,
}

impl Default for PlantedConfig {
    fn default() -> Self {
        Self {
            objects: 3,
            dim: 16,
            noise: 0.03,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PlantedScene {
    pub features: FeatureMap,
    /// Row-major patch labels: 0 is background, `k` is object `k`.
    pub labels: Vec<u8>,
    /// Inclusive `(r0, c0, r1, c1)` patch boxes, one per object.
    pub boxes: Vec<(usize, usize, usize, usize)>,
}

const PALETTE: [[u8; 3]; 6] = [
    [40, 40, 40],
    [230, 60, 50],
    [60, 200, 80],
    [70, 90, 235],
    [240, 220, 60],
    [200, 80, 220],
];

/// Draws a planted scene on a `rows x cols` patch grid.
///
/// # Panics
///
/// If `cfg.dim <= cfg.objects` or the objects cannot be placed without
/// touching (grids smaller than 6x6 with three objects, for example).
pub fn planted_scene<R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    cfg: &PlantedConfig,
    rng: &mut R,
) -> PlantedScene {
    assert!(cfg.dim > cfg.objects, "need one axis per cluster");
    let boxes = place_boxes(rows, cols, cfg.objects, rng);
    let mut labels = vec![0u8; rows * cols];
    for (k, &(r0, c0, r1, c1)) in boxes.iter().enumerate() {
        for r in r0..=r1 {
            for c in c0..=c1 {
                labels[r * cols + c] = k as u8 + 1;
            }
        }
    }
    let normal = Normal::new(0.0, cfg.noise).expect("noise must be finite and >= 0");
    let mut data = Vec::with_capacity(rows * cols * cfg.dim);
    for &l in &labels {
        for d in 0..cfg.dim {
            let centre = if d == l as usize { 1.0 } else { 0.0 };
            data.push(centre + normal.sample(rng));
        }
    }
    let features = FeatureMap::from_grid(rows, cols, cfg.dim, data).expect("valid grid");
    PlantedScene {
        features,
        labels,
        boxes,
    }
}

fn place_boxes<R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    objects: usize,
    rng: &mut R,
) -> Vec<(usize, usize, usize, usize)> {
    let side = rows.min(cols);
    let lo = (side / 8).max(1);
    let hi = (side / 4).max(2).max(lo);
    for _ in 0..1000 {
        let mut boxes: Vec<(usize, usize, usize, usize)> = Vec::with_capacity(objects);
        for _ in 0..200 {
            if boxes.len() == objects {
                break;
            }
            let h = rng.gen_range(lo..=hi).min(rows);
            let w = rng.gen_range(lo..=hi).min(cols);
            let r0 = rng.gen_range(0..=rows - h);
            let c0 = rng.gen_range(0..=cols - w);
            let b = (r0, c0, r0 + h - 1, c0 + w - 1);
            let covers_corner = (b.0 == 0 || b.2 == rows - 1) && (b.1 == 0 || b.3 == cols - 1);
            // a one-patch gap keeps objects in separate 4-connected components
            let clear = boxes.iter().all(|o| {
                b.2 + 1 < o.0 || o.2 + 1 < b.0 || b.3 + 1 < o.1 || o.3 + 1 < b.1
            });
            if !covers_corner && clear {
                boxes.push(b);
            }
        }
        if boxes.len() == objects {
            return boxes;
        }
    }
    panic!("cannot place {objects} separated objects on a {rows}x{cols} grid");
}

impl PlantedScene {
    /// Flat-coloured RGB rendering, `patch_size` pixels per patch side.
    pub fn render(&self, patch_size: usize) -> RgbImage {
        let cols = self.features.cols();
        let h = self.features.rows() * patch_size;
        let w = cols * patch_size;
        RgbImage::from_fn(w as u32, h as u32, |x, y| {
            let l = self.labels[(y as usize / patch_size) * cols + x as usize / patch_size];
            Rgb(PALETTE[l as usize % PALETTE.len()])
        })
    }
}
