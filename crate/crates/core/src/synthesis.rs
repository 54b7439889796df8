//! Copy-paste video synthesis from an image pair.
//!
//! The target image is repeated for every frame. Each source mask is cut out
//! of the source image, transformed (scale, shift, rotation, brightness,
//! contrast) and pasted over the frame, so that
//!
//! ```text
//! I = I_target * prod_i (1 - M_i) + I_source' * (1 - prod_i (1 - M_i))
//! ```
//!
//! with later pastes overwriting earlier ones. Target masks become static
//! trajectories clipped by whatever was pasted over them; each pasted mask
//! becomes a moving trajectory.

use image::{Rgb, RgbImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mask::BinaryMask;
use crate::video::{MaskSet, Trajectory, VideoRecord};

/// Geometric and photometric transform of one pasted object in one frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PasteTransform {
    pub scale: f64,
    /// Shift in target pixels, x to the right.
    pub dx: f64,
    /// Shift in target pixels, y downwards.
    pub dy: f64,
    /// Counter-clockwise on screen, about the mask's bounding-box centre.
    pub rotation_deg: f64,
    pub brightness: f64,
    pub contrast: f64,
}

impl PasteTransform {
    pub const IDENTITY: Self = Self {
        scale: 1.0,
        dx: 0.0,
        dy: 0.0,
        rotation_deg: 0.0,
        brightness: 1.0,
        contrast: 1.0,
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MotionModel {
    /// Geometry interpolated linearly from a start to an end transform.
    #[default]
    Interpolate,
    /// Geometry drawn independently for every frame.
    Independent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub frames: usize,
    pub scale_range: (f64, f64),
    pub rotation_max_deg: f64,
    pub brightness_range: (f64, f64),
    pub contrast_range: (f64, f64),
    /// Shifts are drawn from `[-f, f]` times the target width (dx) or height (dy).
    pub max_shift_fraction: f64,
    pub min_visible_fraction: f64,
    pub motion: MotionModel,
    /// Redraws allowed when a transform pushes a mask fully out of frame.
    pub max_resamples: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            frames: 2,
            scale_range: (0.8, 1.0),
            rotation_max_deg: 30.0,
            brightness_range: (0.8, 1.2),
            contrast_range: (0.8, 1.2),
            max_shift_fraction: 0.25,
            min_visible_fraction: 0.2,
            motion: MotionModel::Interpolate,
            max_resamples: 10,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        let range_ok = |(lo, hi): (f64, f64)| lo.is_finite() && hi.is_finite() && 0.0 < lo && lo <= hi;
        if self.frames < 2 {
            return bad("frames must be >= 2".into());
        }
        if !(self.min_visible_fraction > 0.0 && self.min_visible_fraction <= 1.0) {
            return bad("min_visible_fraction must lie in (0, 1]".into());
        }
        for (name, r) in [
            ("scale", self.scale_range),
            ("brightness", self.brightness_range),
            ("contrast", self.contrast_range),
        ] {
            if !range_ok(r) {
                return bad(format!("{name} range {r:?} must satisfy 0 < lo <= hi"));
            }
        }
        if !(self.rotation_max_deg >= 0.0 && self.rotation_max_deg.is_finite()) {
            return bad("rotation_max_deg must be finite and >= 0".into());
        }
        if !(self.max_shift_fraction >= 0.0 && self.max_shift_fraction.is_finite()) {
            return bad("max_shift_fraction must be finite and >= 0".into());
        }
        Ok(())
    }
}

/// Per-trajectory transforms: the two sampled endpoints and one transform per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryTransforms {
    pub start: PasteTransform,
    pub end: PasteTransform,
    pub per_frame: Vec<PasteTransform>,
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.gen_range(lo..=hi)
    }
}

fn sample_geometry<R: Rng + ?Sized>(
    rng: &mut R,
    cfg: &SynthConfig,
    width: usize,
    height: usize,
    brightness: f64,
    contrast: f64,
) -> PasteTransform {
    let sx = cfg.max_shift_fraction * width as f64;
    let sy = cfg.max_shift_fraction * height as f64;
    PasteTransform {
        scale: uniform(rng, cfg.scale_range),
        dx: uniform(rng, (-sx, sx)),
        dy: uniform(rng, (-sy, sy)),
        rotation_deg: uniform(rng, (-cfg.rotation_max_deg, cfg.rotation_max_deg)),
        brightness,
        contrast,
    }
}

/// Linear interpolation of scale, shift and rotation over `frames` steps.
pub fn interpolate(start: &PasteTransform, end: &PasteTransform, frames: usize) -> Vec<PasteTransform> {
    if frames == 1 {
        return vec![*start];
    }
    let lerp = |a: f64, b: f64, u: f64| a + (b - a) * u;
    (0..frames)
        .map(|f| {
            if f == frames - 1 {
                return *end;
            }
            let u = f as f64 / (frames - 1) as f64;
            PasteTransform {
                scale: lerp(start.scale, end.scale, u),
                dx: lerp(start.dx, end.dx, u),
                dy: lerp(start.dy, end.dy, u),
                rotation_deg: lerp(start.rotation_deg, end.rotation_deg, u),
                brightness: start.brightness,
                contrast: start.contrast,
            }
        })
        .collect()
}

/// Draws one trajectory's transforms for a `width x height` target.
pub fn sample_trajectory_transforms<R: Rng + ?Sized>(
    rng: &mut R,
    cfg: &SynthConfig,
    width: usize,
    height: usize,
) -> TrajectoryTransforms {
    let brightness = uniform(rng, cfg.brightness_range);
    let contrast = uniform(rng, cfg.contrast_range);
    let start = sample_geometry(rng, cfg, width, height, brightness, contrast);
    let end = sample_geometry(rng, cfg, width, height, brightness, contrast);
    let per_frame = match cfg.motion {
        MotionModel::Interpolate => interpolate(&start, &end, cfg.frames),
        MotionModel::Independent => {
            let mut v = vec![start];
            for _ in 2..cfg.frames {
                v.push(sample_geometry(rng, cfg, width, height, brightness, contrast));
            }
            v.push(end);
            v
        }
    };
    TrajectoryTransforms {
        start,
        end,
        per_frame,
    }
}

/// Maps a target pixel centre to source-image coordinates.
///
/// Geometry is defined in the target frame, where the source image is
/// stretched to the target size; `centre` is the pivot in that frame.
struct InverseMap {
    centre: (f64, f64),
    cos: f64,
    sin: f64,
    t: PasteTransform,
    ratio: (f64, f64),
}

impl InverseMap {
    fn new(t: &PasteTransform, centre: (f64, f64), ratio: (f64, f64)) -> Self {
        let th = t.rotation_deg.to_radians();
        Self {
            centre,
            cos: th.cos(),
            sin: th.sin(),
            t: *t,
            ratio,
        }
    }

    /// Returns `(x, y)` in source pixel coordinates.
    fn source_xy(&self, x: f64, y: f64) -> (f64, f64) {
        let (cx, cy) = self.centre;
        let ux = (x - cx - self.t.dx) / self.t.scale;
        let uy = (y - cy - self.t.dy) / self.t.scale;
        // undo a screen-space counter-clockwise rotation (y grows downwards)
        let qx = cx + self.cos * ux - self.sin * uy;
        let qy = cy + self.sin * ux + self.cos * uy;
        ((qx + 0.5) * self.ratio.0 - 0.5, (qy + 0.5) * self.ratio.1 - 0.5)
    }
}

fn bilinear(img: &RgbImage, x: f64, y: f64) -> [f64; 3] {
    let (w, h) = (img.width() as usize, img.height() as usize);
    let x = x.clamp(0.0, (w - 1) as f64);
    let y = y.clamp(0.0, (h - 1) as f64);
    let (x0, y0) = (x.floor() as usize, y.floor() as usize);
    let (x1, y1) = ((x0 + 1).min(w - 1), (y0 + 1).min(h - 1));
    let (fx, fy) = (x - x0 as f64, y - y0 as f64);
    let px = |xx: usize, yy: usize| img.get_pixel(xx as u32, yy as u32).0;
    let (a, b, c, d) = (px(x0, y0), px(x1, y0), px(x0, y1), px(x1, y1));
    let mut out = [0.0; 3];
    for k in 0..3 {
        let top = a[k] as f64 * (1.0 - fx) + b[k] as f64 * fx;
        let bot = c[k] as f64 * (1.0 - fx) + d[k] as f64 * fx;
        out[k] = top * (1.0 - fy) + bot * fy;
    }
    out
}

fn to_u8(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

/// Brightness/contrast adjustment of one resampled channel value.
pub fn adjust(v: f64, brightness: f64, contrast: f64) -> u8 {
    to_u8(((v - 127.5) * contrast + 127.5) * brightness)
}

/// Bilinear resize with pixel-centre alignment and edge clamping.
pub fn resize_bilinear(img: &RgbImage, width: u32, height: u32) -> RgbImage {
    let rx = img.width() as f64 / width as f64;
    let ry = img.height() as f64 / height as f64;
    RgbImage::from_fn(width, height, |x, y| {
        let v = bilinear(img, (x as f64 + 0.5) * rx - 0.5, (y as f64 + 0.5) * ry - 0.5);
        Rgb(v.map(to_u8))
    })
}

/// Pastes the masked part of `source` onto `target` under transform `t`.
///
/// Returns the composited image and the transformed mask in target
/// coordinates. Pixels outside that mask are copied from `target` unchanged.
/// An empty `mask` pastes nothing. A non-empty mask that lands entirely out
/// of frame fails with [`Error::EmptyTransformedMask`].
pub fn apply_paste(
    target: &RgbImage,
    source: &RgbImage,
    mask: &BinaryMask,
    t: &PasteTransform,
) -> Result<(RgbImage, BinaryMask)> {
    let (sw, sh) = (source.width() as usize, source.height() as usize);
    if mask.dims() != (sh, sw) {
        return Err(Error::DimensionMismatch(format!(
            "source is {sh}x{sw}, mask is {}x{}",
            mask.height(),
            mask.width()
        )));
    }
    if !(t.scale > 0.0 && t.scale.is_finite()) {
        return Err(Error::InvalidParameter(format!("paste scale {} must be > 0", t.scale)));
    }
    let (tw, th) = (target.width() as usize, target.height() as usize);
    let Some((r0, c0, r1, c1)) = mask.bbox() else {
        return Ok((target.clone(), BinaryMask::zeros(th, tw)));
    };
    let ratio = (sw as f64 / tw as f64, sh as f64 / th as f64);
    // bounding-box centre, moved into the target frame
    let centre = (
        ((c0 + c1) as f64 / 2.0 + 0.5) / ratio.0 - 0.5,
        ((r0 + r1) as f64 / 2.0 + 0.5) / ratio.1 - 0.5,
    );
    let map = InverseMap::new(t, centre, ratio);

    let mut out = target.clone();
    let mut pasted = BinaryMask::zeros(th, tw);
    for y in 0..th {
        for x in 0..tw {
            let (sx, sy) = map.source_xy(x as f64, y as f64);
            let (nx, ny) = ((sx + 0.5).floor(), (sy + 0.5).floor());
            if nx < 0.0 || ny < 0.0 || nx >= sw as f64 || ny >= sh as f64 {
                continue;
            }
            if !mask.get(ny as usize, nx as usize) {
                continue;
            }
            pasted.set(y, x, true);
            let v = bilinear(source, sx, sy);
            out.put_pixel(x as u32, y as u32, Rgb(v.map(|c| adjust(c, t.brightness, t.contrast))));
        }
    }
    if pasted.is_empty() {
        return Err(Error::EmptyTransformedMask);
    }
    Ok((out, pasted))
}

/// A synthesized clip: frame images plus the ground-truth record.
#[derive(Debug, Clone)]
pub struct SyntheticVideo {
    pub frames: Vec<RgbImage>,
    /// Trajectories; `frame_paths` is left empty for the caller to fill.
    pub record: VideoRecord,
}

/// Stable per-item seed from a run seed and an item index (splitmix64).
pub fn derive_seed(global: u64, index: u64) -> u64 {
    let mut z = global
        .wrapping_add(index.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Builds a `cfg.frames`-frame video from a target and a source image.
///
/// Source masks that cannot be placed in frame within `cfg.max_resamples`
/// redraws are skipped.
pub fn synthesize(
    video_id: &str,
    target_img: &RgbImage,
    target_masks: &MaskSet,
    source_img: &RgbImage,
    source_masks: &MaskSet,
    cfg: &SynthConfig,
) -> Result<SyntheticVideo> {
    cfg.validate()?;
    let (tw, th) = (target_img.width() as usize, target_img.height() as usize);
    let (sw, sh) = (source_img.width() as usize, source_img.height() as usize);
    for (what, set, dims) in [("target", target_masks, (th, tw)), ("source", source_masks, (sh, sw))] {
        if let Some(d) = set.dims() {
            if d != dims {
                return Err(Error::DimensionMismatch(format!(
                    "{what} image is {}x{}, its masks are {}x{}",
                    dims.0, dims.1, d.0, d.1
                )));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n_frames = cfg.frames;

    let mut frames = vec![target_img.clone(); n_frames];
    // pasted[k][f]: transformed source mask k in frame f
    let mut pasted: Vec<(Vec<BinaryMask>, f64)> = Vec::new();
    for (mask, &score) in source_masks.masks.iter().zip(&source_masks.scores) {
        if mask.is_empty() {
            continue;
        }
        let mut placed = None;
        for _ in 0..=cfg.max_resamples {
            let tt = sample_trajectory_transforms(&mut rng, cfg, tw, th);
            let mut out = Vec::with_capacity(n_frames);
            let mut ok = true;
            for (f, t) in tt.per_frame.iter().enumerate() {
                match apply_paste(&frames[f], source_img, mask, t) {
                    Ok(r) => out.push(r),
                    Err(Error::EmptyTransformedMask) => {
                        ok = false;
                        break;
                    }
                    Err(e) => return Err(e),
                }
            }
            if ok {
                placed = Some(out);
                break;
            }
        }
        if let Some(out) = placed {
            let mut masks = Vec::with_capacity(n_frames);
            for (f, (img, m)) in out.into_iter().enumerate() {
                frames[f] = img;
                masks.push(m);
            }
            pasted.push((masks, score));
        }
    }

    // union of everything pasted, per frame
    let mut covered = vec![BinaryMask::zeros(th, tw); n_frames];
    for (masks, _) in &pasted {
        for (f, m) in masks.iter().enumerate() {
            covered[f].or_assign(m)?;
        }
    }

    let mut trajectories = Vec::new();
    let mut next_id = 1u64;
    for (mask, &score) in target_masks.masks.iter().zip(&target_masks.scores) {
        let area = mask.area();
        if area == 0 {
            continue;
        }
        let mut slots = Vec::with_capacity(n_frames);
        let mut keep = false;
        for cov in &covered {
            let mut m = mask.clone();
            m.subtract_assign(cov)?;
            if m.area() as f64 / area as f64 >= cfg.min_visible_fraction {
                keep = true;
            }
            slots.push(if m.is_empty() { None } else { Some(m) });
        }
        if keep {
            trajectories.push(Trajectory {
                instance_id: next_id,
                frames: slots,
                score,
            });
            next_id += 1;
        }
    }
    for (k, (masks, score)) in pasted.iter().enumerate() {
        let slots: Vec<Option<BinaryMask>> = masks
            .iter()
            .enumerate()
            .map(|(f, m)| {
                let mut m = m.clone();
                for (later, _) in &pasted[k + 1..] {
                    m.subtract_assign(&later[f]).expect("same frame size");
                }
                (!m.is_empty()).then_some(m)
            })
            .collect();
        if slots.iter().any(Option::is_some) {
            trajectories.push(Trajectory {
                instance_id: next_id,
                frames: slots,
                score: *score,
            });
            next_id += 1;
        }
    }
    if trajectories.is_empty() {
        return Err(Error::NoTrajectories);
    }
    let record = VideoRecord {
        video_id: video_id.to_string(),
        frame_count: n_frames,
        height: th,
        width: tw,
        frame_paths: Vec::new(),
        trajectories,
    };
    record.validate()?;
    Ok(SyntheticVideo { frames, record })
}
