//! Two-label dense CRF refinement by mean-field inference.
//!
//! Pairwise terms are Potts with a spatial Gaussian kernel and a bilateral
//! (position + colour) kernel. Both are summed exactly over a disk of
//! `neighborhood_radius` pixels instead of the permutohedral-lattice
//! approximation; at the image sizes we deal with this is fast enough.

use image::RgbImage;

use crate::error::{Error, Result};
use crate::mask::BinaryMask;

#[derive(Debug, Clone, PartialEq)]
pub struct CrfParams {
    pub iterations: usize,
    pub unary_fg_prob: f64,
    pub gauss_sigma_xy: f64,
    pub gauss_weight: f64,
    pub bilateral_sigma_xy: f64,
    pub bilateral_sigma_rgb: f64,
    pub bilateral_weight: f64,
    pub neighborhood_radius: usize,
}

impl Default for CrfParams {
    fn default() -> Self {
        Self {
            iterations: 10,
            unary_fg_prob: 0.9,
            gauss_sigma_xy: 3.0,
            gauss_weight: 3.0,
            bilateral_sigma_xy: 60.0,
            bilateral_sigma_rgb: 10.0,
            bilateral_weight: 5.0,
            neighborhood_radius: 11,
        }
    }
}

impl CrfParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(what.to_string()));
        if self.iterations < 1 {
            return bad("crf iterations must be >= 1");
        }
        if !(self.unary_fg_prob > 0.5 && self.unary_fg_prob < 1.0) {
            return bad("unary_fg_prob must lie in (0.5, 1)");
        }
        if !(self.gauss_sigma_xy > 0.0 && self.bilateral_sigma_xy > 0.0 && self.bilateral_sigma_rgb > 0.0) {
            return bad("crf sigmas must be > 0");
        }
        if !(self.gauss_weight >= 0.0 && self.bilateral_weight >= 0.0) {
            return bad("crf kernel weights must be >= 0");
        }
        if self.neighborhood_radius < 1 {
            return bad("neighborhood_radius must be >= 1");
        }
        Ok(())
    }
}

/// Neighbour offset with its two spatial kernel factors.
struct Offset {
    dr: isize,
    dc: isize,
    gauss: f64,
    bilateral_xy: f64,
}

/// Mean-field state; exposed so callers can inspect marginals per iteration.
pub struct MeanField<'a> {
    image: &'a RgbImage,
    params: CrfParams,
    offsets: Vec<Offset>,
    /// `exp(-|dI|^2 / 2 sigma_rgb^2)` indexed by squared colour distance.
    colour: Vec<f64>,
    /// Unary energies `[background, foreground]`.
    unary: Vec<[f64; 2]>,
    /// Marginals `[background, foreground]`.
    q: Vec<[f64; 2]>,
}

impl<'a> MeanField<'a> {
    pub fn new(image: &'a RgbImage, mask: &BinaryMask, params: &CrfParams) -> Result<Self> {
        params.validate()?;
        let (h, w) = (image.height() as usize, image.width() as usize);
        if mask.dims() != (h, w) {
            return Err(Error::DimensionMismatch(format!(
                "image is {h}x{w}, mask is {}x{}",
                mask.height(),
                mask.width()
            )));
        }
        let rad = params.neighborhood_radius as isize;
        let mut offsets = Vec::new();
        for dr in -rad..=rad {
            for dc in -rad..=rad {
                let d2 = (dr * dr + dc * dc) as f64;
                if (dr, dc) == (0, 0) || d2 > (rad * rad) as f64 {
                    continue;
                }
                offsets.push(Offset {
                    dr,
                    dc,
                    gauss: params.gauss_weight
                        * (-d2 / (2.0 * params.gauss_sigma_xy.powi(2))).exp(),
                    bilateral_xy: params.bilateral_weight
                        * (-d2 / (2.0 * params.bilateral_sigma_xy.powi(2))).exp(),
                });
            }
        }
        let max_d2 = 3 * 255 * 255;
        let colour = (0..=max_d2)
            .map(|d2| (-(d2 as f64) / (2.0 * params.bilateral_sigma_rgb.powi(2))).exp())
            .collect();

        let p = params.unary_fg_prob;
        let unary: Vec<[f64; 2]> = mask
            .bits()
            .iter()
            .map(|&b| {
                let fg = if b { p } else { 1.0 - p };
                [-(1.0 - fg).ln(), -fg.ln()]
            })
            .collect();
        let q = unary.iter().map(|u| softmax([-u[0], -u[1]])).collect();
        Ok(Self {
            image,
            params: params.clone(),
            offsets,
            colour,
            unary,
            q,
        })
    }

    /// Current marginals, `[background, foreground]` per pixel, row-major.
    pub fn marginals(&self) -> &[[f64; 2]] {
        &self.q
    }

    /// One synchronous mean-field update.
    pub fn step(&mut self) {
        let (h, w) = (self.image.height() as isize, self.image.width() as isize);
        let pix = self.image.as_raw();
        let mut next = Vec::with_capacity(self.q.len());
        for r in 0..h {
            for c in 0..w {
                let i = (r * w + c) as usize;
                let pi = &pix[3 * i..3 * i + 3];
                let mut msg = [0.0f64; 2];
                for o in &self.offsets {
                    let (rr, cc) = (r + o.dr, c + o.dc);
                    if rr < 0 || rr >= h || cc < 0 || cc >= w {
                        continue;
                    }
                    let j = (rr * w + cc) as usize;
                    let pj = &pix[3 * j..3 * j + 3];
                    let d2: i32 = (0..3)
                        .map(|k| {
                            let d = pi[k] as i32 - pj[k] as i32;
                            d * d
                        })
                        .sum();
                    let k = o.gauss + o.bilateral_xy * self.colour[d2 as usize];
                    msg[0] += k * self.q[j][0];
                    msg[1] += k * self.q[j][1];
                }
                // Potts: paying k for each neighbour with the other label is,
                // up to a per-pixel constant, a reward of k for agreeing.
                let u = &self.unary[i];
                next.push(softmax([msg[0] - u[0], msg[1] - u[1]]));
            }
        }
        self.q = next;
    }

    /// Pixels whose foreground marginal strictly exceeds the background one.
    pub fn labeling(&self) -> BinaryMask {
        let (h, w) = (self.image.height() as usize, self.image.width() as usize);
        BinaryMask::from_bits(h, w, self.q.iter().map(|q| q[1] > q[0]).collect())
            .expect("marginals cover the image")
    }

    pub fn run(mut self) -> BinaryMask {
        for _ in 0..self.params.iterations {
            self.step();
        }
        self.labeling()
    }
}

fn softmax(logits: [f64; 2]) -> [f64; 2] {
    let m = logits[0].max(logits[1]);
    let a = (logits[0] - m).exp();
    let b = (logits[1] - m).exp();
    [a / (a + b), b / (a + b)]
}

/// Refines a pixel mask against the image it was cut from.
pub fn crf_refine(image: &RgbImage, mask: &BinaryMask, params: &CrfParams) -> Result<BinaryMask> {
    Ok(MeanField::new(image, mask, params)?.run())
}

#[cfg(test)]
mod tests {
    use super::*;
    use image::Rgb;
    use proptest::prelude::*;

    fn flat(h: u32, w: u32, v: [u8; 3]) -> RgbImage {
        RgbImage::from_pixel(w, h, Rgb(v))
    }

    /// All-pairs mean field written straight from the energy definition.
    fn naive_marginals(
        img: &RgbImage,
        mask: &BinaryMask,
        p: &CrfParams,
        iters: usize,
    ) -> Vec<[f64; 2]> {
        let (h, w) = (img.height() as i64, img.width() as i64);
        let n = (h * w) as usize;
        let unary = |i: usize| {
            let fg = if mask.bits()[i] { p.unary_fg_prob } else { 1.0 - p.unary_fg_prob };
            [-(1.0 - fg).ln(), -fg.ln()]
        };
        let norm = |e: [f64; 2]| {
            let z = (-e[0]).exp() + (-e[1]).exp();
            [(-e[0]).exp() / z, (-e[1]).exp() / z]
        };
        let mut q: Vec<[f64; 2]> = (0..n).map(|i| norm(unary(i))).collect();
        let rad2 = (p.neighborhood_radius * p.neighborhood_radius) as i64;
        for _ in 0..iters {
            let mut next = vec![[0.0; 2]; n];
            for i in 0..n {
                let (ri, ci) = (i as i64 / w, i as i64 % w);
                let mut e = unary(i);
                for j in 0..n {
                    let (rj, cj) = (j as i64 / w, j as i64 % w);
                    let d2 = (ri - rj).pow(2) + (ci - cj).pow(2);
                    if i == j || d2 > rad2 {
                        continue;
                    }
                    let a = img.get_pixel(ci as u32, ri as u32).0;
                    let b = img.get_pixel(cj as u32, rj as u32).0;
                    let c2: f64 = (0..3).map(|k| (a[k] as f64 - b[k] as f64).powi(2)).sum();
                    let k = p.gauss_weight * (-(d2 as f64) / (2.0 * p.gauss_sigma_xy.powi(2))).exp()
                        + p.bilateral_weight
                            * (-(d2 as f64) / (2.0 * p.bilateral_sigma_xy.powi(2))
                                - c2 / (2.0 * p.bilateral_sigma_rgb.powi(2)))
                            .exp();
                    // Potts penalty for disagreeing with neighbour j
                    e[0] += k * q[j][1];
                    e[1] += k * q[j][0];
                }
                next[i] = norm(e);
            }
            q = next;
        }
        q
    }

    fn hamming(a: &BinaryMask, b: &BinaryMask) -> usize {
        a.bits().iter().zip(b.bits()).filter(|(x, y)| x != y).count()
    }

    #[test]
    fn zero_pairwise_weights_keep_the_mask() {
        let img = RgbImage::from_fn(12, 9, |x, y| Rgb([(x * 20) as u8, (y * 25) as u8, 7]));
        let mask = BinaryMask::from_fn(9, 12, |r, c| (r * 7 + c * 3) % 5 < 2);
        let p = CrfParams {
            gauss_weight: 0.0,
            bilateral_weight: 0.0,
            ..CrfParams::default()
        };
        assert_eq!(crf_refine(&img, &mask, &p).unwrap(), mask);
    }

    #[test]
    fn isolated_pixel_is_removed() {
        let img = flat(31, 31, [120, 120, 120]);
        let mut mask = BinaryMask::zeros(31, 31);
        mask.set(15, 15, true);
        let out = crf_refine(&img, &mask, &CrfParams::default()).unwrap();
        assert!(out.is_empty());
    }

    #[test]
    fn high_contrast_square_is_kept() {
        let inside = |r: usize, c: usize| (10..20).contains(&r) && (12..22).contains(&c);
        let img = RgbImage::from_fn(34, 30, |x, y| {
            if inside(y as usize, x as usize) {
                Rgb([250, 250, 250])
            } else {
                Rgb([5, 5, 5])
            }
        });
        let mask = BinaryMask::from_fn(30, 34, inside);
        assert_eq!(crf_refine(&img, &mask, &CrfParams::default()).unwrap(), mask);
    }

    #[test]
    fn matches_all_pairs_oracle() {
        let img = RgbImage::from_fn(7, 6, |x, y| Rgb([(x * 37 % 256) as u8, (y * 41) as u8, ((x + y) * 13) as u8]));
        let mask = BinaryMask::from_fn(6, 7, |r, c| r + c < 6);
        let p = CrfParams {
            neighborhood_radius: 3,
            bilateral_sigma_rgb: 40.0,
            ..CrfParams::default()
        };
        let mut mf = MeanField::new(&img, &mask, &p).unwrap();
        for iters in 1..=3 {
            mf.step();
            let want = naive_marginals(&img, &mask, &p, iters);
            for (a, b) in mf.marginals().iter().zip(&want) {
                assert!((a[0] - b[0]).abs() < 1e-12 && (a[1] - b[1]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_bad_params_and_dims() {
        let img = flat(4, 4, [0, 0, 0]);
        let m = BinaryMask::zeros(4, 4);
        for p in [
            CrfParams { iterations: 0, ..CrfParams::default() },
            CrfParams { unary_fg_prob: 0.5, ..CrfParams::default() },
            CrfParams { gauss_sigma_xy: 0.0, ..CrfParams::default() },
            CrfParams { neighborhood_radius: 0, ..CrfParams::default() },
        ] {
            assert!(matches!(crf_refine(&img, &m, &p), Err(Error::InvalidParameter(_))));
        }
        let m = BinaryMask::zeros(4, 5);
        assert!(matches!(
            crf_refine(&img, &m, &CrfParams::default()),
            Err(Error::DimensionMismatch(_))
        ));
    }

    /// Flat-coloured rectangles with mild noise and a perturbed object mask.
    fn scene() -> impl Strategy<Value = (RgbImage, BinaryMask)> {
        (
            (12usize..28, 12usize..28),
            (0usize..6, 0usize..6, 5usize..10, 5usize..10),
            (any::<[u8; 3]>(), any::<[u8; 3]>()),
            any::<u64>(),
        )
            .prop_map(|((h, w), (r0, c0, bh, bw), (fg, bg), seed)| {
                let inside = |r: usize, c: usize| r >= r0 && r < r0 + bh && c >= c0 && c < c0 + bw;
                let mut s = seed;
                let mut next = move || {
                    s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    (s >> 33) as u32
                };
                let img = RgbImage::from_fn(w as u32, h as u32, |x, y| {
                    let base = if inside(y as usize, x as usize) { fg } else { bg };
                    Rgb(base.map(|v| v.saturating_add((next() % 4) as u8)))
                });
                let mask = BinaryMask::from_fn(h, w, |r, c| inside(r, c) ^ (next() % 23 == 0));
                (img, mask)
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn marginals_stay_normalized((img, mask) in scene()) {
            let mut mf = MeanField::new(&img, &mask, &CrfParams::default()).unwrap();
            for _ in 0..CrfParams::default().iterations {
                mf.step();
                for q in mf.marginals() {
                    prop_assert!((q[0] + q[1] - 1.0).abs() <= 1e-9);
                    prop_assert!(q[0] >= 0.0 && q[1] >= 0.0);
                }
            }
        }

        #[test]
        fn refinement_is_nearly_idempotent((img, mask) in scene()) {
            let p = CrfParams::default();
            let once = crf_refine(&img, &mask, &p).unwrap();
            let twice = crf_refine(&img, &once, &p).unwrap();
            let n = once.area().max(1) as f64;
            let budget = 0.005 * (once.height() * once.width()) as f64;
            prop_assert!(hamming(&once, &twice) as f64 <= budget, "{} of {}", hamming(&once, &twice), n);
        }
    }
}
