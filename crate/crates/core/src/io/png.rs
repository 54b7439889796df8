use std::io::Cursor;
use std::path::Path;

use image::{GrayImage, ImageFormat, Luma, RgbImage};

use super::write_atomic;
use crate::error::{Error, Result};
use crate::mask::BinaryMask;

pub fn load_rgb(path: &Path) -> Result<RgbImage> {
    let img = image::open(path).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(img.to_rgb8())
}

pub fn save_rgb(img: &RgbImage, path: &Path) -> Result<()> {
    let mut buf = Cursor::new(Vec::new());
    img.write_to(&mut buf, ImageFormat::Png)
        .map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })?;
    write_atomic(path, buf.get_ref())
}

/// Writes an 8-bit label map: 0 is background, `k` is `masks[k - 1]`.
/// Where masks overlap the lower index wins.
pub fn save_label_png(masks: &[BinaryMask], height: usize, width: usize, path: &Path) -> Result<()> {
    if masks.len() > 255 {
        return Err(Error::InvalidParameter(format!(
            "{} masks do not fit an 8-bit label map",
            masks.len()
        )));
    }
    let mut img = GrayImage::new(width as u32, height as u32);
    for (k, m) in masks.iter().enumerate().rev() {
        if m.dims() != (height, width) {
            return Err(Error::DimensionMismatch(format!(
                "label map is {height}x{width}, mask {k} is {:?}",
                m.dims()
            )));
        }
        for r in 0..height {
            for c in 0..width {
                if m.get(r, c) {
                    img.put_pixel(c as u32, r as u32, Luma([k as u8 + 1]));
                }
            }
        }
    }
    let mut buf = Cursor::new(Vec::new());
    img.write_to(&mut buf, ImageFormat::Png)
        .map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })?;
    write_atomic(path, buf.get_ref())
}

/// Splits an 8-bit label map into one mask per label `1..=max`.
pub fn load_label_png(path: &Path) -> Result<Vec<BinaryMask>> {
    let img = image::open(path)
        .map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })?
        .to_luma8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    let max = img.pixels().map(|p| p.0[0]).max().unwrap_or(0);
    Ok((1..=max)
        .map(|k| BinaryMask::from_fn(h, w, |r, c| img.get_pixel(c as u32, r as u32).0[0] == k))
        .collect())
}
