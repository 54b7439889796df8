use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use npyz::{NpyFile, Order};
use serde::{Deserialize, Serialize};

use super::write_atomic;
use crate::error::{Error, Result};

/// Per-patch feature vectors on a `rows x cols` grid, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    rows: usize,
    cols: usize,
    dim: usize,
    data: Vec<f64>,
    patch_size: usize,
    image_height: usize,
    image_width: usize,
}

/// Geometry stored next to each `.npy` file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sidecar {
    pub patch_size: usize,
    pub image_height: usize,
    pub image_width: usize,
}

impl FeatureMap {
    pub fn new(
        rows: usize,
        cols: usize,
        dim: usize,
        data: Vec<f64>,
        patch_size: usize,
        image_height: usize,
        image_width: usize,
    ) -> Result<Self> {
        if dim == 0 || rows == 0 || cols == 0 {
            return Err(Error::InvalidFeatureMap(format!(
                "empty grid {rows}x{cols}x{dim}"
            )));
        }
        if data.len() != rows * cols * dim {
            return Err(Error::InvalidFeatureMap(format!(
                "data has {} values, expected {rows}x{cols}x{dim}",
                data.len()
            )));
        }
        if patch_size == 0 {
            return Err(Error::InvalidFeatureMap("patch_size is 0".into()));
        }
        if rows != image_height.div_ceil(patch_size) || cols != image_width.div_ceil(patch_size) {
            return Err(Error::InvalidFeatureMap(format!(
                "grid {rows}x{cols} does not cover a {image_height}x{image_width} image with patch {patch_size}"
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteFeature {
                patch: i / dim,
                component: i % dim,
            });
        }
        Ok(Self {
            rows,
            cols,
            dim,
            data,
            patch_size,
            image_height,
            image_width,
        })
    }

    /// Convenience constructor for a grid with one pixel per patch.
    pub fn from_grid(rows: usize, cols: usize, dim: usize, data: Vec<f64>) -> Result<Self> {
        Self::new(rows, cols, dim, data, 1, rows, cols)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn patch_size(&self) -> usize {
        self.patch_size
    }

    pub fn image_height(&self) -> usize {
        self.image_height
    }

    pub fn image_width(&self) -> usize {
        self.image_width
    }

    pub fn num_patches(&self) -> usize {
        self.rows * self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn feature(&self, patch: usize) -> &[f64] {
        &self.data[patch * self.dim..(patch + 1) * self.dim]
    }
}

pub fn sidecar_path(npy: &Path) -> PathBuf {
    npy.with_extension("json")
}

pub fn load_sidecar(path: &Path) -> Result<Sidecar> {
    if !path.exists() {
        return Err(Error::MissingSidecar(path.to_path_buf()));
    }
    let text = std::fs::read_to_string(path).map_err(|source| Error::Read {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}

/// Loads a `(rows, cols, dim)` float tensor plus its JSON sidecar.
///
/// `f4` data is widened to `f64`; `f8` is kept bit-for-bit.
pub fn load_feature_map(path: &Path) -> Result<FeatureMap> {
    let sidecar = load_sidecar(&sidecar_path(path))?;
    let file = File::open(path).map_err(|source| Error::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let npy = NpyFile::new(BufReader::new(file))
        .map_err(|e| Error::MalformedHeader(format!("{}: {e}", path.display())))?;

    let shape = npy.shape().to_vec();
    if shape.len() != 3 {
        return Err(Error::BadRank(shape));
    }
    if npy.order() != Order::C {
        return Err(Error::MalformedHeader(format!(
            "{}: fortran-ordered data is not supported",
            path.display()
        )));
    }
    let read_err = |e: std::io::Error| Error::Read {
        path: path.to_path_buf(),
        source: e,
    };
    let data: Vec<f64> = match npy.try_data::<f64>() {
        Ok(reader) => reader.collect::<std::io::Result<_>>().map_err(read_err)?,
        Err(npy) => match npy.try_data::<f32>() {
            Ok(reader) => reader
                .map(|v| v.map(f64::from))
                .collect::<std::io::Result<_>>()
                .map_err(read_err)?,
            Err(npy) => {
                return Err(Error::MalformedHeader(format!(
                    "{}: unsupported dtype {}",
                    path.display(),
                    npy.dtype().descr()
                )))
            }
        },
    };
    FeatureMap::new(
        shape[0] as usize,
        shape[1] as usize,
        shape[2] as usize,
        data,
        sidecar.patch_size,
        sidecar.image_height,
        sidecar.image_width,
    )
}

/// Writes `fm` as a little-endian `f8` tensor plus its sidecar, each atomically.
pub fn save_feature_map(fm: &FeatureMap, path: &Path) -> Result<()> {
    use npyz::WriterBuilder;

    let write_err = |source: std::io::Error| Error::Write {
        path: path.to_path_buf(),
        source,
    };
    let mut buf = Vec::new();
    let mut writer = npyz::WriteOptions::new()
        .default_dtype()
        .shape(&[fm.rows as u64, fm.cols as u64, fm.dim as u64])
        .writer(&mut buf)
        .begin_nd()
        .map_err(write_err)?;
    writer.extend(fm.data.iter().copied()).map_err(write_err)?;
    writer.finish().map_err(write_err)?;
    write_atomic(path, &buf)?;

    let sidecar = Sidecar {
        patch_size: fm.patch_size,
        image_height: fm.image_height,
        image_width: fm.image_width,
    };
    let text = serde_json::to_string(&sidecar).expect("sidecar serializes");
    write_atomic(&sidecar_path(path), text.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_nan() {
        let mut data = vec![1.0; 12];
        data[7] = f64::NAN;
        let err = FeatureMap::from_grid(2, 2, 3, data).unwrap_err();
        assert!(err.to_string().contains("non-finite feature"));
    }

    #[test]
    fn rejects_grid_that_does_not_cover_image() {
        let err = FeatureMap::new(2, 2, 1, vec![1.0; 4], 8, 24, 16).unwrap_err();
        assert!(matches!(err, Error::InvalidFeatureMap(_)));
        // ragged images round up
        assert!(FeatureMap::new(2, 2, 1, vec![1.0; 4], 8, 15, 9).is_ok());
    }
}
