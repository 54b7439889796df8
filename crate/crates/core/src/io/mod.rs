//! File formats: NPY feature tensors, RLE masks, JSON manifests and PNG images.

mod features;
mod manifest;
mod png;
mod rle;

use std::io::Write;
use std::path::Path;

pub use features::{
    load_feature_map, load_sidecar, save_feature_map, sidecar_path, FeatureMap, Sidecar,
};
pub use manifest::{
    load_video_manifest, manifest_to_string, parse_manifest, save_predictions,
};
pub use png::{load_label_png, load_rgb, save_label_png, save_rgb};
pub use rle::{rle_decode, rle_encode, RleMask};

use crate::error::{Error, Result};

/// Writes `bytes` to a temporary sibling of `path` and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let write_err = |source: std::io::Error| Error::Write {
        path: path.to_path_buf(),
        source,
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp"));
    let mut f = std::fs::File::create(&tmp).map_err(write_err)?;
    f.write_all(bytes).map_err(write_err)?;
    f.sync_all().map_err(write_err)?;
    drop(f);
    std::fs::rename(&tmp, path).map_err(write_err)
}
