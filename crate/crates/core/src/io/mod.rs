//! Bit-exact serialization: label maps and masks as single-channel PNG,
//! float/integer/offset arrays in the NPY v1.0 container, dataset manifests
//! and instance indexes as JSON.
//!
//! Every writer goes through [`write_atomic`] (temp file + rename), so a
//! failed run never leaves a partially written output behind.

mod manifest;
mod npy;
mod png;

pub use manifest::{load_manifest, save_manifest, DatasetManifest, ManifestRecord};
pub use npy::{
    read_npy_bool, read_npy_f32, read_npy_offsets, read_npy_u8, write_npy_bool, write_npy_f32,
    write_npy_offsets, write_npy_u8,
};
pub use png::{
    read_instance_set, read_label_png, read_mask_png, write_instance_set, write_label_png,
    write_mask_png,
};

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Writes a file via a sibling temp file and rename, so concurrent readers
/// and interrupted runs never observe partial contents.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension(match path.extension().and_then(|e| e.to_str()) {
        Some(ext) => format!("{ext}.tmp"),
        None => "tmp".to_string(),
    });
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub(crate) fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}
