pub mod eval;
pub mod gen_gt;
pub mod histogram;
pub mod oracle;
pub mod refine;
pub mod stats;
pub mod synth;

use std::path::{Path, PathBuf};

use segfix_core::io::{load_manifest, DatasetManifest};
use segfix_core::LabelMap;

use crate::runner::{CliError, CliResult};

pub fn load_manifest_checked(path: &Path) -> CliResult<DatasetManifest> {
    load_manifest(path).map_err(CliError::from)
}

pub fn read_gt(manifest: &DatasetManifest, gt_path: &Path) -> segfix_core::Result<LabelMap> {
    segfix_core::io::read_label_png(gt_path, manifest.num_classes, manifest.ignore_id)
}

/// Prediction lookup: refined output first, bare id second.
pub fn prediction_path(pred_dir: &Path, id: &str) -> Option<PathBuf> {
    let refined = pred_dir.join(format!("{id}_refined.png"));
    if refined.exists() {
        return Some(refined);
    }
    let bare = pred_dir.join(format!("{id}.png"));
    bare.exists().then_some(bare)
}
