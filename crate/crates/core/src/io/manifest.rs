//! Dataset manifests: a JSON index of record ids and the files behind them.
//!
//! Loading validates the whole manifest up front and reports every violation
//! (duplicate ids, missing files) in one error rather than failing on the
//! first.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{ClassId, IGNORE_ID};
use crate::io::{read_bytes, write_atomic};

/// One dataset record; all paths are optional except the ground truth.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub id: String,
    pub gt_labels: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coarse_labels: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub directions: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offsets: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instances: Option<PathBuf>,
}

impl ManifestRecord {
    pub fn new(id: impl Into<String>, gt_labels: impl Into<PathBuf>) -> Self {
        ManifestRecord {
            id: id.into(),
            gt_labels: gt_labels.into(),
            coarse_labels: None,
            boundary: None,
            directions: None,
            offsets: None,
            instances: None,
        }
    }
}

fn default_schema() -> u32 {
    1
}

fn default_ignore() -> ClassId {
    IGNORE_ID
}

/// A validated dataset index. After [`load_manifest`], every path is
/// resolved against the manifest's directory and known to exist.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetManifest {
    #[serde(default = "default_schema")]
    pub schema: u32,
    pub num_classes: u16,
    #[serde(default = "default_ignore")]
    pub ignore_id: ClassId,
    pub records: Vec<ManifestRecord>,
}

fn resolve(base: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.join(path)
    }
}

/// Loads and validates a manifest, resolving relative paths against the
/// manifest's directory. Every violation is listed in the error.
pub fn load_manifest(path: &Path) -> Result<DatasetManifest> {
    let bytes = read_bytes(path)?;
    let mut manifest: DatasetManifest =
        serde_json::from_slice(&bytes).map_err(|e| Error::ManifestInvalid {
            path: path.to_path_buf(),
            violations: vec![format!("malformed JSON: {e}")],
        })?;

    let base = path.parent().unwrap_or_else(|| Path::new(".")).to_path_buf();
    let mut violations = Vec::new();
    if manifest.num_classes == 0 {
        violations.push("num_classes must be at least 1".to_string());
    }
    if manifest.ignore_id < manifest.num_classes {
        violations.push(format!(
            "ignore_id {} collides with the class range 0..{}",
            manifest.ignore_id, manifest.num_classes
        ));
    }

    let mut seen = BTreeSet::new();
    for record in &mut manifest.records {
        if !seen.insert(record.id.clone()) {
            violations.push(format!("duplicate record id {:?}", record.id));
        }
        let mut check = |field: &str, p: &mut PathBuf| {
            *p = resolve(&base, p);
            if !p.exists() {
                violations.push(format!(
                    "record {:?}: {field} file {} does not exist",
                    record.id,
                    p.display()
                ));
            }
        };
        check("gt_labels", &mut record.gt_labels);
        for (field, slot) in [
            ("coarse_labels", &mut record.coarse_labels),
            ("boundary", &mut record.boundary),
            ("directions", &mut record.directions),
            ("offsets", &mut record.offsets),
            ("instances", &mut record.instances),
        ] {
            if let Some(p) = slot.as_mut() {
                check(field, p);
            }
        }
    }

    if violations.is_empty() {
        Ok(manifest)
    } else {
        Err(Error::ManifestInvalid {
            path: path.to_path_buf(),
            violations,
        })
    }
}

/// Serializes a manifest as pretty-printed JSON (paths written as given).
pub fn save_manifest(manifest: &DatasetManifest, path: &Path) -> Result<()> {
    let json = serde_json::to_vec_pretty(manifest).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        source: e,
    })?;
    write_atomic(path, &json)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Grid, LabelMap};
    use crate::io::write_label_png;

    fn write_gt(dir: &Path, name: &str) -> PathBuf {
        let labels =
            LabelMap::with_default_ignore(Grid::from_raw(1, 2, vec![0u16, 1]).unwrap(), 2).unwrap();
        let path = dir.join(name);
        write_label_png(&labels, &path).unwrap();
        path
    }

    #[test]
    fn minimal_manifest_loads_and_resolves() {
        let dir = tempfile::tempdir().unwrap();
        write_gt(dir.path(), "img.png");
        let manifest_path = dir.path().join("manifest.json");
        std::fs::write(
            &manifest_path,
            r#"{"num_classes": 2, "records": [{"id": "a", "gt_labels": "img.png"}]}"#,
        )
        .unwrap();
        let manifest = load_manifest(&manifest_path).unwrap();
        assert_eq!(manifest.schema, 1);
        assert_eq!(manifest.ignore_id, IGNORE_ID);
        assert!(manifest.records[0].gt_labels.is_absolute() || manifest.records[0].gt_labels.exists());
    }

    #[test]
    fn duplicate_ids_and_missing_files_are_all_listed() {
        let dir = tempfile::tempdir().unwrap();
        write_gt(dir.path(), "img.png");
        let manifest_path = dir.path().join("manifest.json");
        std::fs::write(
            &manifest_path,
            r#"{
              "num_classes": 2,
              "records": [
                {"id": "a", "gt_labels": "img.png"},
                {"id": "a", "gt_labels": "img.png"},
                {"id": "b", "gt_labels": "missing.png", "offsets": "nope.npy"}
              ]
            }"#,
        )
        .unwrap();
        match load_manifest(&manifest_path) {
            Err(Error::ManifestInvalid { violations, .. }) => {
                assert_eq!(violations.len(), 3, "{violations:?}");
                assert!(violations[0].contains("duplicate"));
                assert!(violations[1].contains("missing.png"));
                assert!(violations[2].contains("nope.npy"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_json_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let manifest_path = dir.path().join("manifest.json");
        std::fs::write(&manifest_path, "{ not json").unwrap();
        match load_manifest(&manifest_path) {
            Err(Error::ManifestInvalid { violations, .. }) => {
                assert!(violations[0].contains("malformed JSON"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn roundtrip_through_save() {
        let dir = tempfile::tempdir().unwrap();
        write_gt(dir.path(), "img.png");
        let manifest = DatasetManifest {
            schema: 1,
            num_classes: 2,
            ignore_id: IGNORE_ID,
            records: vec![ManifestRecord::new("a", "img.png")],
        };
        let path = dir.path().join("m.json");
        save_manifest(&manifest, &path).unwrap();
        let back = load_manifest(&path).unwrap();
        assert_eq!(back.records.len(), 1);
        assert_eq!(back.records[0].id, "a");
    }
}
