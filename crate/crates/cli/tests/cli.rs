//! End-to-end tests of the `segfix` binary: subcommand behavior, exit-code
//! contracts, and determinism.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use segfix_core::io::{load_manifest, read_label_png, read_npy_offsets, write_npy_offsets};
use segfix_core::{apply_offset, Grid, Offset, PixelCoord, IGNORE_ID};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_segfix"))
}

fn run_ok(args: &[&str]) -> Output {
    let out = bin().args(args).output().expect("spawn segfix");
    assert!(
        out.status.success(),
        "segfix {args:?} failed ({:?}):\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn run_code(args: &[&str]) -> (i32, String) {
    let out = bin().args(args).output().expect("spawn segfix");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

/// All files under a directory, keyed by relative path.
fn dir_bytes(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).unwrap().to_path_buf();
                out.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    out
}

fn synth_dataset(dir: &Path, seed: u64, count: usize, flip: f64) -> PathBuf {
    let data = dir.join("data");
    run_ok(&[
        "synth",
        "--seed",
        &seed.to_string(),
        "--size",
        "72x72",
        "--classes",
        "4",
        "--shapes",
        "5",
        "--count",
        &count.to_string(),
        "--flip-prob",
        &flip.to_string(),
        "--band-width",
        "2",
        "--out-dir",
        data.to_str().unwrap(),
    ]);
    data.join("manifest.json")
}

#[test]
fn synth_is_deterministic_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        run_ok(&[
            "synth",
            "--seed",
            "7",
            "--size",
            "64x64",
            "--count",
            "3",
            "--flip-prob",
            "0.4",
            "--out-dir",
            out.to_str().unwrap(),
        ]);
    }
    assert_eq!(dir_bytes(&a), dir_bytes(&b));
}

#[test]
fn gen_gt_writes_three_files_per_record_and_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = synth_dataset(dir.path(), 1, 2, 0.0);
    let gt_dir = dir.path().join("gt");
    run_ok(&[
        "gen-gt",
        "--manifest",
        manifest.to_str().unwrap(),
        "--out-dir",
        gt_dir.to_str().unwrap(),
    ]);
    let first = dir_bytes(&gt_dir);
    assert_eq!(first.len(), 6, "2 records x 3 files");

    run_ok(&[
        "gen-gt",
        "--manifest",
        manifest.to_str().unwrap(),
        "--out-dir",
        gt_dir.to_str().unwrap(),
    ]);
    assert_eq!(dir_bytes(&gt_dir), first, "rerun must overwrite identically");
}

#[test]
fn gen_gt_instance_mode_without_instances_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = synth_dataset(dir.path(), 2, 1, 0.0);
    let (code, stderr) = run_code(&[
        "gen-gt",
        "--manifest",
        manifest.to_str().unwrap(),
        "--out-dir",
        dir.path().join("gt").to_str().unwrap(),
        "--mode",
        "instance",
    ]);
    assert_eq!(code, 2, "stderr: {stderr}");
    assert!(stderr.contains("instances"));
}

#[test]
fn gen_gt_rejects_bad_flags_with_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = synth_dataset(dir.path(), 3, 1, 0.0);
    let out = dir.path().join("gt");
    let (code, _) = run_code(&[
        "gen-gt",
        "--manifest",
        manifest.to_str().unwrap(),
        "--out-dir",
        out.to_str().unwrap(),
        "--num-dirs",
        "5",
    ]);
    assert_eq!(code, 1);
    let (code, _) = run_code(&[
        "gen-gt",
        "--manifest",
        manifest.to_str().unwrap(),
        "--out-dir",
        out.to_str().unwrap(),
        "--gamma",
        "0",
    ]);
    assert_eq!(code, 1);
    let (code, _) = run_code(&["gen-gt", "--manifest", manifest.to_str().unwrap()]);
    assert_eq!(code, 1, "missing required --out-dir");
    let (code, _) = run_code(&[
        "gen-gt",
        "--manifest",
        manifest.to_str().unwrap(),
        "--out-dir",
        out.to_str().unwrap(),
        "--no-such-flag",
    ]);
    assert_eq!(code, 1, "unknown flags are rejected");
}

#[test]
fn refine_with_zero_offsets_is_identity() {
    let dir = tempfile::tempdir().unwrap();
    let manifest_path = synth_dataset(dir.path(), 4, 1, 0.5);
    let manifest = load_manifest(&manifest_path).unwrap();
    let record = &manifest.records[0];

    // Hand-written all-zero offset field.
    let offsets_dir = dir.path().join("offsets");
    std::fs::create_dir_all(&offsets_dir).unwrap();
    let zeros = Grid::filled(72, 72, Offset::ZERO).unwrap();
    write_npy_offsets(
        &offsets_dir.join(format!("{}_offset.npy", record.id)),
        &zeros,
    )
    .unwrap();

    let refined_dir = dir.path().join("refined");
    run_ok(&[
        "refine",
        "--manifest",
        manifest_path.to_str().unwrap(),
        "--offsets-dir",
        offsets_dir.to_str().unwrap(),
        "--out-dir",
        refined_dir.to_str().unwrap(),
    ]);

    let coarse = std::fs::read(record.coarse_labels.as_ref().unwrap()).unwrap();
    let refined = std::fs::read(refined_dir.join(format!("{}_refined.png", record.id))).unwrap();
    assert_eq!(coarse, refined, "zero offsets must copy the coarse map");
}

#[test]
fn refine_changed_pixel_count_matches_recount() {
    let dir = tempfile::tempdir().unwrap();
    let manifest_path = synth_dataset(dir.path(), 5, 2, 0.5);
    let manifest = load_manifest(&manifest_path).unwrap();
    let gt_dir = dir.path().join("gt");
    run_ok(&[
        "gen-gt",
        "--manifest",
        manifest_path.to_str().unwrap(),
        "--out-dir",
        gt_dir.to_str().unwrap(),
    ]);
    let refined_dir = dir.path().join("refined");
    let report_path = dir.path().join("refine.json");
    run_ok(&[
        "refine",
        "--manifest",
        manifest_path.to_str().unwrap(),
        "--offsets-dir",
        gt_dir.to_str().unwrap(),
        "--out-dir",
        refined_dir.to_str().unwrap(),
        "--scale",
        "2",
        "--out",
        report_path.to_str().unwrap(),
    ]);
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(&report_path).unwrap()).unwrap();

    for (i, record) in manifest.records.iter().enumerate() {
        let coarse = read_label_png(
            record.coarse_labels.as_ref().unwrap(),
            manifest.num_classes,
            manifest.ignore_id,
        )
        .unwrap();
        let offsets =
            read_npy_offsets(&gt_dir.join(format!("{}_offset.npy", record.id))).unwrap();
        // Exhaustive recount: nonzero-offset pixels whose scaled target
        // carries a different label.
        let mut expected = 0u64;
        for r in 0..coarse.height() {
            for c in 0..coarse.width() {
                let o = offsets.at(r, c);
                if o.is_zero() {
                    continue;
                }
                let t = apply_offset(
                    PixelCoord { row: r, col: c },
                    o.scaled(2),
                    coarse.height(),
                    coarse.width(),
                );
                if coarse.label(t.row, t.col) != coarse.label(r, c) {
                    expected += 1;
                }
            }
        }
        let got = report["records"][i]["changed_pixels"].as_u64().unwrap();
        assert_eq!(got, expected, "record {}", record.id);
    }
}

#[test]
fn refine_missing_offsets_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = synth_dataset(dir.path(), 6, 1, 0.5);
    let empty = dir.path().join("empty");
    std::fs::create_dir_all(&empty).unwrap();
    let (code, stderr) = run_code(&[
        "refine",
        "--manifest",
        manifest.to_str().unwrap(),
        "--offsets-dir",
        empty.to_str().unwrap(),
        "--out-dir",
        dir.path().join("refined").to_str().unwrap(),
    ]);
    assert_eq!(code, 2, "stderr: {stderr}");
    assert!(stderr.contains("synth_0000"));
}

#[test]
fn eval_on_perfect_predictions_scores_one() {
    let dir = tempfile::tempdir().unwrap();
    let manifest_path = synth_dataset(dir.path(), 7, 2, 0.0);
    let manifest = load_manifest(&manifest_path).unwrap();

    // Predictions = the ground truth itself.
    let preds = dir.path().join("preds");
    std::fs::create_dir_all(&preds).unwrap();
    for record in &manifest.records {
        std::fs::copy(&record.gt_labels, preds.join(format!("{}.png", record.id))).unwrap();
    }
    let report_path = dir.path().join("eval.json");
    run_ok(&[
        "eval",
        "--manifest",
        manifest_path.to_str().unwrap(),
        "--pred-dir",
        preds.to_str().unwrap(),
        "--out",
        report_path.to_str().unwrap(),
    ]);
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(&report_path).unwrap()).unwrap();
    assert_eq!(report["miou"]["mean"], 1.0);
    for theta in ["0.0003", "0.0006", "0.0009"] {
        assert_eq!(report["boundary_fscore"][theta]["mean"], 1.0, "{theta}");
    }
}

#[test]
fn eval_empty_manifest_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dir.path().join("manifest.json");
    std::fs::write(&manifest, r#"{"num_classes": 2, "records": []}"#).unwrap();
    let (code, stderr) = run_code(&[
        "eval",
        "--manifest",
        manifest.to_str().unwrap(),
        "--pred-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code, 1, "stderr: {stderr}");
}

#[test]
fn eval_missing_predictions_exit_2_listing_them() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = synth_dataset(dir.path(), 8, 2, 0.0);
    let empty = dir.path().join("nopreds");
    std::fs::create_dir_all(&empty).unwrap();
    let (code, stderr) = run_code(&[
        "eval",
        "--manifest",
        manifest.to_str().unwrap(),
        "--pred-dir",
        empty.to_str().unwrap(),
    ]);
    assert_eq!(code, 2);
    assert!(stderr.contains("synth_0000") && stderr.contains("synth_0001"));
}

#[test]
fn refinement_improves_eval_scores() {
    let dir = tempfile::tempdir().unwrap();
    let manifest_path = synth_dataset(dir.path(), 9, 4, 0.5);
    let manifest = load_manifest(&manifest_path).unwrap();
    let gt_dir = dir.path().join("gt");
    run_ok(&[
        "gen-gt",
        "--manifest",
        manifest_path.to_str().unwrap(),
        "--out-dir",
        gt_dir.to_str().unwrap(),
    ]);
    let refined_dir = dir.path().join("refined");
    run_ok(&[
        "refine",
        "--manifest",
        manifest_path.to_str().unwrap(),
        "--offsets-dir",
        gt_dir.to_str().unwrap(),
        "--out-dir",
        refined_dir.to_str().unwrap(),
    ]);

    // Coarse predictions under the plain-id name.
    let coarse_preds = dir.path().join("coarse");
    std::fs::create_dir_all(&coarse_preds).unwrap();
    for record in &manifest.records {
        std::fs::copy(
            record.coarse_labels.as_ref().unwrap(),
            coarse_preds.join(format!("{}.png", record.id)),
        )
        .unwrap();
    }

    let score = |pred_dir: &Path| -> (f64, f64) {
        let report_path = dir.path().join("score.json");
        run_ok(&[
            "eval",
            "--manifest",
            manifest_path.to_str().unwrap(),
            "--pred-dir",
            pred_dir.to_str().unwrap(),
            "--out",
            report_path.to_str().unwrap(),
        ]);
        let report: serde_json::Value =
            serde_json::from_slice(&std::fs::read(&report_path).unwrap()).unwrap();
        (
            report["miou"]["mean"].as_f64().unwrap(),
            report["boundary_fscore"]["0.0003"]["mean"].as_f64().unwrap(),
        )
    };
    let (miou_before, bf_before) = score(&coarse_preds);
    let (miou_after, bf_after) = score(&refined_dir);
    assert!(
        miou_after > miou_before,
        "mIoU {miou_before} -> {miou_after}"
    );
    assert!(bf_after > bf_before, "BF {bf_before} -> {bf_after}");
}

#[test]
fn histogram_perfect_predictions_are_all_zero() {
    let dir = tempfile::tempdir().unwrap();
    let manifest_path = synth_dataset(dir.path(), 10, 1, 0.0);
    let manifest = load_manifest(&manifest_path).unwrap();
    let preds = dir.path().join("preds");
    std::fs::create_dir_all(&preds).unwrap();
    for record in &manifest.records {
        std::fs::copy(&record.gt_labels, preds.join(format!("{}.png", record.id))).unwrap();
    }
    let report_path = dir.path().join("hist.json");
    run_ok(&[
        "histogram",
        "--manifest",
        manifest_path.to_str().unwrap(),
        "--pred-dir",
        preds.to_str().unwrap(),
        "--out",
        report_path.to_str().unwrap(),
    ]);
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(&report_path).unwrap()).unwrap();
    assert_eq!(report["total_errors"], 0);
}

#[test]
fn histogram_band_corruption_stays_below_3px() {
    let dir = tempfile::tempdir().unwrap();
    let manifest_path = synth_dataset(dir.path(), 11, 3, 0.5);
    let manifest = load_manifest(&manifest_path).unwrap();
    let preds = dir.path().join("preds");
    std::fs::create_dir_all(&preds).unwrap();
    for record in &manifest.records {
        std::fs::copy(
            record.coarse_labels.as_ref().unwrap(),
            preds.join(format!("{}.png", record.id)),
        )
        .unwrap();
    }
    let report_path = dir.path().join("hist.json");
    run_ok(&[
        "histogram",
        "--manifest",
        manifest_path.to_str().unwrap(),
        "--pred-dir",
        preds.to_str().unwrap(),
        "--bins",
        "1,2,3,4,5,10,20",
        "--out",
        report_path.to_str().unwrap(),
    ]);
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(&report_path).unwrap()).unwrap();
    let counts: Vec<u64> = report["counts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_u64().unwrap())
        .collect();
    let total: u64 = counts.iter().sum();
    assert!(total > 0, "corruption must produce errors");
    // Band width 2: every error sits at GT distance < 2, i.e. below 3 px.
    // Bins: (<1), [1,2), [2,3), [3,4), ...
    let below_3: u64 = counts[..3].iter().sum();
    assert_eq!(below_3, total, "counts: {counts:?}");
}

#[test]
fn histogram_unsorted_bins_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = synth_dataset(dir.path(), 12, 1, 0.0);
    let (code, _) = run_code(&[
        "histogram",
        "--manifest",
        manifest.to_str().unwrap(),
        "--pred-dir",
        dir.path().to_str().unwrap(),
        "--bins",
        "3,1,2",
    ]);
    assert_eq!(code, 1);
}

#[test]
fn stats_proportions_are_monotone_in_width() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = synth_dataset(dir.path(), 13, 3, 0.0);
    let report_path = dir.path().join("stats.json");
    run_ok(&[
        "stats",
        "--manifest",
        manifest.to_str().unwrap(),
        "--widths",
        "1,2,3,4,5",
        "--out",
        report_path.to_str().unwrap(),
    ]);
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(&report_path).unwrap()).unwrap();
    for (class, fractions) in report["per_class"].as_object().unwrap() {
        let values: Vec<f64> = fractions
            .as_array()
            .unwrap()
            .iter()
            .map(|v| v.as_f64().unwrap())
            .collect();
        for pair in values.windows(2) {
            assert!(pair[0] <= pair[1], "class {class}: {values:?}");
        }
    }
}

#[test]
fn oracle_exp_reports_positive_deltas() {
    let dir = tempfile::tempdir().unwrap();
    let report_path = dir.path().join("oracle.json");
    let out = run_ok(&[
        "oracle-exp",
        "--seed",
        "21",
        "--size",
        "64x64",
        "--count",
        "4",
        "--out",
        report_path.to_str().unwrap(),
    ]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("improved 4/4"), "stdout: {stdout}");
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(&report_path).unwrap()).unwrap();
    assert!(report["miou_delta"].as_f64().unwrap() > 0.0);
    assert!(report["bf_delta"].as_f64().unwrap() > 0.0);
    assert_eq!(report["improved_images"], 4);
    assert_eq!(report["schema"], 1);
}

#[test]
fn logs_go_to_stderr_only() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = synth_dataset(dir.path(), 14, 1, 0.0);
    let report = dir.path().join("r.json");
    let out = bin()
        .args([
            "stats",
            "--manifest",
            manifest.to_str().unwrap(),
            "--out",
            report.to_str().unwrap(),
        ])
        .env("SEGFIX_LOG", "info")
        .output()
        .unwrap();
    assert!(out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stderr.contains("report written"), "stderr: {stderr}");
    assert!(!stdout.contains("report written"), "stdout: {stdout}");
}

#[test]
fn instance_mode_gen_gt_works_with_instance_index() {
    use segfix_core::io::write_instance_set;
    use segfix_core::{Instance, InstanceSet};

    let dir = tempfile::tempdir().unwrap();
    let manifest_path = synth_dataset(dir.path(), 15, 1, 0.0);
    // Attach an instance index to the record.
    let mut manifest = load_manifest(&manifest_path).unwrap();
    let set = InstanceSet::new(
        72,
        72,
        vec![Instance {
            category: 1,
            mask: Grid::from_fn(72, 72, |r, c| {
                let dr = r as f64 - 36.0;
                let dc = c as f64 - 36.0;
                dr * dr + dc * dc <= 200.0
            })
            .unwrap(),
        }],
    )
    .unwrap();
    let index = dir.path().join("data").join("synth_0000_instances.json");
    write_instance_set(&set, &index).unwrap();
    manifest.records[0].instances = Some(index);
    segfix_core::io::save_manifest(&manifest, &manifest_path).unwrap();

    let gt_dir = dir.path().join("gt_inst");
    run_ok(&[
        "gen-gt",
        "--manifest",
        manifest_path.to_str().unwrap(),
        "--out-dir",
        gt_dir.to_str().unwrap(),
        "--mode",
        "instance",
    ]);
    let offsets = read_npy_offsets(&gt_dir.join("synth_0000_offset.npy")).unwrap();
    assert!(offsets.data().iter().any(|o| !o.is_zero()));
}

#[test]
fn manifest_ignore_pixels_survive_the_loop() {
    // A manifest written by hand with an ignore region: gen-gt and refine
    // must run and keep ignore pixels out of the metrics.
    let dir = tempfile::tempdir().unwrap();
    let labels = segfix_core::LabelMap::with_default_ignore(
        Grid::from_fn(48, 48, |r, c| {
            if r < 8 {
                IGNORE_ID
            } else if c < 24 {
                0
            } else {
                1
            }
        })
        .unwrap(),
        2,
    )
    .unwrap();
    segfix_core::io::write_label_png(&labels, &dir.path().join("img.png")).unwrap();
    let manifest_path = dir.path().join("manifest.json");
    std::fs::write(
        &manifest_path,
        r#"{"num_classes": 2, "records": [
            {"id": "img", "gt_labels": "img.png", "coarse_labels": "img.png"}
        ]}"#,
    )
    .unwrap();
    let gt_dir = dir.path().join("gt");
    run_ok(&[
        "gen-gt",
        "--manifest",
        manifest_path.to_str().unwrap(),
        "--out-dir",
        gt_dir.to_str().unwrap(),
    ]);
    let preds = dir.path().join("preds");
    std::fs::create_dir_all(&preds).unwrap();
    std::fs::copy(dir.path().join("img.png"), preds.join("img.png")).unwrap();
    let report_path = dir.path().join("eval.json");
    run_ok(&[
        "eval",
        "--manifest",
        manifest_path.to_str().unwrap(),
        "--pred-dir",
        preds.to_str().unwrap(),
        "--out",
        report_path.to_str().unwrap(),
    ]);
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(&report_path).unwrap()).unwrap();
    assert_eq!(report["miou"]["mean"], 1.0);
}
