//! CLI acceptance suite: full-resolution performance (criterion 8) and
//! byte-identical output under parallelism (criterion 9). The numbered
//! criteria 1-7 and 10 run in the core crate's acceptance suite.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

fn bin() -> std::process::Command {
    std::process::Command::new(env!("CARGO_BIN_EXE_segfix"))
}

fn run_ok(args: &[&str]) {
    let out = bin().args(args).output().expect("spawn segfix");
    assert!(
        out.status.success(),
        "segfix {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

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

fn pass(criterion: u32, detail: String) {
    println!("ACCEPTANCE {criterion} PASS: {detail}");
}

/// Criterion 8: `gen-gt` on one 2048x1024 map with 19 classes in under 2 s
/// single-worker; `refine` on the same size in under 0.2 s.
#[test]
fn criterion_8_full_resolution_performance() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    run_ok(&[
        "synth",
        "--seed",
        "80",
        "--size",
        "2048x1024",
        "--classes",
        "19",
        "--shapes",
        "60",
        "--min-extent",
        "24",
        "--count",
        "1",
        "--flip-prob",
        "0.5",
        "--band-width",
        "2",
        "--out-dir",
        data.to_str().unwrap(),
    ]);
    let manifest = data.join("manifest.json");
    let gt_dir = dir.path().join("gt");

    let start = Instant::now();
    run_ok(&[
        "gen-gt",
        "--manifest",
        manifest.to_str().unwrap(),
        "--out-dir",
        gt_dir.to_str().unwrap(),
        "--jobs",
        "1",
    ]);
    let gen_elapsed = start.elapsed();
    assert!(
        gen_elapsed.as_secs_f64() < 2.0,
        "gen-gt took {gen_elapsed:?}, budget 2 s"
    );

    let refined = dir.path().join("refined");
    let start = Instant::now();
    run_ok(&[
        "refine",
        "--manifest",
        manifest.to_str().unwrap(),
        "--offsets-dir",
        gt_dir.to_str().unwrap(),
        "--out-dir",
        refined.to_str().unwrap(),
        "--jobs",
        "1",
    ]);
    let refine_elapsed = start.elapsed();
    assert!(
        refine_elapsed.as_secs_f64() < 0.2,
        "refine took {refine_elapsed:?}, budget 0.2 s"
    );
    pass(
        8,
        format!("2048x1024/19-class gen-gt in {gen_elapsed:.3?} (< 2 s), refine in {refine_elapsed:.3?} (< 0.2 s)"),
    );
}

/// Criterion 9: every subcommand produces byte-identical outputs with
/// `--jobs 8` and `--jobs 1` on the synthetic acceptance set.
#[test]
fn criterion_9_parallel_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let mut compared_files = 0usize;

    // synth itself, then the manifest-driven commands on its output.
    let mut datasets = Vec::new();
    for jobs in ["1", "8"] {
        let root = dir.path().join(format!("jobs{jobs}"));
        let data = root.join("data");
        run_ok(&[
            "synth",
            "--seed",
            "90",
            "--size",
            "96x96",
            "--classes",
            "5",
            "--shapes",
            "6",
            "--count",
            "6",
            "--flip-prob",
            "0.5",
            "--band-width",
            "2",
            "--out-dir",
            data.to_str().unwrap(),
            "--out",
            root.join("synth.json").to_str().unwrap(),
            "--jobs",
            jobs,
        ]);
        let manifest = data.join("manifest.json");
        let gt = root.join("gt");
        run_ok(&[
            "gen-gt",
            "--manifest",
            manifest.to_str().unwrap(),
            "--out-dir",
            gt.to_str().unwrap(),
            "--out",
            root.join("gen-gt.json").to_str().unwrap(),
            "--jobs",
            jobs,
        ]);
        run_ok(&[
            "refine",
            "--manifest",
            manifest.to_str().unwrap(),
            "--offsets-dir",
            gt.to_str().unwrap(),
            "--out-dir",
            root.join("refined").to_str().unwrap(),
            "--out",
            root.join("refine.json").to_str().unwrap(),
            "--jobs",
            jobs,
        ]);
        run_ok(&[
            "eval",
            "--manifest",
            manifest.to_str().unwrap(),
            "--pred-dir",
            root.join("refined").to_str().unwrap(),
            "--out",
            root.join("eval.json").to_str().unwrap(),
            "--jobs",
            jobs,
        ]);
        run_ok(&[
            "histogram",
            "--manifest",
            manifest.to_str().unwrap(),
            "--pred-dir",
            root.join("refined").to_str().unwrap(),
            "--out",
            root.join("histogram.json").to_str().unwrap(),
            "--jobs",
            jobs,
        ]);
        run_ok(&[
            "stats",
            "--manifest",
            manifest.to_str().unwrap(),
            "--out",
            root.join("stats.json").to_str().unwrap(),
            "--jobs",
            jobs,
        ]);
        run_ok(&[
            "oracle-exp",
            "--seed",
            "91",
            "--size",
            "64x64",
            "--count",
            "8",
            "--out",
            root.join("oracle.json").to_str().unwrap(),
            "--jobs",
            jobs,
        ]);
        datasets.push(root);
    }

    let a = dir_bytes(&datasets[0]);
    let b = dir_bytes(&datasets[1]);
    assert_eq!(
        a.keys().collect::<Vec<_>>(),
        b.keys().collect::<Vec<_>>(),
        "both runs must produce the same file set"
    );
    for (path, bytes) in &a {
        assert_eq!(
            bytes,
            &b[path],
            "{} differs between --jobs 1 and --jobs 8",
            path.display()
        );
        compared_files += 1;
    }
    assert!(compared_files > 40, "expected a substantial file set");
    pass(
        9,
        format!("{compared_files} files byte-identical between --jobs 1 and --jobs 8 across all 7 subcommands"),
    );
}
