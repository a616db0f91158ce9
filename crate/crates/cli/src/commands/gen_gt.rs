use std::fs;
use std::path::Path;

use segfix_core::io::{read_instance_set, write_npy_bool, write_npy_offsets, write_npy_u8};
use segfix_core::{build_offset_field, gt_direction_pipeline, instance_gt_pipeline};
use serde_json::json;

use crate::args::{GenGtArgs, Mode};
use crate::commands::{load_manifest_checked, read_gt};
use crate::runner::{data, finish_with_failures, parallel_map, split_failures, usage, CliResult};

pub fn run(args: GenGtArgs) -> CliResult<()> {
    if !(args.gamma > 0.0) {
        return Err(usage(format!("--gamma must be positive, got {}", args.gamma)));
    }
    if ![4, 8, 16].contains(&args.num_dirs) {
        return Err(usage(format!(
            "--num-dirs must be 4, 8, or 16, got {}",
            args.num_dirs
        )));
    }
    let manifest = load_manifest_checked(&args.manifest)?;
    fs::create_dir_all(&args.out_dir)
        .map_err(|e| data(format!("cannot create {}: {e}", args.out_dir.display())))?;

    let outcomes = parallel_map(args.jobs, manifest.records.len(), |i| {
        let record = &manifest.records[i];
        process_record(&args, &manifest, record).map_err(|e| format!("record {:?}: {e}", record.id))
    })?;
    let (records, failures) = split_failures(outcomes);

    println!(
        "gen-gt: {}/{} records -> {}",
        records.len(),
        manifest.records.len(),
        args.out_dir.display()
    );
    crate::runner::write_report(
        args.out.as_deref(),
        &json!({
            "schema": 1,
            "command": "gen-gt",
            "gamma": args.gamma,
            "num_dirs": args.num_dirs,
            "mode": match args.mode { Mode::Semantic => "semantic", Mode::Instance => "instance" },
            "records": records,
            "failures": failures,
        }),
    )?;
    finish_with_failures("gen-gt", failures)
}

fn process_record(
    args: &GenGtArgs,
    manifest: &segfix_core::io::DatasetManifest,
    record: &segfix_core::io::ManifestRecord,
) -> Result<serde_json::Value, String> {
    let (boundary, directions) = match args.mode {
        Mode::Semantic => {
            let gt = read_gt(manifest, &record.gt_labels).map_err(|e| e.to_string())?;
            gt_direction_pipeline(&gt, args.gamma, args.num_dirs).map_err(|e| e.to_string())?
        }
        Mode::Instance => {
            let index = record
                .instances
                .as_deref()
                .ok_or("manifest record has no instances entry")?;
            let set = read_instance_set(index).map_err(|e| e.to_string())?;
            instance_gt_pipeline(&set, args.gamma, args.num_dirs).map_err(|e| e.to_string())?
        }
    };
    // Offsets are written unscaled; the refine step applies its own factor.
    let offsets =
        build_offset_field(&directions, &boundary, 1).map_err(|e| e.to_string())?;

    let write = |name: &str, f: &dyn Fn(&Path) -> segfix_core::Result<()>| -> Result<String, String> {
        let file = format!("{}_{name}.npy", record.id);
        f(&args.out_dir.join(&file)).map_err(|e| e.to_string())?;
        Ok(file)
    };
    let boundary_file = write("boundary", &|p| write_npy_bool(p, boundary.grid()))?;
    let dir_file = write("dir", &|p| write_npy_u8(p, directions.grid()))?;
    let offset_file = write("offset", &|p| write_npy_offsets(p, offsets.grid()))?;

    log::debug!("{}: {} boundary pixels", record.id, boundary.count());
    Ok(json!({
        "id": record.id,
        "boundary_pixels": boundary.count(),
        "files": [boundary_file, dir_file, offset_file],
    }))
}
