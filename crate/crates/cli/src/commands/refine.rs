use std::fs;

use segfix_core::io::{read_npy_bool, read_npy_offsets, write_label_png};
use segfix_core::{
    refine_iterative, refine_labels, BoundaryMask, Grid, OffsetField, RefinementConfig, Scheme,
};
use serde_json::json;

use crate::args::RefineArgs;
use crate::commands::{load_manifest_checked, read_gt};
use crate::runner::{data, finish_with_failures, parallel_map, split_failures, usage, CliResult};

pub fn run(args: RefineArgs) -> CliResult<()> {
    if args.scale < 1 {
        return Err(usage("--scale must be at least 1"));
    }
    if args.max_iterations < 1 {
        return Err(usage("--max-iterations must be at least 1"));
    }
    let manifest = load_manifest_checked(&args.manifest)?;
    fs::create_dir_all(&args.out_dir)
        .map_err(|e| data(format!("cannot create {}: {e}", args.out_dir.display())))?;

    let outcomes = parallel_map(args.jobs, manifest.records.len(), |i| {
        let record = &manifest.records[i];
        process_record(&args, &manifest, record).map_err(|e| format!("record {:?}: {e}", record.id))
    })?;
    let (records, failures) = split_failures(outcomes);

    let total_changed: u64 = records
        .iter()
        .filter_map(|r| r["changed_pixels"].as_u64())
        .sum();
    println!(
        "refine: {}/{} records, {} pixels changed -> {}",
        records.len(),
        manifest.records.len(),
        total_changed,
        args.out_dir.display()
    );
    crate::runner::write_report(
        args.out.as_deref(),
        &json!({
            "schema": 1,
            "command": "refine",
            "scheme": args.scheme.name(),
            "scale": args.scale,
            "max_iterations": args.max_iterations,
            "records": records,
            "failures": failures,
        }),
    )?;
    finish_with_failures("refine", failures)
}

fn process_record(
    args: &RefineArgs,
    manifest: &segfix_core::io::DatasetManifest,
    record: &segfix_core::io::ManifestRecord,
) -> Result<serde_json::Value, String> {
    let coarse_path = record
        .coarse_labels
        .as_deref()
        .ok_or("manifest record has no coarse_labels entry")?;
    let coarse = read_gt(manifest, coarse_path).map_err(|e| e.to_string())?;

    let offsets_path = args.offsets_dir.join(format!("{}_offset.npy", record.id));
    let offsets = read_npy_offsets(&offsets_path).map_err(|e| e.to_string())?;
    // Offset files carry the raw direction-table entries (scale 1).
    let field = OffsetField::new(offsets, 1).map_err(|e| e.to_string())?;

    let refined = match args.scheme.to_scheme() {
        Scheme::Rescale => {
            let scaled = field.rescaled(args.scale).map_err(|e| e.to_string())?;
            refine_labels(&coarse, &scaled).map_err(|e| e.to_string())?
        }
        Scheme::Iterative => {
            let boundary_path = args.offsets_dir.join(format!("{}_boundary.npy", record.id));
            let boundary = if boundary_path.exists() {
                BoundaryMask::from_parts(
                    read_npy_bool(&boundary_path).map_err(|e| e.to_string())?,
                    0.0,
                )
            } else {
                // Offset fields are zero exactly off the boundary band.
                let derived = Grid::from_fn(field.height(), field.width(), |r, c| {
                    !field.at(r, c).is_zero()
                })
                .map_err(|e| e.to_string())?;
                BoundaryMask::from_parts(derived, 0.0)
            };
            let cfg = RefinementConfig {
                scheme: Scheme::Iterative,
                scale: args.scale,
                max_iterations: args.max_iterations,
            };
            refine_iterative(&coarse, &field, &boundary, &cfg).map_err(|e| e.to_string())?
        }
    };

    let changed = refined
        .grid()
        .data()
        .iter()
        .zip(coarse.grid().data())
        .filter(|(a, b)| a != b)
        .count() as u64;
    let out_name = format!("{}_refined.png", record.id);
    write_label_png(&refined, &args.out_dir.join(&out_name)).map_err(|e| e.to_string())?;

    Ok(json!({
        "id": record.id,
        "changed_pixels": changed,
        "output": out_name,
    }))
}
