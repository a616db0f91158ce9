use std::fs;
use std::path::PathBuf;

use segfix_core::io::{save_manifest, write_label_png, DatasetManifest, ManifestRecord};
use segfix_core::{
    corrupt_boundary, generate_labels, mix_seed, CorruptionConfig, SynthConfig, IGNORE_ID,
};
use serde_json::json;

use crate::args::{parse_size, SynthArgs};
use crate::runner::{data, finish_with_failures, parallel_map, split_failures, usage, CliResult};

pub fn run(args: SynthArgs) -> CliResult<()> {
    let (height, width) = parse_size(&args.size).map_err(usage)?;
    if !(0.0..=1.0).contains(&args.flip_prob) {
        return Err(usage("--flip-prob must be in [0, 1]"));
    }
    fs::create_dir_all(&args.out_dir)
        .map_err(|e| data(format!("cannot create {}: {e}", args.out_dir.display())))?;
    let corrupt_base = args.corrupt_seed.unwrap_or_else(|| mix_seed(args.seed, u64::MAX));

    let outcomes = parallel_map(args.jobs, args.count, |i| {
        generate_one(&args, height, width, corrupt_base, i)
            .map_err(|e| format!("image {i}: {e}"))
    })?;
    let (records, failures) = split_failures(outcomes);

    let manifest = DatasetManifest {
        schema: 1,
        num_classes: args.classes,
        ignore_id: IGNORE_ID,
        records: records.clone(),
    };
    let manifest_path = args.out_dir.join("manifest.json");
    save_manifest(&manifest, &manifest_path)?;

    println!(
        "synth: {} image(s) ({}x{}, {} classes) -> {}",
        records.len(),
        width,
        height,
        args.classes,
        manifest_path.display()
    );
    crate::runner::write_report(
        args.out.as_deref(),
        &json!({
            "schema": 1,
            "command": "synth",
            "seed": args.seed,
            "height": height,
            "width": width,
            "classes": args.classes,
            "shapes": args.shapes,
            "min_extent": args.min_extent,
            "count": args.count,
            "band_width": args.band_width,
            "flip_prob": args.flip_prob,
            "manifest": "manifest.json",
            "ids": records.iter().map(|r| r.id.clone()).collect::<Vec<_>>(),
            "failures": failures,
        }),
    )?;
    finish_with_failures("synth", failures)
}

fn generate_one(
    args: &SynthArgs,
    height: usize,
    width: usize,
    corrupt_base: u64,
    index: usize,
) -> Result<ManifestRecord, String> {
    let id = format!("synth_{index:04}");
    let cfg = SynthConfig {
        seed: mix_seed(args.seed, index as u64),
        height,
        width,
        num_classes: args.classes,
        num_shapes: args.shapes,
        min_shape_extent: args.min_extent,
    };
    let gt = generate_labels(&cfg).map_err(|e| e.to_string())?;
    let gt_name = format!("{id}.png");
    write_label_png(&gt, &args.out_dir.join(&gt_name)).map_err(|e| e.to_string())?;

    let mut record = ManifestRecord::new(id, gt_name);
    if args.flip_prob > 0.0 {
        let coarse = corrupt_boundary(
            &gt,
            &CorruptionConfig {
                seed: mix_seed(corrupt_base, index as u64),
                band_width: args.band_width,
                flip_probability: args.flip_prob,
            },
        )
        .map_err(|e| e.to_string())?;
        let coarse_name = format!("{}_coarse.png", record.id);
        write_label_png(&coarse, &args.out_dir.join(&coarse_name)).map_err(|e| e.to_string())?;
        record.coarse_labels = Some(PathBuf::from(coarse_name));
    }
    Ok(record)
}
