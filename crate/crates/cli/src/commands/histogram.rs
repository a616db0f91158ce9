use segfix_core::{error_distance_histogram, ErrorHistogram};
use serde_json::json;

use crate::args::HistogramArgs;
use crate::commands::{load_manifest_checked, prediction_path, read_gt};
use crate::runner::{finish_with_failures, parallel_map, split_failures, usage, CliResult};

pub fn run(args: HistogramArgs) -> CliResult<()> {
    if args.bins.is_empty() {
        return Err(usage("--bins must not be empty"));
    }
    if args.bins.windows(2).any(|w| w[0] >= w[1]) {
        return Err(usage("--bins must be strictly increasing"));
    }
    let manifest = load_manifest_checked(&args.manifest)?;

    let outcomes = parallel_map(args.jobs, manifest.records.len(), |i| {
        let record = &manifest.records[i];
        histogram_record(&args, &manifest, record)
            .map_err(|e| format!("record {:?}: {e}", record.id))
    })?;
    let (per_image, failures) = split_failures(outcomes);

    let mut total = ErrorHistogram::empty(&args.bins)?;
    for (_, hist) in &per_image {
        total.merge(hist);
    }
    println!(
        "histogram: {} image(s), {} error pixels across {} bins",
        per_image.len(),
        total.total(),
        total.counts.len()
    );
    crate::runner::write_report(
        args.out.as_deref(),
        &json!({
            "schema": 1,
            "command": "histogram",
            "bin_edges": total.bin_edges,
            "counts": total.counts,
            "total_errors": total.total(),
            "per_image": per_image
                .iter()
                .map(|(id, h)| json!({ "id": id, "errors": h.total() }))
                .collect::<Vec<_>>(),
            "failures": failures,
        }),
    )?;
    finish_with_failures("histogram", failures)
}

fn histogram_record(
    args: &HistogramArgs,
    manifest: &segfix_core::io::DatasetManifest,
    record: &segfix_core::io::ManifestRecord,
) -> Result<(String, ErrorHistogram), String> {
    let gt = read_gt(manifest, &record.gt_labels).map_err(|e| e.to_string())?;
    let pred_path = prediction_path(&args.pred_dir, &record.id)
        .ok_or_else(|| format!("no prediction found in {}", args.pred_dir.display()))?;
    let pred = read_gt(manifest, &pred_path).map_err(|e| e.to_string())?;
    let hist = error_distance_histogram(&pred, &gt, &args.bins).map_err(|e| e.to_string())?;
    Ok((record.id.clone(), hist))
}
