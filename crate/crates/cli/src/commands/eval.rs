use std::collections::BTreeMap;

use segfix_core::{
    boundary_fscore_counts, miou_from_confusion, ClassId, ConfusionMatrix, ContourMatchCounts,
};
use serde_json::json;

use crate::args::{BfAverage, EvalArgs, MetricKind};
use crate::commands::{load_manifest_checked, prediction_path, read_gt};
use crate::runner::{finish_with_failures, parallel_map, split_failures, usage, CliResult};

struct ImageEval {
    id: String,
    confusion: Option<ConfusionMatrix>,
    /// Per threshold: per-class contour match counts.
    bf: Vec<BTreeMap<ClassId, ContourMatchCounts>>,
}

pub fn run(args: EvalArgs) -> CliResult<()> {
    if args.metrics.is_empty() {
        return Err(usage("--metrics must name at least one metric"));
    }
    if args.metrics.contains(&MetricKind::Bf) {
        if args.bf_thresholds.is_empty() {
            return Err(usage("--bf-thresholds must not be empty"));
        }
        if let Some(bad) = args.bf_thresholds.iter().find(|&&t| !(t > 0.0)) {
            return Err(usage(format!("--bf-thresholds must be positive, got {bad}")));
        }
    }
    let manifest = load_manifest_checked(&args.manifest)?;
    if manifest.records.is_empty() {
        return Err(usage("manifest has no records to evaluate"));
    }

    let want_miou = args.metrics.contains(&MetricKind::Miou);
    let want_bf = args.metrics.contains(&MetricKind::Bf);

    let outcomes = parallel_map(args.jobs, manifest.records.len(), |i| {
        let record = &manifest.records[i];
        evaluate_record(&args, &manifest, record, want_miou, want_bf)
            .map_err(|e| format!("record {:?}: {e}", record.id))
    })?;
    let (images, failures) = split_failures(outcomes);

    let mut report = json!({
        "schema": 1,
        "command": "eval",
        "num_images": images.len(),
        "failures": failures,
    });

    let mut per_image = Vec::with_capacity(images.len());
    for img in &images {
        let mut entry = json!({ "id": img.id });
        if let Some(cm) = &img.confusion {
            entry["miou"] = json!(miou_from_confusion(cm).mean);
        }
        if want_bf {
            let mut bf = serde_json::Map::new();
            for (theta, counts) in args.bf_thresholds.iter().zip(&img.bf) {
                bf.insert(theta.to_string(), json!(mean_fscore(counts)));
            }
            entry["boundary_fscore"] = serde_json::Value::Object(bf);
        }
        per_image.push(entry);
    }
    report["per_image"] = json!(per_image);

    let mut summary_parts = Vec::new();
    if want_miou {
        let mut pooled = ConfusionMatrix::empty(manifest.num_classes);
        for img in &images {
            if let Some(cm) = &img.confusion {
                pooled.merge(cm).map_err(segfix_core::Error::from)?;
            }
        }
        let pooled_report = miou_from_confusion(&pooled);
        report["miou"] = json!({
            "mean": pooled_report.mean,
            "per_class": pooled_report.per_class,
        });
        summary_parts.push(format!("mIoU {:.4}", pooled_report.mean));
    }
    if want_bf {
        let mut thresholds = serde_json::Map::new();
        for (t_idx, theta) in args.bf_thresholds.iter().enumerate() {
            let value = match args.bf_average {
                BfAverage::Macro => {
                    let per_image_means: Vec<f64> =
                        images.iter().map(|img| mean_fscore(&img.bf[t_idx])).collect();
                    let mean = if per_image_means.is_empty() {
                        0.0
                    } else {
                        per_image_means.iter().sum::<f64>() / per_image_means.len() as f64
                    };
                    json!({ "mean": mean, "average": "macro" })
                }
                BfAverage::Pooled => {
                    let mut pooled: BTreeMap<ClassId, ContourMatchCounts> = BTreeMap::new();
                    for img in &images {
                        for (class, counts) in &img.bf[t_idx] {
                            pooled.entry(*class).or_default().merge(counts);
                        }
                    }
                    let per_class: BTreeMap<ClassId, f64> = pooled
                        .iter()
                        .map(|(&c, counts)| (c, counts.fscore()))
                        .collect();
                    json!({ "mean": mean_fscore(&pooled), "per_class": per_class, "average": "pooled" })
                }
            };
            summary_parts.push(format!(
                "BF@{theta} {:.4}",
                value["mean"].as_f64().unwrap_or(0.0)
            ));
            thresholds.insert(theta.to_string(), value);
        }
        report["boundary_fscore"] = serde_json::Value::Object(thresholds);
    }

    println!(
        "eval: {} image(s); {}",
        images.len(),
        summary_parts.join(", ")
    );
    crate::runner::write_report(args.out.as_deref(), &report)?;
    finish_with_failures("eval", failures)
}

fn mean_fscore(counts: &BTreeMap<ClassId, ContourMatchCounts>) -> f64 {
    if counts.is_empty() {
        return 0.0;
    }
    counts.values().map(|c| c.fscore()).sum::<f64>() / counts.len() as f64
}

fn evaluate_record(
    args: &EvalArgs,
    manifest: &segfix_core::io::DatasetManifest,
    record: &segfix_core::io::ManifestRecord,
    want_miou: bool,
    want_bf: bool,
) -> Result<ImageEval, String> {
    let gt = read_gt(manifest, &record.gt_labels).map_err(|e| e.to_string())?;
    let pred_path = prediction_path(&args.pred_dir, &record.id)
        .ok_or_else(|| format!("no prediction found in {}", args.pred_dir.display()))?;
    let pred = read_gt(manifest, &pred_path).map_err(|e| e.to_string())?;

    let confusion = if want_miou {
        Some(ConfusionMatrix::from_label_maps(&pred, &gt).map_err(|e| e.to_string())?)
    } else {
        None
    };
    let mut bf = Vec::new();
    if want_bf {
        for &theta in &args.bf_thresholds {
            bf.push(boundary_fscore_counts(&pred, &gt, theta).map_err(|e| e.to_string())?);
        }
    }
    Ok(ImageEval {
        id: record.id.clone(),
        confusion,
        bf,
    })
}
