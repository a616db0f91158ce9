use segfix_core::{boundary_pixel_proportion_counts, BoundaryProportionCounts};
use serde_json::json;

use crate::args::StatsArgs;
use crate::commands::{load_manifest_checked, read_gt};
use crate::runner::{finish_with_failures, parallel_map, split_failures, usage, CliResult};

pub fn run(args: StatsArgs) -> CliResult<()> {
    if args.widths.is_empty() {
        return Err(usage("--widths must not be empty"));
    }
    if let Some(bad) = args.widths.iter().find(|&&w| !(w > 0.0)) {
        return Err(usage(format!("--widths must be positive, got {bad}")));
    }
    let manifest = load_manifest_checked(&args.manifest)?;

    let outcomes = parallel_map(args.jobs, manifest.records.len(), |i| {
        let record = &manifest.records[i];
        read_gt(&manifest, &record.gt_labels)
            .and_then(|gt| boundary_pixel_proportion_counts(&gt, &args.widths))
            .map_err(|e| format!("record {:?}: {e}", record.id))
    })?;
    let (counts, failures) = split_failures(outcomes);

    let mut pooled = BoundaryProportionCounts {
        widths: args.widths.clone(),
        per_class: Default::default(),
    };
    for c in &counts {
        pooled.merge(c);
    }
    let proportions = pooled.to_proportions();

    println!(
        "stats: {} image(s), widths {:?}",
        counts.len(),
        args.widths
    );
    for (class, fractions) in &proportions.per_class {
        let cells: Vec<String> = fractions.iter().map(|f| format!("{:.4}", f)).collect();
        println!("  class {class}: {}", cells.join("  "));
    }
    let overall: Vec<String> = proportions.overall.iter().map(|f| format!("{f:.4}")).collect();
    println!("  overall: {}", overall.join("  "));

    crate::runner::write_report(
        args.out.as_deref(),
        &json!({
            "schema": 1,
            "command": "stats",
            "widths": proportions.widths,
            "per_class": proportions.per_class,
            "overall": proportions.overall,
            "class_pixels": pooled
                .per_class
                .iter()
                .map(|(c, (pixels, _))| (c.to_string(), *pixels))
                .collect::<std::collections::BTreeMap<_, _>>(),
            "failures": failures,
        }),
    )?;
    finish_with_failures("stats", failures)
}
