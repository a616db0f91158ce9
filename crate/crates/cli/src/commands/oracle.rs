use segfix_core::{
    aggregate_experiment, experiment_params, mix_seed, oracle_experiment_image, CorruptionConfig,
    RefinementConfig, SynthConfig,
};

use crate::args::{parse_size, OracleArgs};
use crate::runner::{data, parallel_map, usage, CliResult};

pub fn run(args: OracleArgs) -> CliResult<()> {
    let (height, width) = parse_size(&args.size).map_err(usage)?;
    if ![4, 8, 16].contains(&args.num_dirs) {
        return Err(usage(format!(
            "--num-dirs must be 4, 8, or 16, got {}",
            args.num_dirs
        )));
    }
    if !(args.gamma > 0.0) {
        return Err(usage("--gamma must be positive"));
    }
    if !(args.theta > 0.0) {
        return Err(usage("--theta must be positive"));
    }
    if args.count == 0 {
        return Err(usage("--count must be at least 1"));
    }
    let synth = SynthConfig {
        seed: args.seed,
        height,
        width,
        num_classes: args.classes,
        num_shapes: args.shapes,
        min_shape_extent: args.min_extent,
    };
    let corrupt = CorruptionConfig {
        seed: args.corrupt_seed.unwrap_or_else(|| mix_seed(args.seed, u64::MAX)),
        band_width: args.band_width,
        flip_probability: args.flip_prob,
    };
    let refinement = RefinementConfig {
        scheme: args.scheme.to_scheme(),
        scale: args.scale,
        max_iterations: args.max_iterations,
    };

    let outcomes = parallel_map(args.jobs, args.count, |i| {
        oracle_experiment_image(&synth, &corrupt, args.gamma, args.num_dirs, &refinement, args.theta, i)
            .map_err(|e| format!("image {i}: {e}"))
    })?;
    let images = outcomes
        .into_iter()
        .collect::<Result<Vec<_>, String>>()
        .map_err(data)?;

    let report = aggregate_experiment(
        experiment_params(
            &synth,
            &corrupt,
            args.gamma,
            args.num_dirs,
            &refinement,
            args.count,
            args.theta,
        ),
        images,
    );
    println!(
        "oracle-exp: mIoU {:.4} -> {:.4} ({:+.4}); BF@{} {:.4} -> {:.4} ({:+.4}); improved {}/{}",
        report.mean_miou_before,
        report.mean_miou_after,
        report.miou_delta,
        args.theta,
        report.mean_bf_before,
        report.mean_bf_after,
        report.bf_delta,
        report.improved_images,
        args.count
    );
    let value = serde_json::to_value(&report).map_err(|e| data(e.to_string()))?;
    crate::runner::write_report(args.out.as_deref(), &value)?;
    Ok(())
}
