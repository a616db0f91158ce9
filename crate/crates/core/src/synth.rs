//! Deterministic synthetic label maps and boundary-localized corruption.
//!
//! Together these let the whole refine loop be exercised without any trained
//! model: generate a ground truth, corrupt its boundary band the way real
//! predictors err, then check that refinement with ground-truth offsets
//! recovers it.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::direction::{build_offset_field, gt_direction_pipeline};
use crate::distance::fused_distance_with_nearest;
use crate::error::{Error, Result};
use crate::grid::{ClassId, Grid, LabelMap};
use crate::metrics::{boundary_fscore, miou};
use crate::refine::{refine_iterative, refine_labels, RefinementConfig, Scheme};

/// Parameters for synthetic label-map generation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub seed: u64,
    pub height: usize,
    pub width: usize,
    pub num_classes: u16,
    pub num_shapes: usize,
    pub min_shape_extent: u32,
}

/// Parameters for boundary-band corruption.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorruptionConfig {
    pub seed: u64,
    pub band_width: f32,
    pub flip_probability: f64,
}

/// Splitmix64-style scramble for deriving per-image sub-seeds, so image `i`
/// of a run is reproducible in isolation.
pub fn mix_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn validate_synth(cfg: &SynthConfig) -> Result<()> {
    if cfg.num_classes < 2 {
        return Err(Error::InvalidSynthConfig(format!(
            "num_classes must be at least 2, got {}",
            cfg.num_classes
        )));
    }
    if cfg.min_shape_extent < 4 {
        return Err(Error::InvalidSynthConfig(format!(
            "min_shape_extent must be at least 4, got {}",
            cfg.min_shape_extent
        )));
    }
    if cfg.height == 0 || cfg.width == 0 {
        return Err(Error::InvalidSynthConfig("empty image".to_string()));
    }
    // The tightest placement constraint comes from polygons, whose
    // circumradius must be at least the extent while fitting fully inside.
    let side = cfg.height.min(cfg.width) as u32;
    if cfg.num_shapes > 0 && cfg.min_shape_extent > side.saturating_sub(1) / 2 {
        return Err(Error::ShapeDoesNotFit {
            extent: cfg.min_shape_extent,
            height: cfg.height,
            width: cfg.width,
        });
    }
    Ok(())
}

/// Paints `num_shapes` random rectangles, discs, and convex polygons (classes
/// `1..K`) over a class-0 background, in order, later shapes occluding
/// earlier ones. Every shape has extent >= `min_shape_extent` and fits fully
/// inside the image. Deterministic in the seed.
pub fn generate_labels(cfg: &SynthConfig) -> Result<LabelMap> {
    validate_synth(cfg)?;
    let (h, w) = (cfg.height, cfg.width);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut data = vec![0u16; h * w];
    let min_e = cfg.min_shape_extent as usize;
    let max_e = (h.min(w) / 3).max(min_e);

    for _ in 0..cfg.num_shapes {
        let class: ClassId = rng.random_range(1..cfg.num_classes);
        match rng.random_range(0..3u8) {
            0 => {
                let eh = rng.random_range(min_e..=max_e.min(h));
                let ew = rng.random_range(min_e..=max_e.min(w));
                let top = rng.random_range(0..=h - eh);
                let left = rng.random_range(0..=w - ew);
                for r in top..top + eh {
                    for c in left..left + ew {
                        data[r * w + c] = class;
                    }
                }
            }
            1 => {
                let r_lo = min_e as f64 / 2.0;
                let r_hi = (max_e as f64 / 2.0).max(r_lo + 0.5);
                let radius = rng.random_range(r_lo..=r_hi);
                let cr = rng.random_range(radius..=(h - 1) as f64 - radius);
                let cc = rng.random_range(radius..=(w - 1) as f64 - radius);
                paint_disc(&mut data, h, w, cr, cc, radius, class);
            }
            _ => {
                // Cyclic polygon: vertices on a circle in angular order are
                // always in convex position. With jitter capped at
                // pi/(4n) the inradius stays above ~0.55R, so R >= extent
                // keeps the painted width above min_shape_extent.
                let r_lo = min_e as f64;
                let r_hi = ((h.min(w) - 1) as f64 / 2.0 - 1.0).max(r_lo + 0.5);
                let radius = rng.random_range(r_lo..=r_hi.min(r_lo * 3.0));
                let cr = rng.random_range(radius..=(h - 1) as f64 - radius);
                let cc = rng.random_range(radius..=(w - 1) as f64 - radius);
                let n = rng.random_range(4..=6usize);
                let rotation = rng.random_range(0.0..std::f64::consts::TAU);
                let jitter_cap = std::f64::consts::PI / (4.0 * n as f64);
                let vertices: Vec<(f64, f64)> = (0..n)
                    .map(|k| {
                        let jitter = rng.random_range(-jitter_cap..jitter_cap);
                        let theta = rotation + std::f64::consts::TAU * k as f64 / n as f64 + jitter;
                        (cr + radius * theta.sin(), cc + radius * theta.cos())
                    })
                    .collect();
                paint_convex_polygon(&mut data, h, w, &vertices, class);
            }
        }
    }

    LabelMap::with_default_ignore(Grid::from_raw(h, w, data)?, cfg.num_classes)
}

fn paint_disc(data: &mut [u16], h: usize, w: usize, cr: f64, cc: f64, radius: f64, class: u16) {
    let r0 = (cr - radius).floor().max(0.0) as usize;
    let r1 = ((cr + radius).ceil() as usize).min(h - 1);
    let c0 = (cc - radius).floor().max(0.0) as usize;
    let c1 = ((cc + radius).ceil() as usize).min(w - 1);
    for r in r0..=r1 {
        for c in c0..=c1 {
            let dr = r as f64 - cr;
            let dc = c as f64 - cc;
            if dr * dr + dc * dc <= radius * radius {
                data[r * w + c] = class;
            }
        }
    }
}

fn paint_convex_polygon(data: &mut [u16], h: usize, w: usize, verts: &[(f64, f64)], class: u16) {
    let r0 = verts.iter().map(|v| v.0).fold(f64::MAX, f64::min).floor().max(0.0) as usize;
    let r1 = (verts.iter().map(|v| v.0).fold(f64::MIN, f64::max).ceil() as usize).min(h - 1);
    let c0 = verts.iter().map(|v| v.1).fold(f64::MAX, f64::min).floor().max(0.0) as usize;
    let c1 = (verts.iter().map(|v| v.1).fold(f64::MIN, f64::max).ceil() as usize).min(w - 1);
    for r in r0..=r1 {
        for c in c0..=c1 {
            let p = (r as f64, c as f64);
            let mut pos = false;
            let mut neg = false;
            for i in 0..verts.len() {
                let a = verts[i];
                let b = verts[(i + 1) % verts.len()];
                let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
                if cross > 0.0 {
                    pos = true;
                } else if cross < 0.0 {
                    neg = true;
                }
            }
            if !(pos && neg) {
                data[r * w + c] = class;
            }
        }
    }
}

/// Flips pixels inside the boundary band (fused distance < `band_width`) to
/// the label of their nearest other-class pixel, each with probability
/// `flip_probability`. Interior pixels are never touched. Deterministic in
/// the seed (band pixels are visited in row-major order).
pub fn corrupt_boundary(labels: &LabelMap, cfg: &CorruptionConfig) -> Result<LabelMap> {
    if !(cfg.band_width >= 1.0) {
        return Err(Error::InvalidSynthConfig(format!(
            "band_width must be at least 1, got {}",
            cfg.band_width
        )));
    }
    if !(0.0..=1.0).contains(&cfg.flip_probability) {
        return Err(Error::InvalidSynthConfig(format!(
            "flip_probability must be in [0, 1], got {}",
            cfg.flip_probability
        )));
    }
    let (fused, nearest) = fused_distance_with_nearest(labels);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut data = labels.grid().data().to_vec();
    for r in 0..labels.height() {
        for c in 0..labels.width() {
            if labels.is_ignore(r, c) || fused.at(r, c) >= cfg.band_width {
                continue;
            }
            if rng.random::<f64>() < cfg.flip_probability {
                let (wr, wc) = nearest.at(r, c);
                data[r * labels.width() + c] = labels.label(wr as usize, wc as usize);
            }
        }
    }
    Ok(labels.with_same_meta(Grid::from_raw(labels.height(), labels.width(), data)?))
}

/// Outcome of one synthetic image: metrics on the corrupted map and on its
/// refinement with ground-truth offsets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageOutcome {
    pub index: usize,
    pub miou_before: f64,
    pub miou_after: f64,
    pub bf_before: f64,
    pub bf_after: f64,
}

/// Aggregated before/after report over a batch of synthetic images.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema: u32,
    pub params: BTreeMap<String, serde_json::Value>,
    pub images: Vec<ImageOutcome>,
    pub mean_miou_before: f64,
    pub mean_miou_after: f64,
    pub miou_delta: f64,
    pub mean_bf_before: f64,
    pub mean_bf_after: f64,
    pub bf_delta: f64,
    /// Images whose mIoU strictly increased after refinement.
    pub improved_images: usize,
}

/// Runs generate -> corrupt -> GT offsets -> refine -> evaluate for image
/// `index` of an experiment. Sub-seeds are derived with [`mix_seed`], so any
/// image is reproducible on its own.
pub fn oracle_experiment_image(
    synth: &SynthConfig,
    corrupt: &CorruptionConfig,
    gamma: f32,
    m: u8,
    refinement: &RefinementConfig,
    theta: f64,
    index: usize,
) -> Result<ImageOutcome> {
    let gt = generate_labels(&SynthConfig {
        seed: mix_seed(synth.seed, index as u64),
        ..*synth
    })?;
    let coarse = corrupt_boundary(
        &gt,
        &CorruptionConfig {
            seed: mix_seed(corrupt.seed, index as u64),
            ..*corrupt
        },
    )?;
    let (boundary, directions) = gt_direction_pipeline(&gt, gamma, m)?;
    let refined = match refinement.scheme {
        Scheme::Rescale => {
            let field = build_offset_field(&directions, &boundary, refinement.scale)?;
            refine_labels(&coarse, &field)?
        }
        Scheme::Iterative => {
            let field = build_offset_field(&directions, &boundary, 1)?;
            refine_iterative(&coarse, &field, &boundary, refinement)?
        }
    };
    Ok(ImageOutcome {
        index,
        miou_before: miou(&coarse, &gt)?.mean,
        miou_after: miou(&refined, &gt)?.mean,
        bf_before: boundary_fscore(&coarse, &gt, theta)?.mean,
        bf_after: boundary_fscore(&refined, &gt, theta)?.mean,
    })
}

/// Folds per-image outcomes into a report. Outcomes must be in index order
/// for byte-stable output.
pub fn aggregate_experiment(
    params: BTreeMap<String, serde_json::Value>,
    images: Vec<ImageOutcome>,
) -> ExperimentReport {
    let n = images.len().max(1) as f64;
    let mean = |f: fn(&ImageOutcome) -> f64| images.iter().map(f).sum::<f64>() / n;
    let mean_miou_before = mean(|i| i.miou_before);
    let mean_miou_after = mean(|i| i.miou_after);
    let mean_bf_before = mean(|i| i.bf_before);
    let mean_bf_after = mean(|i| i.bf_after);
    let improved_images = images
        .iter()
        .filter(|i| i.miou_after > i.miou_before)
        .count();
    ExperimentReport {
        schema: 1,
        params,
        mean_miou_before,
        mean_miou_after,
        miou_delta: mean_miou_after - mean_miou_before,
        mean_bf_before,
        mean_bf_after,
        bf_delta: mean_bf_after - mean_bf_before,
        improved_images,
        images,
    }
}

/// The ground-truth-offset experiment: corrupt `n_images` synthetic maps in
/// the boundary band, refine them with offsets derived from the clean ground
/// truth, and report mIoU / boundary F-score before and after.
pub fn oracle_experiment(
    synth: &SynthConfig,
    corrupt: &CorruptionConfig,
    gamma: f32,
    m: u8,
    refinement: &RefinementConfig,
    n_images: usize,
    theta: f64,
) -> Result<ExperimentReport> {
    let images = (0..n_images)
        .map(|i| oracle_experiment_image(synth, corrupt, gamma, m, refinement, theta, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(aggregate_experiment(experiment_params(synth, corrupt, gamma, m, refinement, n_images, theta), images))
}

/// Parameter echo recorded in experiment reports.
pub fn experiment_params(
    synth: &SynthConfig,
    corrupt: &CorruptionConfig,
    gamma: f32,
    m: u8,
    refinement: &RefinementConfig,
    n_images: usize,
    theta: f64,
) -> BTreeMap<String, serde_json::Value> {
    let mut params = BTreeMap::new();
    params.insert("synth".into(), serde_json::to_value(synth).expect("serializable"));
    params.insert(
        "corruption".into(),
        serde_json::to_value(corrupt).expect("serializable"),
    );
    params.insert("gamma".into(), serde_json::json!(gamma));
    params.insert("num_dirs".into(), serde_json::json!(m));
    params.insert(
        "scheme".into(),
        serde_json::json!(match refinement.scheme {
            Scheme::Rescale => "rescale",
            Scheme::Iterative => "iterative",
        }),
    );
    params.insert("scale".into(), serde_json::json!(refinement.scale));
    params.insert(
        "max_iterations".into(),
        serde_json::json!(refinement.max_iterations),
    );
    params.insert("n_images".into(), serde_json::json!(n_images));
    params.insert("theta".into(), serde_json::json!(theta));
    params
}
