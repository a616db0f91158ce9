//! Evaluation surface: mIoU, boundary F-score with a distance slack, mask
//! F-score, direction accuracy, error-distance histograms, and
//! boundary-pixel proportion statistics.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::direction::QuantizedDirectionMap;
use crate::distance::{edt_exact, fused_distance_map, BoundaryMask};
use crate::error::{Error, Result};
use crate::grid::{ClassId, Grid, LabelMap};

/// KxK pixel counts indexed `[gt_class][pred_class]`, accumulated over
/// pixels where both maps carry a real class (ignore pixels on either side
/// are excluded from evaluation).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    counts: Vec<u64>,
    num_classes: u16,
}

impl ConfusionMatrix {
    pub fn empty(num_classes: u16) -> Self {
        ConfusionMatrix {
            counts: vec![0; num_classes as usize * num_classes as usize],
            num_classes,
        }
    }

    /// Pools another matrix into this one (dataset-wide accumulation).
    pub fn merge(&mut self, other: &ConfusionMatrix) -> Result<()> {
        if self.num_classes != other.num_classes {
            return Err(Error::ClassCountMismatch {
                left: self.num_classes,
                right: other.num_classes,
            });
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        Ok(())
    }

    pub fn from_label_maps(pred: &LabelMap, gt: &LabelMap) -> Result<Self> {
        if !pred.grid().same_shape(gt.grid()) {
            return Err(pred.grid().shape_error(gt.grid()));
        }
        if pred.num_classes() != gt.num_classes() {
            return Err(Error::ClassCountMismatch {
                left: pred.num_classes(),
                right: gt.num_classes(),
            });
        }
        let k = gt.num_classes() as usize;
        let mut counts = vec![0u64; k * k];
        for (&p, &g) in pred.grid().data().iter().zip(gt.grid().data()) {
            if g == gt.ignore_id() || p == pred.ignore_id() {
                continue;
            }
            counts[g as usize * k + p as usize] += 1;
        }
        Ok(ConfusionMatrix {
            counts,
            num_classes: gt.num_classes(),
        })
    }

    pub fn num_classes(&self) -> u16 {
        self.num_classes
    }

    #[inline]
    pub fn at(&self, gt_class: ClassId, pred_class: ClassId) -> u64 {
        self.counts[gt_class as usize * self.num_classes as usize + pred_class as usize]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Per-class (TP, FP, FN) triples.
    pub fn class_counts(&self, class: ClassId) -> (u64, u64, u64) {
        let k = self.num_classes as usize;
        let c = class as usize;
        let tp = self.counts[c * k + c];
        let fp: u64 = (0..k).filter(|&g| g != c).map(|g| self.counts[g * k + c]).sum();
        let fn_: u64 = (0..k).filter(|&p| p != c).map(|p| self.counts[c * k + p]).sum();
        (tp, fp, fn_)
    }

    /// Classes that occur in either map (nonzero row or column).
    pub fn classes_observed(&self) -> Vec<ClassId> {
        (0..self.num_classes)
            .filter(|&c| {
                let (tp, fp, fn_) = self.class_counts(c);
                tp + fp + fn_ > 0
            })
            .collect()
    }
}

/// Per-class scores with their mean and the parameters that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub metric_name: String,
    pub per_class: BTreeMap<ClassId, f64>,
    pub mean: f64,
    pub params: BTreeMap<String, f64>,
}

impl MetricsReport {
    fn new(
        metric_name: &str,
        per_class: BTreeMap<ClassId, f64>,
        params: BTreeMap<String, f64>,
    ) -> Self {
        let mean = if per_class.is_empty() {
            0.0
        } else {
            per_class.values().sum::<f64>() / per_class.len() as f64
        };
        MetricsReport {
            metric_name: metric_name.to_string(),
            per_class,
            mean,
            params,
        }
    }
}

/// Class-wise intersection over union. Classes absent from both maps are
/// excluded from the mean; classes present in either are scored.
pub fn miou(pred: &LabelMap, gt: &LabelMap) -> Result<MetricsReport> {
    Ok(miou_from_confusion(&ConfusionMatrix::from_label_maps(
        pred, gt,
    )?))
}

/// mIoU from an already-accumulated (possibly dataset-pooled) confusion
/// matrix.
pub fn miou_from_confusion(cm: &ConfusionMatrix) -> MetricsReport {
    let mut per_class = BTreeMap::new();
    for class in cm.classes_observed() {
        let (tp, fp, fn_) = cm.class_counts(class);
        per_class.insert(class, tp as f64 / (tp + fp + fn_) as f64);
    }
    MetricsReport::new("miou", per_class, BTreeMap::new())
}

/// Distance slack in pixels for a relative threshold: `ceil(theta * image
/// diagonal)`, at least 1. At 2048x1024 the thresholds 0.0003 / 0.0006 /
/// 0.0009 resolve to 1 / 2 / 3 px.
pub fn boundary_slack_px(theta: f64, height: usize, width: usize) -> Result<f64> {
    if !(theta > 0.0) {
        return Err(Error::InvalidThreshold(theta));
    }
    let diag = ((height * height + width * width) as f64).sqrt();
    Ok((theta * diag).ceil().max(1.0))
}

/// Match counts for one class's contours, poolable across images.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContourMatchCounts {
    pub matched_pred: u64,
    pub total_pred: u64,
    pub matched_gt: u64,
    pub total_gt: u64,
}

impl ContourMatchCounts {
    pub fn merge(&mut self, other: &ContourMatchCounts) {
        self.matched_pred += other.matched_pred;
        self.total_pred += other.total_pred;
        self.matched_gt += other.matched_gt;
        self.total_gt += other.total_gt;
    }

    /// F = 2PR/(P+R); empty/empty counts as a perfect match, one-sided
    /// emptiness as a total miss.
    pub fn fscore(&self) -> f64 {
        match (self.total_pred, self.total_gt) {
            (0, 0) => 1.0,
            (0, _) | (_, 0) => 0.0,
            _ => {
                let p = self.matched_pred as f64 / self.total_pred as f64;
                let r = self.matched_gt as f64 / self.total_gt as f64;
                if p + r == 0.0 {
                    0.0
                } else {
                    2.0 * p * r / (p + r)
                }
            }
        }
    }
}

/// Contour of one class: class pixels with a 4-neighbor of a different
/// non-ignore class. Image-edge adjacency and ignore neighbors do not count.
fn contour_mask(labels: &LabelMap, class: ClassId) -> Grid<bool> {
    let (h, w) = (labels.height(), labels.width());
    Grid::from_fn(h, w, |r, c| {
        if labels.label(r, c) != class {
            return false;
        }
        let mut on_contour = false;
        let mut check = |rr: usize, cc: usize| {
            let v = labels.label(rr, cc);
            if v != class && v != labels.ignore_id() {
                on_contour = true;
            }
        };
        if r > 0 {
            check(r - 1, c);
        }
        if r + 1 < h {
            check(r + 1, c);
        }
        if c > 0 {
            check(r, c - 1);
        }
        if c + 1 < w {
            check(r, c + 1);
        }
        on_contour
    })
    .expect("label map dimensions are valid")
}

/// Distance from every pixel to the nearest contour pixel.
fn contour_distance(contour: &Grid<bool>) -> Grid<f32> {
    // EDT measures to the nearest false pixel, so invert the contour.
    let inverted = Grid::from_fn(contour.height(), contour.width(), |r, c| !contour.at(r, c))
        .expect("shape preserved");
    edt_exact(&inverted).grid().clone()
}

/// Per-class contour match counts between two label maps at a distance slack
/// of `theta * diagonal` pixels. Classes present in the GT map are reported.
pub fn boundary_fscore_counts(
    pred: &LabelMap,
    gt: &LabelMap,
    theta: f64,
) -> Result<BTreeMap<ClassId, ContourMatchCounts>> {
    if !pred.grid().same_shape(gt.grid()) {
        return Err(pred.grid().shape_error(gt.grid()));
    }
    if pred.num_classes() != gt.num_classes() {
        return Err(Error::ClassCountMismatch {
            left: pred.num_classes(),
            right: gt.num_classes(),
        });
    }
    let slack = boundary_slack_px(theta, gt.height(), gt.width())?;
    let mut out = BTreeMap::new();
    for class in gt.classes_present() {
        let pred_contour = contour_mask(pred, class);
        let gt_contour = contour_mask(gt, class);
        let mut counts = ContourMatchCounts::default();
        counts.total_pred = pred_contour.data().iter().filter(|&&b| b).count() as u64;
        counts.total_gt = gt_contour.data().iter().filter(|&&b| b).count() as u64;
        if counts.total_pred > 0 && counts.total_gt > 0 {
            let to_gt = contour_distance(&gt_contour);
            let to_pred = contour_distance(&pred_contour);
            for idx in 0..to_gt.data().len() {
                if pred_contour.data()[idx] && to_gt.data()[idx] as f64 <= slack {
                    counts.matched_pred += 1;
                }
                if gt_contour.data()[idx] && to_pred.data()[idx] as f64 <= slack {
                    counts.matched_gt += 1;
                }
            }
        }
        out.insert(class, counts);
    }
    Ok(out)
}

/// Boundary F-score: per-class contour matching with a distance slack of
/// `theta * diagonal` pixels (precision from the prediction contour, recall
/// from the GT contour). Mean over classes present in the GT map.
pub fn boundary_fscore(pred: &LabelMap, gt: &LabelMap, theta: f64) -> Result<MetricsReport> {
    let counts = boundary_fscore_counts(pred, gt, theta)?;
    let per_class = counts
        .into_iter()
        .map(|(class, c)| (class, c.fscore()))
        .collect();
    let mut params = BTreeMap::new();
    params.insert("theta".to_string(), theta);
    params.insert(
        "slack_px".to_string(),
        boundary_slack_px(theta, gt.height(), gt.width())?,
    );
    Ok(MetricsReport::new("boundary_fscore", per_class, params))
}

/// Pixel-exact binary F1 between two boundary masks; 1.0 when both are
/// empty.
pub fn mask_fscore(pred: &BoundaryMask, gt: &BoundaryMask) -> Result<f64> {
    if !pred.grid().same_shape(gt.grid()) {
        return Err(pred.grid().shape_error(gt.grid()));
    }
    let mut tp = 0u64;
    let mut fp = 0u64;
    let mut fn_ = 0u64;
    for (&p, &g) in pred.grid().data().iter().zip(gt.grid().data()) {
        match (p, g) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => {}
        }
    }
    if tp + fp + fn_ == 0 {
        return Ok(1.0);
    }
    Ok(2.0 * tp as f64 / (2.0 * tp as f64 + fp as f64 + fn_ as f64))
}

/// Fraction of region pixels where the two direction maps agree; 1.0 on an
/// empty region.
pub fn direction_accuracy(
    pred: &QuantizedDirectionMap,
    gt: &QuantizedDirectionMap,
    region: &BoundaryMask,
) -> Result<f64> {
    if pred.m() != gt.m() {
        return Err(Error::DirectionCountMismatch {
            left: pred.m(),
            right: gt.m(),
        });
    }
    if !pred.grid().same_shape(gt.grid()) {
        return Err(pred.grid().shape_error(gt.grid()));
    }
    if !pred.grid().same_shape(region.grid()) {
        return Err(pred.grid().shape_error(region.grid()));
    }
    let mut total = 0u64;
    let mut agree = 0u64;
    for idx in 0..region.grid().data().len() {
        if region.grid().data()[idx] {
            total += 1;
            if pred.grid().data()[idx] == gt.grid().data()[idx] {
                agree += 1;
            }
        }
    }
    if total == 0 {
        return Ok(1.0);
    }
    Ok(agree as f64 / total as f64)
}

/// Histogram of misclassified pixels by their GT distance to the boundary.
///
/// `counts` has one more entry than `bin_edges`: an underflow bin below the
/// first edge, one bin per consecutive edge pair, and an open-ended last
/// bin, so every error pixel lands somewhere regardless of the edges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorHistogram {
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl ErrorHistogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn empty(bin_edges: &[f64]) -> Result<Self> {
        if bin_edges.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::UnsortedBinEdges);
        }
        Ok(ErrorHistogram {
            bin_edges: bin_edges.to_vec(),
            counts: vec![0; bin_edges.len() + 1],
        })
    }

    pub fn merge(&mut self, other: &ErrorHistogram) {
        debug_assert_eq!(self.bin_edges, other.bin_edges);
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }

    fn add(&mut self, distance: f64) {
        let bin = self
            .bin_edges
            .iter()
            .position(|&e| distance < e)
            .unwrap_or(self.bin_edges.len());
        self.counts[bin] += 1;
    }
}

/// Bins every non-ignore pixel where `pred != gt` by the GT fused distance
/// at that pixel.
pub fn error_distance_histogram(
    pred: &LabelMap,
    gt: &LabelMap,
    bin_edges: &[f64],
) -> Result<ErrorHistogram> {
    if !pred.grid().same_shape(gt.grid()) {
        return Err(pred.grid().shape_error(gt.grid()));
    }
    let mut hist = ErrorHistogram::empty(bin_edges)?;
    let fused = fused_distance_map(gt);
    for r in 0..gt.height() {
        for c in 0..gt.width() {
            if gt.is_ignore(r, c) || pred.label(r, c) == gt.label(r, c) {
                continue;
            }
            hist.add(fused.at(r, c) as f64);
        }
    }
    Ok(hist)
}

/// Raw boundary-proportion counts: per class, the pixel total and how many
/// of them fall strictly below each width. Counts pool exactly across
/// images; fractions are derived at the end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryProportionCounts {
    pub widths: Vec<f64>,
    pub per_class: BTreeMap<ClassId, (u64, Vec<u64>)>,
}

impl BoundaryProportionCounts {
    pub fn merge(&mut self, other: &BoundaryProportionCounts) {
        debug_assert_eq!(self.widths, other.widths);
        for (class, (pixels, below)) in &other.per_class {
            let entry = self
                .per_class
                .entry(*class)
                .or_insert_with(|| (0, vec![0; self.widths.len()]));
            entry.0 += pixels;
            for (a, b) in entry.1.iter_mut().zip(below) {
                *a += b;
            }
        }
    }

    pub fn to_proportions(&self) -> BoundaryProportions {
        let per_class: BTreeMap<ClassId, Vec<f64>> = self
            .per_class
            .iter()
            .map(|(&class, (pixels, below))| {
                let fractions = below
                    .iter()
                    .map(|&b| if *pixels == 0 { 0.0 } else { b as f64 / *pixels as f64 })
                    .collect();
                (class, fractions)
            })
            .collect();
        let total: u64 = self.per_class.values().map(|(p, _)| p).sum();
        let overall = (0..self.widths.len())
            .map(|i| {
                let below: u64 = self.per_class.values().map(|(_, b)| b[i]).sum();
                if total == 0 {
                    0.0
                } else {
                    below as f64 / total as f64
                }
            })
            .collect();
        BoundaryProportions {
            widths: self.widths.clone(),
            per_class,
            overall,
        }
    }
}

/// Fractions of each class's pixels that lie within `width` of the boundary
/// (strictly `fused < width`), one column per requested width, plus a pooled
/// overall row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryProportions {
    pub widths: Vec<f64>,
    pub per_class: BTreeMap<ClassId, Vec<f64>>,
    pub overall: Vec<f64>,
}

/// Per-class boundary-pixel counts for a GT label map; pool these across a
/// dataset before converting to fractions.
pub fn boundary_pixel_proportion_counts(
    gt: &LabelMap,
    widths: &[f64],
) -> Result<BoundaryProportionCounts> {
    if let Some(&bad) = widths.iter().find(|&&w| !(w > 0.0)) {
        return Err(Error::InvalidWidth(bad as f32));
    }
    let fused = fused_distance_map(gt);
    let mut per_class: BTreeMap<ClassId, (u64, Vec<u64>)> = gt
        .classes_present()
        .into_iter()
        .map(|c| (c, (0, vec![0u64; widths.len()])))
        .collect();
    for r in 0..gt.height() {
        for c in 0..gt.width() {
            if gt.is_ignore(r, c) {
                continue;
            }
            let entry = per_class.get_mut(&gt.label(r, c)).expect("present");
            entry.0 += 1;
            let d = fused.at(r, c) as f64;
            for (i, &w) in widths.iter().enumerate() {
                if d < w {
                    entry.1[i] += 1;
                }
            }
        }
    }
    Ok(BoundaryProportionCounts {
        widths: widths.to_vec(),
        per_class,
    })
}

/// Boundary-pixel proportion statistics over a GT label map.
pub fn boundary_pixel_proportions(gt: &LabelMap, widths: &[f64]) -> Result<BoundaryProportions> {
    Ok(boundary_pixel_proportion_counts(gt, widths)?.to_proportions())
}
