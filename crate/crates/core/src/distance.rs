//! Exact Euclidean distance transforms, per-class decomposition, fused
//! distance maps, and boundary-mask extraction.
//!
//! The transform is the two-pass separable lower-envelope method: a column
//! pass reduces the problem to 1-D, then a row pass minimizes parabolas
//! `(x - v)^2 + f(v)` over each row. All intermediate distances are squared
//! integers and envelope boundaries are compared as exact rationals, so the
//! result is bit-for-bit equal to the brute-force all-pairs minimum.

use crate::error::{Error, Result};
use crate::grid::{ClassId, Grid, LabelMap};

/// Finite stand-in for "no other-class pixel exists". Kept finite so the
/// Sobel stage downstream never sees NaN or infinity.
pub const INFINITY_SENTINEL: f32 = 1.0e6;

/// Squared-distance marker for "no source pixel"; never enters arithmetic.
const NO_SOURCE: i64 = i64::MAX;

/// Per-pixel Euclidean distance to the nearest pixel outside the region,
/// in pixel units.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMap {
    grid: Grid<f32>,
}

impl DistanceMap {
    pub fn grid(&self) -> &Grid<f32> {
        &self.grid
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize) -> f32 {
        self.grid.at(row, col)
    }

    pub fn height(&self) -> usize {
        self.grid.height()
    }

    pub fn width(&self) -> usize {
        self.grid.width()
    }

    /// Wraps an existing distance grid, e.g. one read back from an NPY file.
    pub fn from_grid(grid: Grid<f32>) -> Self {
        DistanceMap { grid }
    }
}

/// Boundary band: pixels whose fused distance is strictly below `gamma`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryMask {
    grid: Grid<bool>,
    gamma: f32,
}

impl BoundaryMask {
    pub fn grid(&self) -> &Grid<bool> {
        &self.grid
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize) -> bool {
        self.grid.at(row, col)
    }

    pub fn gamma(&self) -> f32 {
        self.gamma
    }

    pub fn height(&self) -> usize {
        self.grid.height()
    }

    pub fn width(&self) -> usize {
        self.grid.width()
    }

    pub fn count(&self) -> usize {
        self.grid.data().iter().filter(|&&b| b).count()
    }

    /// Wraps an existing mask, e.g. an externally predicted boundary map
    /// read from an NPY file. `gamma` records the threshold it was (or would
    /// have been) produced with.
    pub fn from_parts(grid: Grid<bool>, gamma: f32) -> Self {
        BoundaryMask { grid, gamma }
    }
}

/// Splits a label map into one binary map per class present in the image.
/// Ignore pixels are false in every map.
pub fn decompose_labels(labels: &LabelMap) -> Vec<(ClassId, Grid<bool>)> {
    labels
        .classes_present()
        .into_iter()
        .map(|class| {
            let mask = Grid::from_fn(labels.height(), labels.width(), |r, c| {
                labels.label(r, c) == class
            })
            .expect("label map dimensions are valid");
            (class, mask)
        })
        .collect()
}

/// Exact Euclidean distance transform: for every true pixel, the distance to
/// the nearest false pixel (pixel-center metric); 0 at false pixels. If the
/// mask has no false pixel every value is [`INFINITY_SENTINEL`].
pub fn edt_exact(mask: &Grid<bool>) -> DistanceMap {
    let (dist_sq, _) = edt_impl(mask, false);
    DistanceMap {
        grid: squared_to_distance(mask.height(), mask.width(), &dist_sq),
    }
}

/// Like [`edt_exact`], but also reports the coordinates of a nearest false
/// pixel for every position (ties broken deterministically by scan order).
/// Positions with no source keep their own coordinates.
pub fn edt_exact_with_nearest(mask: &Grid<bool>) -> (DistanceMap, Grid<(u32, u32)>) {
    let (dist_sq, nearest) = edt_impl(mask, true);
    let map = DistanceMap {
        grid: squared_to_distance(mask.height(), mask.width(), &dist_sq),
    };
    let nearest = Grid::from_raw(mask.height(), mask.width(), nearest.expect("requested"))
        .expect("witness buffer matches shape");
    (map, nearest)
}

fn squared_to_distance(height: usize, width: usize, dist_sq: &[i64]) -> Grid<f32> {
    let data = dist_sq
        .iter()
        .map(|&sq| {
            if sq == NO_SOURCE {
                INFINITY_SENTINEL
            } else {
                (sq as f64).sqrt() as f32
            }
        })
        .collect();
    Grid::from_raw(height, width, data).expect("shape preserved")
}

fn edt_impl(mask: &Grid<bool>, want_nearest: bool) -> (Vec<i64>, Option<Vec<(u32, u32)>>) {
    let (h, w) = (mask.height(), mask.width());
    let data = mask.data();

    // Column pass: squared distance to the nearest false pixel in the same
    // column, and that pixel's row.
    let mut col_sq = vec![NO_SOURCE; h * w];
    let mut col_row = vec![0u32; h * w];
    for c in 0..w {
        let mut last_false: Option<usize> = None;
        for r in 0..h {
            let idx = r * w + c;
            if !data[idx] {
                last_false = Some(r);
            }
            if let Some(fr) = last_false {
                let d = (r - fr) as i64;
                col_sq[idx] = d * d;
                col_row[idx] = fr as u32;
            }
        }
        last_false = None;
        for r in (0..h).rev() {
            let idx = r * w + c;
            if !data[idx] {
                last_false = Some(r);
            }
            if let Some(fr) = last_false {
                let d = (fr - r) as i64;
                if col_sq[idx] == NO_SOURCE || d * d < col_sq[idx] {
                    col_sq[idx] = d * d;
                    col_row[idx] = fr as u32;
                }
            }
        }
    }

    // Row pass: lower envelope of parabolas (x - v)^2 + col_sq[v].
    let mut out = vec![NO_SOURCE; h * w];
    let mut nearest = want_nearest.then(|| vec![(0u32, 0u32); h * w]);
    let mut env = Envelope::new(w);
    let mut chosen = vec![0usize; w];
    for r in 0..h {
        let row_f = &col_sq[r * w..(r + 1) * w];
        if !env.build(row_f) {
            // No source pixel in any column of this row's input; leave NO_SOURCE.
            if let Some(nearest) = nearest.as_mut() {
                for c in 0..w {
                    nearest[r * w + c] = (r as u32, c as u32);
                }
            }
            continue;
        }
        env.evaluate(row_f, &mut out[r * w..(r + 1) * w], &mut chosen);
        if let Some(nearest) = nearest.as_mut() {
            for c in 0..w {
                let v = chosen[c];
                nearest[r * w + c] = (col_row[r * w + v], v as u32);
            }
        }
    }

    (out, nearest)
}

/// Lower envelope of parabolas with exact rational boundary comparisons.
struct Envelope {
    locs: Vec<usize>,
    // Boundary between parabola k-1 and k as the rational num/den, den > 0.
    num: Vec<i64>,
    den: Vec<i64>,
    count: usize,
}

impl Envelope {
    fn new(len: usize) -> Self {
        Envelope {
            locs: vec![0; len],
            num: vec![0; len],
            den: vec![1; len],
            count: 0,
        }
    }

    /// Builds the envelope for source values `f`; returns false if every
    /// value is NO_SOURCE.
    fn build(&mut self, f: &[i64]) -> bool {
        self.count = 0;
        let mut k = 0usize;
        for (q, &fq) in f.iter().enumerate() {
            if fq == NO_SOURCE {
                continue;
            }
            if self.count == 0 {
                self.locs[0] = q;
                self.count = 1;
                k = 0;
                continue;
            }
            loop {
                let p = self.locs[k];
                let num = fq + (q * q) as i64 - f[p] - (p * p) as i64;
                let den = 2 * (q - p) as i64;
                // Pop while the new parabola takes over at or before the
                // current boundary; boundary 0 is -infinity.
                if k > 0 && num as i128 * self.den[k] as i128 <= self.num[k] as i128 * den as i128 {
                    k -= 1;
                } else {
                    k += 1;
                    self.locs[k] = q;
                    self.num[k] = num;
                    self.den[k] = den;
                    self.count = k + 1;
                    break;
                }
            }
        }
        self.count > 0
    }

    /// Fills `out[q]` with the envelope minimum and `chosen[q]` with the
    /// source index attaining it.
    fn evaluate(&self, f: &[i64], out: &mut [i64], chosen: &mut [usize]) {
        let mut k = 0usize;
        for q in 0..out.len() {
            while k + 1 < self.count
                && (self.num[k + 1] as i128) < q as i128 * self.den[k + 1] as i128
            {
                k += 1;
            }
            let v = self.locs[k];
            let d = q as i64 - v as i64;
            out[q] = d * d + f[v];
            chosen[q] = v;
        }
    }
}

/// Fuses per-class distance maps: each pixel takes the value from its own
/// class's map; ignore pixels get [`INFINITY_SENTINEL`].
pub fn fuse_distance(per_class: &[(ClassId, DistanceMap)], labels: &LabelMap) -> Result<DistanceMap> {
    let mut by_class: Vec<Option<&DistanceMap>> = vec![None; labels.num_classes() as usize];
    for (class, map) in per_class {
        if !map.grid.same_shape(labels.grid()) {
            return Err(map.grid.shape_error(labels.grid()));
        }
        if let Some(slot) = by_class.get_mut(*class as usize) {
            *slot = Some(map);
        }
    }
    let mut data = vec![INFINITY_SENTINEL; labels.height() * labels.width()];
    for r in 0..labels.height() {
        for c in 0..labels.width() {
            let label = labels.label(r, c);
            if label == labels.ignore_id() {
                continue;
            }
            let map = by_class
                .get(label as usize)
                .copied()
                .flatten()
                .ok_or(Error::MissingClassMap(label))?;
            data[r * labels.width() + c] = map.at(r, c);
        }
    }
    Ok(DistanceMap {
        grid: Grid::from_raw(labels.height(), labels.width(), data)?,
    })
}

/// Decompose + per-class EDT + fuse in one pass, without retaining the
/// per-class maps. Equivalent to
/// `fuse_distance(&per_class_edts(labels), labels)`.
pub fn fused_distance_map(labels: &LabelMap) -> DistanceMap {
    let (map, _) = fused_impl(labels, false);
    map
}

/// Fused distance plus, for every non-ignore pixel, the coordinates of a
/// nearest pixel outside its class.
pub(crate) fn fused_distance_with_nearest(labels: &LabelMap) -> (DistanceMap, Grid<(u32, u32)>) {
    let (map, nearest) = fused_impl(labels, true);
    (map, nearest.expect("requested"))
}

fn fused_impl(labels: &LabelMap, want_nearest: bool) -> (DistanceMap, Option<Grid<(u32, u32)>>) {
    let (h, w) = (labels.height(), labels.width());
    let mut fused = vec![INFINITY_SENTINEL; h * w];
    let mut nearest = want_nearest.then(|| vec![(0u32, 0u32); h * w]);
    for (class, mask) in decompose_labels(labels) {
        let (dist_sq, class_nearest) = edt_impl(&mask, want_nearest);
        for idx in 0..h * w {
            if labels.grid().data()[idx] != class {
                continue;
            }
            fused[idx] = if dist_sq[idx] == NO_SOURCE {
                INFINITY_SENTINEL
            } else {
                (dist_sq[idx] as f64).sqrt() as f32
            };
            if let (Some(nearest), Some(class_nearest)) = (nearest.as_mut(), class_nearest.as_ref())
            {
                nearest[idx] = class_nearest[idx];
            }
        }
    }
    let map = DistanceMap {
        grid: Grid::from_raw(h, w, fused).expect("shape preserved"),
    };
    let nearest = nearest.map(|n| Grid::from_raw(h, w, n).expect("shape preserved"));
    (map, nearest)
}

/// Thresholds a fused distance map into a boundary mask: strictly
/// `distance < gamma`.
pub fn boundary_from_distance(d: &DistanceMap, gamma: f32) -> Result<BoundaryMask> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidGamma(gamma));
    }
    let grid = Grid::from_fn(d.height(), d.width(), |r, c| d.at(r, c) < gamma)
        .expect("distance map dimensions are valid");
    Ok(BoundaryMask { grid, gamma })
}
