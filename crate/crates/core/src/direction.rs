//! Direction fields on distance maps: 9-tap Sobel gradients, angle
//! quantization into `m` categories, the category-to-offset tables, and the
//! ground-truth pipelines that chain decompose -> EDT -> Sobel -> quantize.
//!
//! Angles use the math convention (x = +col, y = up). The distance map of a
//! region rises away from its boundary, so the gradient points toward the
//! region interior; quantizing that angle and mapping it through the offset
//! table yields the per-pixel displacement applied at refinement time.

use crate::distance::{boundary_from_distance, fused_distance_map, BoundaryMask, DistanceMap};
use crate::error::{Error, Result};
use crate::grid::{Grid, InstanceSet, LabelMap, Offset};

/// 9-tap derivative kernel: [-1, 0, 1] convolved three times with [1, 2, 1].
const DERIV_9: [f64; 9] = [-1.0, -6.0, -14.0, -14.0, 0.0, 14.0, 14.0, 6.0, 1.0];

/// 9-tap smoothing kernel: binomial coefficients of order 8.
const SMOOTH_9: [f64; 9] = [1.0, 8.0, 28.0, 56.0, 70.0, 56.0, 28.0, 8.0, 1.0];

/// Continuous direction field in degrees, range `[0, 360)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleField {
    grid: Grid<f32>,
}

impl AngleField {
    pub fn grid(&self) -> &Grid<f32> {
        &self.grid
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize) -> f32 {
        self.grid.at(row, col)
    }
}

/// Per-pixel direction category in `[0, m)`, meaningful on boundary pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedDirectionMap {
    grid: Grid<u8>,
    m: u8,
}

impl QuantizedDirectionMap {
    pub fn new(grid: Grid<u8>, m: u8) -> Result<Self> {
        validate_direction_count(m)?;
        if let Some(&bad) = grid.data().iter().find(|&&v| v >= m) {
            return Err(Error::CategoryOutOfRange { category: bad, m });
        }
        Ok(QuantizedDirectionMap { grid, m })
    }

    pub fn grid(&self) -> &Grid<u8> {
        &self.grid
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize) -> u8 {
        self.grid.at(row, col)
    }

    pub fn m(&self) -> u8 {
        self.m
    }

    pub fn height(&self) -> usize {
        self.grid.height()
    }

    pub fn width(&self) -> usize {
        self.grid.width()
    }
}

/// Per-pixel integer displacement field; zero off-boundary. `scale` records
/// the rescale factor baked into the entries.
#[derive(Debug, Clone, PartialEq)]
pub struct OffsetField {
    grid: Grid<Offset>,
    scale: u32,
}

impl OffsetField {
    pub fn new(grid: Grid<Offset>, scale: u32) -> Result<Self> {
        if scale < 1 {
            return Err(Error::InvalidScale);
        }
        Ok(OffsetField { grid, scale })
    }

    pub fn grid(&self) -> &Grid<Offset> {
        &self.grid
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize) -> Offset {
        self.grid.at(row, col)
    }

    pub fn scale(&self) -> u32 {
        self.scale
    }

    pub fn height(&self) -> usize {
        self.grid.height()
    }

    pub fn width(&self) -> usize {
        self.grid.width()
    }

    /// Multiplies every entry (and the recorded scale) by `factor`.
    pub fn rescaled(&self, factor: u32) -> Result<OffsetField> {
        if factor < 1 {
            return Err(Error::InvalidScale);
        }
        let grid = Grid::from_fn(self.height(), self.width(), |r, c| {
            self.at(r, c).scaled(factor as i16)
        })?;
        Ok(OffsetField {
            grid,
            scale: self.scale * factor,
        })
    }
}

fn validate_direction_count(m: u8) -> Result<()> {
    match m {
        4 | 8 | 16 => Ok(()),
        other => Err(Error::UnsupportedDirectionCount(other)),
    }
}

/// Separable 9x9 Sobel gradients of a distance map with replicate padding.
///
/// Returns `(gx, gy)` in the math convention: `gx` responds to increase
/// along +col, `gy` to increase upward (negated row derivative).
pub fn sobel_gradient_9(d: &DistanceMap) -> (Grid<f32>, Grid<f32>) {
    let (h, w) = (d.height(), d.width());
    let v = d.grid().data();
    let clamp = |i: i64, n: usize| i.clamp(0, n as i64 - 1) as usize;

    // gx: smooth along rows, differentiate along columns.
    let mut tmp = vec![0f64; h * w];
    for r in 0..h {
        for c in 0..w {
            let mut acc = 0f64;
            for (i, s) in SMOOTH_9.iter().enumerate() {
                let rr = clamp(r as i64 + i as i64 - 4, h);
                acc += s * v[rr * w + c] as f64;
            }
            tmp[r * w + c] = acc;
        }
    }
    let mut gx = vec![0f32; h * w];
    for r in 0..h {
        for c in 0..w {
            let mut acc = 0f64;
            for (j, dk) in DERIV_9.iter().enumerate() {
                let cc = clamp(c as i64 + j as i64 - 4, w);
                acc += dk * tmp[r * w + cc];
            }
            gx[r * w + c] = acc as f32;
        }
    }

    // gy: smooth along columns, differentiate along rows, negated so that
    // +y points up.
    for r in 0..h {
        for c in 0..w {
            let mut acc = 0f64;
            for (j, s) in SMOOTH_9.iter().enumerate() {
                let cc = clamp(c as i64 + j as i64 - 4, w);
                acc += s * v[r * w + cc] as f64;
            }
            tmp[r * w + c] = acc;
        }
    }
    let mut gy = vec![0f32; h * w];
    for r in 0..h {
        for c in 0..w {
            let mut acc = 0f64;
            for (i, dk) in DERIV_9.iter().enumerate() {
                let rr = clamp(r as i64 + i as i64 - 4, h);
                acc += dk * tmp[rr * w + c];
            }
            gy[r * w + c] = (-acc) as f32;
        }
    }

    (
        Grid::from_raw(h, w, gx).expect("shape preserved"),
        Grid::from_raw(h, w, gy).expect("shape preserved"),
    )
}

#[inline]
fn angle_deg_from(gx: f64, gy: f64) -> f32 {
    if gx == 0.0 && gy == 0.0 {
        return 0.0;
    }
    let mut deg = gy.atan2(gx).to_degrees();
    if deg < 0.0 {
        deg += 360.0;
    }
    if deg >= 360.0 {
        deg = 0.0;
    }
    deg as f32
}

/// Converts gradients to an angle field in `[0, 360)`. Zero gradients map to
/// 0 degrees by convention.
pub fn angle_from_gradient(gx: &Grid<f32>, gy: &Grid<f32>) -> Result<AngleField> {
    if !gx.same_shape(gy) {
        return Err(gx.shape_error(gy));
    }
    let grid = Grid::from_fn(gx.height(), gx.width(), |r, c| {
        angle_deg_from(gx.at(r, c) as f64, gy.at(r, c) as f64)
    })?;
    Ok(AngleField { grid })
}

#[inline]
fn quantize_angle(deg: f32, m: u8) -> u8 {
    let deg = deg as f64;
    match m {
        // Quadrant bins: [0,90) -> 0, [90,180) -> 1, ...
        4 => (deg / 90.0).floor() as u8,
        // Sectors centered on multiples of the step angle.
        8 => ((deg / 45.0).round() as u32 % 8) as u8,
        16 => ((deg / 22.5).round() as u32 % 16) as u8,
        _ => unreachable!("validated"),
    }
}

/// Quantizes an angle field into `m` direction categories.
///
/// `m = 4` uses quadrant bins `[k*90, (k+1)*90)`; `m = 8` and `m = 16` use
/// sectors centered on multiples of 45 and 22.5 degrees so that every
/// category maps to a distinct offset.
pub fn quantize_directions(angles: &AngleField, m: u8) -> Result<QuantizedDirectionMap> {
    validate_direction_count(m)?;
    let grid = Grid::from_fn(angles.grid.height(), angles.grid.width(), |r, c| {
        quantize_angle(angles.at(r, c), m)
    })?;
    Ok(QuantizedDirectionMap { grid, m })
}

const OFFSETS_M4: [(i16, i16); 4] = [(1, 1), (-1, 1), (-1, -1), (1, -1)];
const OFFSETS_M8: [(i16, i16); 8] = [
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
    (0, -1),
    (1, -1),
];
const OFFSETS_M16: [(i16, i16); 16] = [
    (2, 0),
    (2, 1),
    (1, 1),
    (1, 2),
    (0, 2),
    (-1, 2),
    (-1, 1),
    (-2, 1),
    (-2, 0),
    (-2, -1),
    (-1, -1),
    (-1, -2),
    (0, -2),
    (1, -2),
    (1, -1),
    (2, -1),
];

/// Math-convention offset for a direction category.
///
/// `m = 4`: the four diagonal quadrant offsets. `m = 8`: the rounded
/// radius-sqrt(2) ring, i.e. the 8-neighborhood. `m = 16`: the rounded
/// radius-2 ring.
pub fn direction_to_offset(category: u8, m: u8) -> Result<Offset> {
    validate_direction_count(m)?;
    if category >= m {
        return Err(Error::CategoryOutOfRange { category, m });
    }
    let (x, y) = match m {
        4 => OFFSETS_M4[category as usize],
        8 => OFFSETS_M8[category as usize],
        _ => OFFSETS_M16[category as usize],
    };
    Ok(Offset::new(x, y))
}

/// Materializes the offset field: `scale` times the category offset on
/// boundary pixels, zero elsewhere.
pub fn build_offset_field(
    directions: &QuantizedDirectionMap,
    boundary: &BoundaryMask,
    scale: u32,
) -> Result<OffsetField> {
    if scale < 1 {
        return Err(Error::InvalidScale);
    }
    if !directions.grid.same_shape(boundary.grid()) {
        return Err(directions.grid.shape_error(boundary.grid()));
    }
    let m = directions.m;
    let grid = Grid::from_fn(directions.height(), directions.width(), |r, c| {
        if boundary.at(r, c) {
            direction_to_offset(directions.at(r, c), m)
                .expect("categories validated at construction")
                .scaled(scale as i16)
        } else {
            Offset::ZERO
        }
    })?;
    Ok(OffsetField { grid, scale })
}

/// Region label per pixel; `None` marks pixels excluded from direction
/// computation (ignore pixels).
type RegionGrid = Grid<Option<u32>>;

/// Sobel gradient at one pixel of a region's distance map, reading the merged
/// map where the region matches and 0 elsewhere. This equals evaluating the
/// full per-region Sobel because a region's distance map is exactly: merged
/// value on its own pixels, 0 everywhere else.
fn sobel_at_region(merged: &Grid<f32>, regions: &RegionGrid, r: usize, c: usize) -> (f64, f64) {
    let (h, w) = (merged.height(), merged.width());
    let region = regions.at(r, c);
    let mut patch = [[0f64; 9]; 9];
    for (i, row) in patch.iter_mut().enumerate() {
        let rr = (r as i64 + i as i64 - 4).clamp(0, h as i64 - 1) as usize;
        for (j, cell) in row.iter_mut().enumerate() {
            let cc = (c as i64 + j as i64 - 4).clamp(0, w as i64 - 1) as usize;
            if regions.at(rr, cc) == region {
                *cell = merged.at(rr, cc) as f64;
            }
        }
    }
    let mut gx = 0f64;
    for j in 0..9 {
        let mut smooth = 0f64;
        for (i, row) in patch.iter().enumerate() {
            smooth += SMOOTH_9[i] * row[j];
        }
        gx += DERIV_9[j] * smooth;
    }
    let mut gy = 0f64;
    for (i, row) in patch.iter().enumerate() {
        let mut smooth = 0f64;
        for (j, cell) in row.iter().enumerate() {
            smooth += SMOOTH_9[j] * cell;
        }
        gy += DERIV_9[i] * smooth;
    }
    (gx, -gy)
}

fn quantized_from_regions(
    merged: &DistanceMap,
    regions: &RegionGrid,
    m: u8,
) -> QuantizedDirectionMap {
    let grid = Grid::from_fn(merged.height(), merged.width(), |r, c| {
        if regions.at(r, c).is_none() {
            return 0;
        }
        let (gx, gy) = sobel_at_region(merged.grid(), regions, r, c);
        quantize_angle(angle_deg_from(gx, gy), m)
    })
    .expect("distance map dimensions are valid");
    QuantizedDirectionMap { grid, m }
}

/// Ground-truth generation for semantic labels: per-class EDT, fused
/// boundary mask, and per-pixel own-class Sobel directions. Direction
/// categories exist at every non-ignore pixel but are only meaningful where
/// the boundary mask is set.
pub fn gt_direction_pipeline(
    labels: &LabelMap,
    gamma: f32,
    m: u8,
) -> Result<(BoundaryMask, QuantizedDirectionMap)> {
    validate_direction_count(m)?;
    let fused = fused_distance_map(labels);
    let boundary = boundary_from_distance(&fused, gamma)?;
    let regions = Grid::from_fn(labels.height(), labels.width(), |r, c| {
        let v = labels.label(r, c);
        (v != labels.ignore_id()).then_some(v as u32)
    })?;
    let directions = quantized_from_regions(&fused, &regions, m);
    Ok((boundary, directions))
}

/// Ground-truth generation for instance masks: per-instance EDT merged by
/// pixel ownership, background treated as its own region, then the same
/// Sobel/quantize stages as the semantic pipeline.
pub fn instance_gt_pipeline(
    instances: &InstanceSet,
    gamma: f32,
    m: u8,
) -> Result<(BoundaryMask, QuantizedDirectionMap)> {
    if instances.is_empty() {
        return Err(Error::EmptyInstanceSet);
    }
    validate_direction_count(m)?;
    let (h, w) = (instances.height(), instances.width());
    let owner = instances.ownership();
    // Background is region 0; instance i is region i + 1. Overlaps are
    // already resolved by ownership (later instance wins).
    let regions: RegionGrid =
        Grid::from_fn(h, w, |r, c| Some(owner.at(r, c).map_or(0, |i| i + 1)))?;
    let mut merged = vec![0f32; h * w];
    for region in 0..=instances.len() as u32 {
        let mask = Grid::from_fn(h, w, |r, c| regions.at(r, c) == Some(region))?;
        if !mask.data().iter().any(|&b| b) {
            continue;
        }
        let dist = crate::distance::edt_exact(&mask);
        for idx in 0..h * w {
            if mask.data()[idx] {
                merged[idx] = dist.grid().data()[idx];
            }
        }
    }
    let merged = DistanceMap::from_grid(Grid::from_raw(h, w, merged)?);
    let boundary = boundary_from_distance(&merged, gamma)?;
    let directions = quantized_from_regions(&merged, &regions, m);
    Ok((boundary, directions))
}
