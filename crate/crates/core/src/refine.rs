//! Applying offset fields to coarse label maps and instance masks.
//!
//! Refinement is a gather: every pixel with a nonzero offset takes the label
//! found at `p + offset` in the ORIGINAL map (never the partially refined
//! one), with nearest-pixel lookup and border clamping. Offsets are integral
//! by construction so no interpolation is involved.

use crate::direction::OffsetField;
use crate::distance::BoundaryMask;
use crate::error::{Error, Result};
use crate::grid::{apply_offset, Grid, Instance, InstanceSet, LabelMap, Offset, PixelCoord};

/// How thick boundary bands ("fake interior" landings) are handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// One hop with the offsets rescaled by a constant factor. The default.
    Rescale,
    /// Repeated unit hops until an interior pixel is reached.
    Iterative,
}

/// Refinement parameters. `scale` applies to the rescale scheme (the offset
/// field is multiplied before the single hop); the iterative scheme always
/// hops by unit offsets and is bounded by `max_iterations`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefinementConfig {
    pub scheme: Scheme,
    pub scale: u32,
    pub max_iterations: u32,
}

impl Default for RefinementConfig {
    fn default() -> Self {
        RefinementConfig {
            scheme: Scheme::Rescale,
            scale: 2,
            max_iterations: 10,
        }
    }
}

fn check_shapes<T>(grid: &Grid<T>, offsets: &OffsetField) -> Result<()> {
    if !grid.same_shape(offsets.grid()) {
        return Err(grid.shape_error(offsets.grid()));
    }
    Ok(())
}

/// Single-hop refinement: `refined(p) = coarse(clamp(p + offset(p)))` at
/// every pixel with a nonzero offset; zero-offset pixels are copied
/// unchanged. The input is never mutated.
pub fn refine_labels(coarse: &LabelMap, offsets: &OffsetField) -> Result<LabelMap> {
    check_shapes(coarse.grid(), offsets)?;
    let (h, w) = (coarse.height(), coarse.width());
    let grid = Grid::from_fn(h, w, |r, c| {
        let o = offsets.at(r, c);
        if o.is_zero() {
            coarse.label(r, c)
        } else {
            let t = apply_offset(PixelCoord { row: r, col: c }, o, h, w);
            coarse.label(t.row, t.col)
        }
    })?;
    Ok(coarse.with_same_meta(grid))
}

/// Divides a stored offset back to its unit direction. Entries are exact
/// multiples of the field's scale by construction.
#[inline]
fn unit_offset(o: Offset, scale: u32) -> Offset {
    let s = scale as i16;
    Offset::new(o.x / s, o.y / s)
}

/// Iterative refinement: each boundary pixel follows unit offsets hop by hop
/// until it lands on an off-boundary (interior) pixel or `max_iterations` is
/// reached, then takes the label at the stopping pixel. Off-boundary pixels
/// are copied unchanged; cycles are broken by the iteration cap.
pub fn refine_iterative(
    coarse: &LabelMap,
    offsets: &OffsetField,
    boundary: &BoundaryMask,
    cfg: &RefinementConfig,
) -> Result<LabelMap> {
    check_shapes(coarse.grid(), offsets)?;
    if !coarse.grid().same_shape(boundary.grid()) {
        return Err(coarse.grid().shape_error(boundary.grid()));
    }
    let (h, w) = (coarse.height(), coarse.width());
    let grid = Grid::from_fn(h, w, |r, c| {
        if !boundary.at(r, c) {
            return coarse.label(r, c);
        }
        let mut cur = PixelCoord { row: r, col: c };
        for _ in 0..cfg.max_iterations {
            let o = unit_offset(offsets.at(cur.row, cur.col), offsets.scale());
            if o.is_zero() {
                break;
            }
            cur = apply_offset(cur, o, h, w);
            if !boundary.at(cur.row, cur.col) {
                break;
            }
        }
        coarse.label(cur.row, cur.col)
    })?;
    Ok(coarse.with_same_meta(grid))
}

/// Refines each instance mask independently with the shared offset field:
/// `mask(p) = mask(clamp(p + offset(p)))` at nonzero-offset pixels.
/// Categories and instance order are preserved. Under the iterative scheme
/// the walk treats zero-offset pixels as interior (offset fields are zero
/// exactly off the boundary band).
pub fn refine_instances(
    predictions: &InstanceSet,
    offsets: &OffsetField,
    cfg: &RefinementConfig,
) -> Result<InstanceSet> {
    let (h, w) = (predictions.height(), predictions.width());
    if offsets.height() != h || offsets.width() != w {
        return Err(Error::ShapeMismatch {
            left_height: h,
            left_width: w,
            right_height: offsets.height(),
            right_width: offsets.width(),
        });
    }
    let refined = predictions
        .instances()
        .iter()
        .map(|inst| {
            let mask = Grid::from_fn(h, w, |r, c| {
                let o = offsets.at(r, c);
                if o.is_zero() {
                    return inst.mask.at(r, c);
                }
                let stop = match cfg.scheme {
                    Scheme::Rescale => apply_offset(PixelCoord { row: r, col: c }, o, h, w),
                    Scheme::Iterative => {
                        let mut cur = PixelCoord { row: r, col: c };
                        for _ in 0..cfg.max_iterations {
                            let step = unit_offset(offsets.at(cur.row, cur.col), offsets.scale());
                            if step.is_zero() {
                                break;
                            }
                            cur = apply_offset(cur, step, h, w);
                        }
                        cur
                    }
                };
                inst.mask.at(stop.row, stop.col)
            })?;
            Ok(Instance {
                category: inst.category,
                mask,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    InstanceSet::new(h, w, refined)
}
