//! Dense 2-D grid containers and the coordinate/angle conventions shared by
//! every stage of the pipeline.
//!
//! Storage is row-major with row 0 at the top. Angles and offsets use the
//! mathematical convention: x points along +col, y points up (i.e. along
//! -row). [`math_offset_to_pixel_delta`] is the single place where the two
//! conventions meet.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Class identifier stored in a label map.
pub type ClassId = u16;

/// Default sentinel for pixels excluded from distances, directions, and
/// metrics (Cityscapes convention).
pub const IGNORE_ID: ClassId = 255;

/// Dense row-major 2-D grid. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    height: usize,
    width: usize,
    data: Vec<T>,
}

impl<T> Grid<T> {
    /// Wraps a row-major buffer. Fails unless `data.len() == height * width`
    /// and both dimensions are at least 1.
    pub fn from_raw(height: usize, width: usize, data: Vec<T>) -> Result<Self> {
        if height == 0 || width == 0 || data.len() != height * width {
            return Err(Error::InvalidDimensions {
                height,
                width,
                len: data.len(),
            });
        }
        Ok(Grid {
            height,
            width,
            data,
        })
    }

    /// Builds a grid by evaluating `f(row, col)` at every pixel.
    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> T) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidDimensions {
                height,
                width,
                len: 0,
            });
        }
        let mut data = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                data.push(f(r, c));
            }
        }
        Ok(Grid {
            height,
            width,
            data,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Flat index of `(row, col)`.
    #[inline]
    pub fn index(&self, row: usize, col: usize) -> usize {
        debug_assert!(row < self.height && col < self.width);
        row * self.width + col
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> &T {
        &self.data[self.index(row, col)]
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn same_shape<U>(&self, other: &Grid<U>) -> bool {
        self.height == other.height && self.width == other.width
    }

    pub(crate) fn shape_error<U>(&self, other: &Grid<U>) -> Error {
        Error::ShapeMismatch {
            left_height: self.height,
            left_width: self.width,
            right_height: other.height,
            right_width: other.width,
        }
    }
}

impl<T: Copy> Grid<T> {
    /// Grid with every pixel set to `value`.
    pub fn filled(height: usize, width: usize, value: T) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidDimensions {
                height,
                width,
                len: 0,
            });
        }
        Ok(Grid {
            height,
            width,
            data: vec![value; height * width],
        })
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize) -> T {
        self.data[row * self.width + col]
    }
}

/// A pixel position in row/col storage order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PixelCoord {
    pub row: usize,
    pub col: usize,
}

/// Clamps a possibly out-of-range `(row, col)` pair into the `h`x`w` grid.
///
/// Idempotent; in-range inputs come back unchanged. This is the border
/// policy used when offsets point past the image edge.
#[inline]
pub fn clamp_coord(row: i64, col: i64, h: usize, w: usize) -> PixelCoord {
    debug_assert!(h >= 1 && w >= 1);
    PixelCoord {
        row: row.clamp(0, h as i64 - 1) as usize,
        col: col.clamp(0, w as i64 - 1) as usize,
    }
}

/// A small integer displacement in the math convention: `x` along +col,
/// `y` up (along -row).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Offset {
    pub x: i16,
    pub y: i16,
}

impl Offset {
    pub const ZERO: Offset = Offset { x: 0, y: 0 };

    pub fn new(x: i16, y: i16) -> Self {
        Offset { x, y }
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.x == 0 && self.y == 0
    }

    pub fn scaled(self, factor: i16) -> Self {
        Offset {
            x: self.x * factor,
            y: self.y * factor,
        }
    }
}

/// Converts a math-convention offset `(ox, oy)` into a row/col storage delta
/// `(drow, dcol) = (-oy, ox)`. Bijective; [`pixel_delta_to_math_offset`] is
/// its inverse.
#[inline]
pub fn math_offset_to_pixel_delta(offset: Offset) -> (i64, i64) {
    (-(offset.y as i64), offset.x as i64)
}

/// Inverse of [`math_offset_to_pixel_delta`].
#[inline]
pub fn pixel_delta_to_math_offset(drow: i64, dcol: i64) -> Offset {
    Offset {
        x: dcol as i16,
        y: (-drow) as i16,
    }
}

/// Applies a math-convention offset to a pixel, clamping at the borders.
#[inline]
pub fn apply_offset(p: PixelCoord, offset: Offset, h: usize, w: usize) -> PixelCoord {
    let (drow, dcol) = math_offset_to_pixel_delta(offset);
    clamp_coord(p.row as i64 + drow, p.col as i64 + dcol, h, w)
}

/// Dense grid of class ids with the class count and ignore sentinel that
/// make it interpretable.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMap {
    grid: Grid<ClassId>,
    num_classes: u16,
    ignore_id: ClassId,
}

impl LabelMap {
    /// Validates that every non-ignore pixel is `< num_classes` and that the
    /// ignore sentinel lies outside the class range.
    pub fn new(grid: Grid<ClassId>, num_classes: u16, ignore_id: ClassId) -> Result<Self> {
        if ignore_id < num_classes {
            return Err(Error::IgnoreIdInClassRange {
                ignore_id,
                num_classes,
            });
        }
        for row in 0..grid.height() {
            for col in 0..grid.width() {
                let v = grid.at(row, col);
                if v != ignore_id && v >= num_classes {
                    return Err(Error::LabelOutOfRange {
                        value: v,
                        row,
                        col,
                        num_classes,
                    });
                }
            }
        }
        Ok(LabelMap {
            grid,
            num_classes,
            ignore_id,
        })
    }

    /// Same as [`LabelMap::new`] with the default ignore sentinel.
    pub fn with_default_ignore(grid: Grid<ClassId>, num_classes: u16) -> Result<Self> {
        LabelMap::new(grid, num_classes, IGNORE_ID)
    }

    /// Rewraps a grid that is already known to honor this map's invariants
    /// (refinement only moves existing values around).
    pub(crate) fn with_same_meta(&self, grid: Grid<ClassId>) -> LabelMap {
        LabelMap {
            grid,
            num_classes: self.num_classes,
            ignore_id: self.ignore_id,
        }
    }

    pub fn grid(&self) -> &Grid<ClassId> {
        &self.grid
    }

    pub fn height(&self) -> usize {
        self.grid.height()
    }

    pub fn width(&self) -> usize {
        self.grid.width()
    }

    pub fn num_classes(&self) -> u16 {
        self.num_classes
    }

    pub fn ignore_id(&self) -> ClassId {
        self.ignore_id
    }

    #[inline]
    pub fn label(&self, row: usize, col: usize) -> ClassId {
        self.grid.at(row, col)
    }

    #[inline]
    pub fn is_ignore(&self, row: usize, col: usize) -> bool {
        self.grid.at(row, col) == self.ignore_id
    }

    /// Sorted list of class ids that occur in the map (ignore excluded).
    pub fn classes_present(&self) -> Vec<ClassId> {
        let mut seen = vec![false; self.num_classes as usize];
        for &v in self.grid.data() {
            if v != self.ignore_id {
                seen[v as usize] = true;
            }
        }
        (0..self.num_classes)
            .filter(|&c| seen[c as usize])
            .collect()
    }
}

/// One instance: a category plus its binary mask.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub category: ClassId,
    pub mask: Grid<bool>,
}

/// A list of instance masks over a shared image size. Masks may overlap;
/// overlaps are resolved by list order with later instances winning.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceSet {
    height: usize,
    width: usize,
    instances: Vec<Instance>,
}

impl InstanceSet {
    pub fn new(height: usize, width: usize, instances: Vec<Instance>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidDimensions {
                height,
                width,
                len: 0,
            });
        }
        for inst in &instances {
            if inst.mask.height() != height || inst.mask.width() != width {
                return Err(Error::ShapeMismatch {
                    left_height: height,
                    left_width: width,
                    right_height: inst.mask.height(),
                    right_width: inst.mask.width(),
                });
            }
        }
        Ok(InstanceSet {
            height,
            width,
            instances,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn instances(&self) -> &[Instance] {
        &self.instances
    }

    /// Per-pixel owner: index of the last instance covering the pixel, or
    /// `None` for background.
    pub fn ownership(&self) -> Grid<Option<u32>> {
        let mut owner = vec![None; self.height * self.width];
        for (idx, inst) in self.instances.iter().enumerate() {
            for (slot, &covered) in owner.iter_mut().zip(inst.mask.data()) {
                if covered {
                    *slot = Some(idx as u32);
                }
            }
        }
        Grid::from_raw(self.height, self.width, owner).expect("owner buffer matches shape")
    }
}
