//! Uniform square grid over the plane and RSS binning.
//!
//! Both indices use floor semantics: cell `k` along an axis is the half-open
//! interval `[origin + k*size, origin + (k+1)*size)`, and RSS bin `b` is
//! `[b*s, (b+1)*s)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Point, Rect};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("cell size must be positive and finite, got {0}")]
    InvalidCellSize(f64),
    #[error("grid origin must be finite")]
    InvalidOrigin,
    #[error("bin size must be positive and finite, got {0}")]
    InvalidBinSize(f64),
    #[error("RSS value must be finite, got {0}")]
    NonFiniteRss(f64),
}

/// Integer cell coordinates. Ordered lexicographically by `(ix, iy)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GridId {
    pub ix: i64,
    pub iy: i64,
}

impl GridId {
    pub const fn new(ix: i64, iy: i64) -> Self {
        Self { ix, iy }
    }
}

impl std::fmt::Display for GridId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.ix, self.iy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    origin: Point,
    cell_size: f64,
}

impl GridSpec {
    pub fn new(origin: Point, cell_size: f64) -> Result<Self, GridError> {
        if !(cell_size.is_finite() && cell_size > 0.0) {
            return Err(GridError::InvalidCellSize(cell_size));
        }
        if !origin.is_finite() {
            return Err(GridError::InvalidOrigin);
        }
        Ok(Self { origin, cell_size })
    }

    /// Grid anchored at the lower-left corner of the points' bounding box
    /// (the origin at `(0, 0)` when there are no points).
    pub fn covering<'a>(
        points: impl IntoIterator<Item = &'a Point>,
        cell_size: f64,
    ) -> Result<Self, GridError> {
        let origin = Rect::bounding(points).map(|r| r.lower_left()).unwrap_or_default();
        Self::new(origin, cell_size)
    }

    pub fn origin(&self) -> Point {
        self.origin
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    /// Length of a cell diagonal.
    pub fn diagonal(&self) -> f64 {
        self.cell_size * std::f64::consts::SQRT_2
    }

    pub fn grid_of(&self, p: &Point) -> GridId {
        GridId {
            ix: floor_index(p.x - self.origin.x, self.cell_size),
            iy: floor_index(p.y - self.origin.y, self.cell_size),
        }
    }

    pub fn center_of(&self, g: GridId) -> Point {
        Point::new(
            self.origin.x + (g.ix as f64 + 0.5) * self.cell_size,
            self.origin.y + (g.iy as f64 + 0.5) * self.cell_size,
        )
    }

    /// The closed cell rectangle of `g`.
    pub fn cell_rect(&self, g: GridId) -> Rect {
        let x0 = self.origin.x + g.ix as f64 * self.cell_size;
        let y0 = self.origin.y + g.iy as f64 * self.cell_size;
        Rect::new(x0, y0, x0 + self.cell_size, y0 + self.cell_size)
    }
}

/// `floor(v / size)`, corrected so that the result `k` always satisfies
/// `k*size <= v < (k+1)*size` when evaluated in floating point. The plain
/// quotient can land one ulp on the wrong side of an integer.
fn floor_index(v: f64, size: f64) -> i64 {
    let mut k = (v / size).floor();
    if k * size > v {
        k -= 1.0;
    } else if (k + 1.0) * size <= v {
        k += 1.0;
    }
    k as i64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinSpec {
    bin_size: f64,
}

impl BinSpec {
    pub fn new(bin_size: f64) -> Result<Self, GridError> {
        if !(bin_size.is_finite() && bin_size > 0.0) {
            return Err(GridError::InvalidBinSize(bin_size));
        }
        Ok(Self { bin_size })
    }

    pub fn bin_size(&self) -> f64 {
        self.bin_size
    }

    /// `floor(r / s)`.
    pub fn bin_rss(&self, r: f64) -> Result<i64, GridError> {
        if !r.is_finite() {
            return Err(GridError::NonFiniteRss(r));
        }
        Ok(floor_index(r, self.bin_size))
    }
}

impl Default for BinSpec {
    fn default() -> Self {
        Self { bin_size: 1.0 }
    }
}
