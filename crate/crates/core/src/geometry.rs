//! Planar primitives shared by every module: points, axis-aligned
//! rectangles and the segment/rectangle crossing predicate used by the
//! obstacle model.

use serde::{Deserialize, Serialize};

/// A point in the local planar frame, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Lexicographic total order on (x, y), used for canonical sorting.
    pub fn total_cmp(&self, other: &Point) -> std::cmp::Ordering {
        self.x.total_cmp(&other.x).then(self.y.total_cmp(&other.y))
    }
}

/// Arithmetic mean of a non-empty point set; `None` when empty.
pub fn centroid<'a>(points: impl IntoIterator<Item = &'a Point>) -> Option<Point> {
    let mut n = 0usize;
    let (mut sx, mut sy) = (0.0, 0.0);
    for p in points {
        sx += p.x;
        sy += p.y;
        n += 1;
    }
    (n > 0).then(|| Point::new(sx / n as f64, sy / n as f64))
}

/// Axis-aligned rectangle `[xmin, xmax] x [ymin, ymax]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub xmin: f64,
    pub ymin: f64,
    pub xmax: f64,
    pub ymax: f64,
}

impl Rect {
    pub const fn new(xmin: f64, ymin: f64, xmax: f64, ymax: f64) -> Self {
        Self { xmin, ymin, xmax, ymax }
    }

    /// True when every bound is finite and the rectangle has positive area.
    pub fn is_valid(&self) -> bool {
        [self.xmin, self.ymin, self.xmax, self.ymax].iter().all(|v| v.is_finite())
            && self.xmin < self.xmax
            && self.ymin < self.ymax
    }

    pub fn width(&self) -> f64 {
        self.xmax - self.xmin
    }

    pub fn height(&self) -> f64 {
        self.ymax - self.ymin
    }

    pub fn lower_left(&self) -> Point {
        Point::new(self.xmin, self.ymin)
    }

    /// Closed containment.
    pub fn contains(&self, p: &Point) -> bool {
        p.x >= self.xmin && p.x <= self.xmax && p.y >= self.ymin && p.y <= self.ymax
    }

    /// Strict (open) containment.
    pub fn interior_contains(&self, p: &Point) -> bool {
        p.x > self.xmin && p.x < self.xmax && p.y > self.ymin && p.y < self.ymax
    }

    /// Smallest rectangle containing every point, `None` for an empty input.
    /// Degenerate extents (a single point, a line) are returned as-is.
    pub fn bounding<'a>(points: impl IntoIterator<Item = &'a Point>) -> Option<Rect> {
        let mut it = points.into_iter();
        let first = it.next()?;
        let mut r = Rect::new(first.x, first.y, first.x, first.y);
        for p in it {
            r.xmin = r.xmin.min(p.x);
            r.ymin = r.ymin.min(p.y);
            r.xmax = r.xmax.max(p.x);
            r.ymax = r.ymax.max(p.y);
        }
        Some(r)
    }

    /// Whether the segment `a`-`b` passes through the open interior of the
    /// rectangle with a non-degenerate overlap.
    ///
    /// Liang-Barsky clipping: the segment is parameterised as `a + t (b - a)`,
    /// each slab narrows the admissible `t` interval, and the segment crosses
    /// iff the final interval `(t0, t1)` has positive length. Grazing an edge
    /// or touching a corner leaves a zero-length (or empty) interval, so it is
    /// not a crossing.
    pub fn crossed_by(&self, a: &Point, b: &Point) -> bool {
        let dx = b.x - a.x;
        let dy = b.y - a.y;
        let mut t0 = 0.0_f64;
        let mut t1 = 1.0_f64;
        let slabs = [
            (-dx, a.x - self.xmin),
            (dx, self.xmax - a.x),
            (-dy, a.y - self.ymin),
            (dy, self.ymax - a.y),
        ];
        for (p, q) in slabs {
            if p == 0.0 {
                // Parallel to this slab: must lie strictly inside it.
                if q <= 0.0 {
                    return false;
                }
            } else {
                let t = q / p;
                if p < 0.0 {
                    t0 = t0.max(t);
                } else {
                    t1 = t1.min(t);
                }
                if t0 >= t1 {
                    return false;
                }
            }
        }
        t0 < t1
    }
}
