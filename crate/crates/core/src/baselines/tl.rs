//! Range-based least-squares lateration.
//!
//! Each reading is converted to a range with the inverse path-loss model and
//! the position minimizing `Σ (|a_i − p|² − d_i²)²` is found with
//! Levenberg-Marquardt, starting from the centroid of the antennas weighted
//! by inverse range.

use serde::{Deserialize, Serialize};

use crate::estimate::{EstimateStatus, LocalizeError, LocationEstimate};
use crate::geometry::Point;
use crate::scenario::{Antenna, Measurement, PathLossModel};

/// Minimum number of ranged antennas for a unique planar fix.
pub const MIN_OBSERVATIONS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TlOptions {
    pub max_iterations: usize,
    /// Converged once an accepted step is shorter than this (meters).
    pub step_tolerance: f64,
    /// Relative objective gap under which two mirror minima count as equal.
    pub mirror_tolerance: f64,
}

impl Default for TlOptions {
    fn default() -> Self {
        Self { max_iterations: 100, step_tolerance: 1e-6, mirror_tolerance: 1e-9 }
    }
}

/// The lateration objective over `(antenna position, range)` pairs.
pub fn lateration_objective(p: &Point, ranges: &[(Point, f64)]) -> f64 {
    ranges
        .iter()
        .map(|(a, d)| {
            let r = (a.x - p.x).powi(2) + (a.y - p.y).powi(2) - d * d;
            r * r
        })
        .sum()
}

/// Ranges for every reading whose antenna position is known.
pub fn observed_ranges(m: &Measurement, antennas: &[Antenna], model: &PathLossModel) -> Vec<(Point, f64)> {
    m.iter()
        .filter_map(|(id, r)| antennas.iter().find(|a| a.id == id).map(|a| (a.position, model.distance_of(r))))
        .collect()
}

/// Centroid of the antennas weighted by `1 / range`.
pub fn weighted_start(ranges: &[(Point, f64)]) -> Point {
    let (mut sx, mut sy, mut sw) = (0.0, 0.0, 0.0);
    for (a, d) in ranges {
        let w = 1.0 / d.max(f64::MIN_POSITIVE);
        sx += w * a.x;
        sy += w * a.y;
        sw += w;
    }
    Point::new(sx / sw, sy / sw)
}

/// Closed-form least-squares fix from the range equations made linear by
/// subtracting their mean. `None` when the antennas are collinear.
pub fn linearized_start(ranges: &[(Point, f64)]) -> Option<Point> {
    let n = ranges.len() as f64;
    let ax = ranges.iter().map(|(a, _)| a.x).sum::<f64>() / n;
    let ay = ranges.iter().map(|(a, _)| a.y).sum::<f64>() / n;
    let k = |a: &Point, d: f64| a.x * a.x + a.y * a.y - d * d;
    let kbar = ranges.iter().map(|(a, d)| k(a, *d)).sum::<f64>() / n;
    // 2 (a_i - mean a) . p = k_i - mean k
    let (mut m11, mut m12, mut m22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (a, d) in ranges {
        let (ux, uy) = (2.0 * (a.x - ax), 2.0 * (a.y - ay));
        let rhs = k(a, *d) - kbar;
        m11 += ux * ux;
        m12 += ux * uy;
        m22 += uy * uy;
        b1 += ux * rhs;
        b2 += uy * rhs;
    }
    let det = m11 * m22 - m12 * m12;
    if det <= 1e-12 * (m11 + m22).powi(2) {
        return None;
    }
    Some(Point::new((m22 * b1 - m12 * b2) / det, (m11 * b2 - m12 * b1) / det))
}

struct Fit {
    point: Point,
    objective: f64,
    converged: bool,
}

fn levenberg_marquardt(ranges: &[(Point, f64)], start: Point, opts: &TlOptions) -> Fit {
    let mut p = start;
    let mut f = lateration_objective(&p, ranges);
    let mut lambda = 1e-3;
    for _ in 0..opts.max_iterations {
        // Residuals r_i = |a_i - p|^2 - d_i^2, gradient dr_i/dp = 2 (p - a_i).
        let (mut h11, mut h12, mut h22, mut g1, mut g2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (a, d) in ranges {
            let jx = 2.0 * (p.x - a.x);
            let jy = 2.0 * (p.y - a.y);
            let r = (a.x - p.x).powi(2) + (a.y - p.y).powi(2) - d * d;
            h11 += jx * jx;
            h12 += jx * jy;
            h22 += jy * jy;
            g1 += jx * r;
            g2 += jy * r;
        }
        if g1 == 0.0 && g2 == 0.0 {
            return Fit { point: p, objective: f, converged: true };
        }
        let floor = 1e-12 * (h11 + h22).max(1.0);
        loop {
            let a11 = h11 + lambda * h11.max(floor);
            let a22 = h22 + lambda * h22.max(floor);
            let det = a11 * a22 - h12 * h12;
            if det > 0.0 && det.is_finite() {
                let dx = -(a22 * g1 - h12 * g2) / det;
                let dy = -(a11 * g2 - h12 * g1) / det;
                let cand = Point::new(p.x + dx, p.y + dy);
                let fc = lateration_objective(&cand, ranges);
                if fc < f {
                    p = cand;
                    f = fc;
                    lambda = (lambda / 10.0).max(1e-15);
                    if dx.hypot(dy) < opts.step_tolerance {
                        return Fit { point: p, objective: f, converged: true };
                    }
                    break;
                }
            }
            lambda *= 10.0;
            if lambda > 1e20 {
                // No descent direction left at machine precision.
                return Fit { point: p, objective: f, converged: true };
            }
        }
    }
    Fit { point: p, objective: f, converged: false }
}

/// Unit normal of the best-fit line through the antennas when they are
/// collinear, `None` otherwise.
fn collinear_normal(ranges: &[(Point, f64)]) -> Option<(Point, Point)> {
    let n = ranges.len() as f64;
    let cx = ranges.iter().map(|(a, _)| a.x).sum::<f64>() / n;
    let cy = ranges.iter().map(|(a, _)| a.y).sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (a, _) in ranges {
        let (dx, dy) = (a.x - cx, a.y - cy);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    // Smallest eigenvalue of the scatter matrix measures off-line spread.
    let tr = sxx + syy;
    let disc = ((sxx - syy).powi(2) + 4.0 * sxy * sxy).sqrt();
    let small = (tr - disc) / 2.0;
    if small > 1e-12 * tr.max(f64::MIN_POSITIVE) {
        return None;
    }
    let angle = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    let dir = Point::new(angle.cos(), angle.sin());
    Some((Point::new(cx, cy), Point::new(-dir.y, dir.x)))
}

fn reflect(p: &Point, origin: &Point, normal: &Point) -> Point {
    let s = (p.x - origin.x) * normal.x + (p.y - origin.y) * normal.y;
    Point::new(p.x - 2.0 * s * normal.x, p.y - 2.0 * s * normal.y)
}

pub fn tl_localize(
    m: &Measurement,
    antennas: &[Antenna],
    model: &PathLossModel,
    opts: &TlOptions,
) -> Result<LocationEstimate, LocalizeError> {
    let ranges = observed_ranges(m, antennas, model);
    if ranges.len() < MIN_OBSERVATIONS {
        return Err(LocalizeError::InsufficientObservations { needed: MIN_OBSERVATIONS, have: ranges.len() });
    }
    let start = weighted_start(&ranges);
    let mut best = levenberg_marquardt(&ranges, start, opts);
    // The objective is not convex; a second descent from the linearized fix
    // avoids the local minima the centroid start can fall into.
    if let Some(lin) = linearized_start(&ranges) {
        let fit = levenberg_marquardt(&ranges, lin, opts);
        if fit.objective < best.objective {
            best = fit;
        }
    }
    let mut ambiguous = false;

    if let Some((origin, normal)) = collinear_normal(&ranges) {
        // From a start on the antenna line the normal gradient vanishes, so
        // also descend from a start pushed off the line.
        let push = ranges.iter().map(|(_, d)| *d).sum::<f64>() / ranges.len() as f64;
        let off = Point::new(start.x + push * normal.x, start.y + push * normal.y);
        let fit = levenberg_marquardt(&ranges, off, opts);
        if fit.objective < best.objective {
            best = fit;
        }
        let mirror = reflect(&best.point, &origin, &normal);
        let fm = lateration_objective(&mirror, &ranges);
        let scale = best.objective.abs().max(fm.abs()).max(1.0);
        ambiguous = mirror.distance(&best.point) > opts.step_tolerance && (fm - best.objective).abs() <= opts.mirror_tolerance * scale;
    }

    let status = if best.converged && !ambiguous { EstimateStatus::Resolved } else { EstimateStatus::Ambiguous };
    Ok(LocationEstimate { position: best.point, status, candidates_remaining: 1 })
}
