//! Single-pass leader clustering with a diameter guard.
//!
//! Points are visited in input order. A point joins the first existing
//! cluster (in creation order) whose current center is within `D/2` and
//! whose updated mean would still keep every member, the new point included,
//! within `D/2`. Otherwise it founds a new cluster. Every cluster therefore
//! has diameter at most `D` at all times, not just at insertion.

use std::collections::HashMap;

use crate::geometry::Point;

#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    /// Arithmetic mean of each cluster's members, in creation order.
    pub centers: Vec<Point>,
    /// `assignment[i]` is the cluster index of input point `i`.
    pub assignment: Vec<usize>,
}

struct Cluster {
    members: Vec<Point>,
    sum: Point,
    center: Point,
}

impl Cluster {
    fn mean_with(&self, p: &Point) -> Point {
        let n = (self.members.len() + 1) as f64;
        Point::new((self.sum.x + p.x) / n, (self.sum.y + p.y) / n)
    }
}

/// Spatial hash over cluster centers with cells of side `radius`, so every
/// center within `radius` of a point lies in the 3x3 block around it.
struct CenterIndex {
    radius: f64,
    cells: HashMap<(i64, i64), Vec<usize>>,
}

impl CenterIndex {
    fn key(&self, p: &Point) -> (i64, i64) {
        ((p.x / self.radius).floor() as i64, (p.y / self.radius).floor() as i64)
    }

    fn insert(&mut self, idx: usize, p: &Point) {
        let k = self.key(p);
        self.cells.entry(k).or_default().push(idx);
    }

    fn remove(&mut self, idx: usize, p: &Point) {
        let k = self.key(p);
        if let Some(v) = self.cells.get_mut(&k) {
            v.retain(|&i| i != idx);
        }
    }

    fn near(&self, p: &Point) -> Vec<usize> {
        let (kx, ky) = self.key(p);
        let mut out = Vec::new();
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(v) = self.cells.get(&(kx + dx, ky + dy)) {
                    out.extend_from_slice(v);
                }
            }
        }
        out.sort_unstable();
        out
    }
}

/// Groups points into clusters of diameter at most `max_diameter`.
///
/// Panics if `max_diameter` is not positive; callers validate it.
pub fn cluster_locations(points: &[Point], max_diameter: f64) -> Clustering {
    assert!(max_diameter > 0.0, "cluster diameter must be positive");
    let radius = max_diameter / 2.0;
    let mut clusters: Vec<Cluster> = Vec::new();
    let mut index = CenterIndex { radius, cells: HashMap::new() };
    let mut assignment = Vec::with_capacity(points.len());

    for p in points {
        let mut joined = None;
        for ci in index.near(p) {
            let c = &clusters[ci];
            if c.center.distance(p) > radius {
                continue;
            }
            let mean = c.mean_with(p);
            if mean.distance(p) <= radius && c.members.iter().all(|m| m.distance(&mean) <= radius) {
                joined = Some((ci, mean));
                break;
            }
        }
        match joined {
            Some((ci, mean)) => {
                let c = &mut clusters[ci];
                index.remove(ci, &c.center);
                c.members.push(*p);
                c.sum = Point::new(c.sum.x + p.x, c.sum.y + p.y);
                c.center = mean;
                index.insert(ci, &mean);
                assignment.push(ci);
            }
            None => {
                let ci = clusters.len();
                clusters.push(Cluster { members: vec![*p], sum: *p, center: *p });
                index.insert(ci, p);
                assignment.push(ci);
            }
        }
    }
    Clustering { centers: clusters.into_iter().map(|c| c.center).collect(), assignment }
}
