//! Grid-mean radio fingerprinting.
//!
//! Every data-bearing grid keeps the mean RSS of each antenna observed in
//! it. A query is placed at the center of the grid whose mean vector is
//! nearest, scanning every grid.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::artifact::{format_err, format_grid, parse_grid, parse_grid_id, parse_num, records, ArtifactError};
use crate::estimate::{EstimateStatus, LocalizeError, LocationEstimate, QueryCost};
use crate::grid::{GridId, GridSpec};
use crate::scenario::{AntennaId, LocatedSample, Measurement};

/// Distance returned when two vectors share no antenna.
pub const DISJOINT_DISTANCE: f64 = f64::INFINITY;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeasurementDistanceKind {
    /// Euclidean distance over the antennas both vectors observed.
    #[default]
    EuclideanSharedSupport,
    /// One minus cosine similarity over the shared antennas.
    CosineSharedSupport,
}

impl std::str::FromStr for MeasurementDistanceKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "euclidean" | "euclidean-shared-support" => Ok(Self::EuclideanSharedSupport),
            "cosine" | "cosine-shared-support" => Ok(Self::CosineSharedSupport),
            other => Err(format!("unknown distance {other:?} (expected euclidean or cosine)")),
        }
    }
}

/// Accumulates shared-support sums and finishes into a distance.
#[derive(Default)]
struct Shared {
    n: usize,
    sq: f64,
    dot: f64,
    n1: f64,
    n2: f64,
}

impl Shared {
    #[inline]
    fn push(&mut self, a: f64, b: f64) {
        self.n += 1;
        let d = a - b;
        self.sq += d * d;
        self.dot += a * b;
        self.n1 += a * a;
        self.n2 += b * b;
    }

    fn finish(&self, kind: MeasurementDistanceKind) -> f64 {
        if self.n == 0 {
            return DISJOINT_DISTANCE;
        }
        match kind {
            MeasurementDistanceKind::EuclideanSharedSupport => self.sq.sqrt(),
            MeasurementDistanceKind::CosineSharedSupport => {
                let norm = (self.n1 * self.n2).sqrt();
                if norm == 0.0 {
                    // A zero vector has no direction; treat as orthogonal.
                    1.0
                } else {
                    (1.0 - self.dot / norm).max(0.0)
                }
            }
        }
    }
}

/// Distance between two sparse RSS vectors, ignoring antennas missing from
/// either one.
pub fn measurement_distance(m1: &Measurement, m2: &Measurement, kind: MeasurementDistanceKind) -> f64 {
    let (a, b) = (m1.as_slice(), m2.as_slice());
    let (mut i, mut j) = (0, 0);
    let mut acc = Shared::default();
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                acc.push(a[i].1, b[j].1);
                i += 1;
                j += 1;
            }
        }
    }
    acc.finish(kind)
}

/// Per-grid mean vectors stored densely: one row per grid (sorted by
/// [`GridId`]), one column per antenna (sorted by id), NaN for unobserved.
#[derive(Debug, Clone, PartialEq)]
pub struct RfpIndex {
    spec: GridSpec,
    grids: Vec<GridId>,
    antennas: Vec<AntennaId>,
    means: Vec<f64>,
    counts: Vec<u32>,
}

impl RfpIndex {
    pub fn build<'a>(samples: impl IntoIterator<Item = &'a LocatedSample>, spec: GridSpec) -> Self {
        let mut acc: BTreeMap<GridId, BTreeMap<AntennaId, Vec<f64>>> = BTreeMap::new();
        for s in samples {
            let row = acc.entry(spec.grid_of(&s.position)).or_default();
            for (a, r) in s.measurement.iter() {
                row.entry(a).or_default().push(r);
            }
        }
        // Summing sorted values makes each mean independent of sample order.
        let rows = acc.into_iter().map(|(g, per_antenna)| {
            let stats = per_antenna
                .into_iter()
                .map(|(a, mut v)| {
                    v.sort_by(f64::total_cmp);
                    let n = v.len();
                    (a, v.iter().sum::<f64>() / n as f64, n as u32)
                })
                .collect();
            (g, stats)
        });
        Self::from_rows(spec, rows)
    }

    fn from_rows(spec: GridSpec, rows: impl IntoIterator<Item = (GridId, Vec<(AntennaId, f64, u32)>)>) -> Self {
        let rows: Vec<_> = rows.into_iter().collect();
        let mut antennas: Vec<AntennaId> = rows.iter().flat_map(|(_, r)| r.iter().map(|&(a, _, _)| a)).collect();
        antennas.sort_unstable();
        antennas.dedup();
        let width = antennas.len();
        let mut means = vec![f64::NAN; rows.len() * width];
        let mut counts = vec![0u32; rows.len() * width];
        let mut grids = Vec::with_capacity(rows.len());
        for (i, (g, stats)) in rows.into_iter().enumerate() {
            grids.push(g);
            for (a, mean, n) in stats {
                let col = antennas.binary_search(&a).expect("collected above");
                means[i * width + col] = mean;
                counts[i * width + col] = n;
            }
        }
        Self { spec, grids, antennas, means, counts }
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    /// Data-bearing grids, ascending.
    pub fn grids(&self) -> &[GridId] {
        &self.grids
    }

    pub fn num_grids(&self) -> usize {
        self.grids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grids.is_empty()
    }

    fn row(&self, i: usize) -> &[f64] {
        let w = self.antennas.len();
        &self.means[i * w..(i + 1) * w]
    }

    /// Mean vector of grid `g` with its per-antenna observation counts.
    pub fn grid_mean(&self, g: GridId) -> Option<(Measurement, BTreeMap<AntennaId, u32>)> {
        let i = self.grids.binary_search(&g).ok()?;
        let w = self.antennas.len();
        let mut readings = Vec::new();
        let mut counts = BTreeMap::new();
        for (col, &a) in self.antennas.iter().enumerate() {
            let n = self.counts[i * w + col];
            if n > 0 {
                readings.push((a, self.means[i * w + col]));
                counts.insert(a, n);
            }
        }
        Some((Measurement::new(readings).expect("finite means"), counts))
    }

    /// Nearest grid by mean vector; ties go to the smaller [`GridId`].
    pub fn nearest_grid(&self, m: &Measurement, kind: MeasurementDistanceKind, cost: &mut QueryCost) -> Option<(GridId, f64)> {
        let query: Vec<(usize, f64)> = m
            .iter()
            .filter_map(|(a, r)| self.antennas.binary_search(&a).ok().map(|c| (c, r)))
            .collect();
        let mut best: Option<(usize, f64)> = None;
        for i in 0..self.grids.len() {
            cost.grid_distances += 1;
            let row = self.row(i);
            let mut acc = Shared::default();
            for &(c, r) in &query {
                let mu = row[c];
                if !mu.is_nan() {
                    acc.push(r, mu);
                }
            }
            let d = acc.finish(kind);
            if d.is_finite() && best.is_none_or(|(_, bd)| d < bd) {
                best = Some((i, d));
            }
        }
        best.map(|(i, d)| (self.grids[i], d))
    }

    pub fn localize(&self, m: &Measurement, kind: MeasurementDistanceKind) -> Result<LocationEstimate, LocalizeError> {
        self.localize_counted(m, kind, &mut QueryCost::default())
    }

    pub fn localize_counted(
        &self,
        m: &Measurement,
        kind: MeasurementDistanceKind,
        cost: &mut QueryCost,
    ) -> Result<LocationEstimate, LocalizeError> {
        let (g, _) = self.nearest_grid(m, kind, cost).ok_or(LocalizeError::NoInformation)?;
        Ok(LocationEstimate { position: self.spec.center_of(g), status: EstimateStatus::Resolved, candidates_remaining: 1 })
    }

    /// Canonical text form:
    ///
    /// ```text
    /// rfp-index v1
    /// grid <origin_x> <origin_y> <cell_size>
    /// mean <ix:iy> <antenna>:<mean>:<count> ...
    /// ```
    pub fn to_text(&self) -> String {
        let mut out = String::from("rfp-index v1\n");
        writeln!(out, "{}", format_grid(&self.spec)).unwrap();
        let w = self.antennas.len();
        for (i, g) in self.grids.iter().enumerate() {
            write!(out, "mean {g}").unwrap();
            for (col, a) in self.antennas.iter().enumerate() {
                let n = self.counts[i * w + col];
                if n > 0 {
                    write!(out, " {a}:{}:{n}", self.means[i * w + col]).unwrap();
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, ArtifactError> {
        let mut recs = records(text);
        match recs.next() {
            Some((_, "rfp-index v1")) => {}
            Some((line, other)) => return Err(format_err(line, format!("expected `rfp-index v1`, found {other:?}"))),
            None => return Err(format_err(1, "empty fingerprint index artifact")),
        }
        let mut spec = None;
        let mut rows: BTreeMap<GridId, Vec<(AntennaId, f64, u32)>> = BTreeMap::new();
        for (line, rec) in recs {
            let mut toks = rec.split_whitespace();
            match toks.next() {
                Some("grid") => spec = Some(parse_grid(toks.by_ref(), line)?),
                Some("mean") => {
                    if spec.is_none() {
                        return Err(format_err(line, "`mean` before `grid`"));
                    }
                    let g = parse_grid_id(toks.next().ok_or_else(|| format_err(line, "missing grid id"))?, line)?;
                    let mut stats = Vec::new();
                    for t in toks.by_ref() {
                        let mut parts = t.split(':');
                        let a: AntennaId = parse_num(parts.next(), line, "antenna id")?;
                        let mean: f64 = parse_num(parts.next(), line, "mean")?;
                        let n: u32 = parse_num(parts.next(), line, "count")?;
                        if parts.next().is_some() || !mean.is_finite() || n == 0 {
                            return Err(format_err(line, format!("bad mean entry {t:?}")));
                        }
                        if stats.iter().any(|&(b, _, _)| b == a) {
                            return Err(format_err(line, format!("antenna {a} repeated")));
                        }
                        stats.push((a, mean, n));
                    }
                    if rows.insert(g, stats).is_some() {
                        return Err(format_err(line, format!("duplicate grid {g}")));
                    }
                }
                other => return Err(format_err(line, format!("unknown record {other:?}"))),
            }
            if toks.next().is_some() {
                return Err(format_err(line, "trailing tokens"));
            }
        }
        let spec = spec.ok_or_else(|| format_err(0, "missing `grid` record"))?;
        Ok(Self::from_rows(spec, rows))
    }
}

pub fn build_rfp_index<'a>(samples: impl IntoIterator<Item = &'a LocatedSample>, spec: GridSpec) -> RfpIndex {
    RfpIndex::build(samples, spec)
}

pub fn rfp_localize(m: &Measurement, index: &RfpIndex, kind: MeasurementDistanceKind) -> Result<LocationEstimate, LocalizeError> {
    index.localize(m, kind)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Point, Rect};
    use crate::scenario::{Sampling, UrbanLayout};
    use proptest::prelude::*;

    fn q(readings: &[(AntennaId, f64)]) -> Measurement {
        Measurement::new(readings.iter().copied()).unwrap()
    }

    fn sample(x: f64, y: f64, readings: &[(AntennaId, f64)]) -> LocatedSample {
        LocatedSample { id: 0, position: Point::new(x, y), measurement: q(readings) }
    }

    fn spec20() -> GridSpec {
        GridSpec::new(Point::default(), 20.0).unwrap()
    }

    fn worked_example_index() -> RfpIndex {
        let mut v = Vec::new();
        for r in [-53.0, -55.0, -57.0, -59.0, -61.0] {
            v.push(sample(10.0, 10.0, &[(1, r)]));
        }
        for r in [-58.0, -60.0, -62.0, -64.0, -66.0] {
            v.push(sample(30.0, 10.0, &[(1, r)]));
        }
        RfpIndex::build(&v, spec20())
    }

    #[test]
    fn worked_example_means_and_failure() {
        let idx = worked_example_index();
        assert_eq!(idx.grid_mean(GridId::new(0, 0)).unwrap().0.get(1), -57.0);
        assert_eq!(idx.grid_mean(GridId::new(1, 0)).unwrap().0.get(1), -62.0);
        let kind = MeasurementDistanceKind::default();
        assert_eq!(idx.localize(&q(&[(1, -61.0)]), kind).unwrap().position, Point::new(30.0, 10.0));
        assert_eq!(idx.localize(&q(&[(1, -57.0)]), kind).unwrap().position, Point::new(10.0, 10.0));
        // Equidistant from both means: smaller grid id wins.
        assert_eq!(idx.localize(&q(&[(1, -59.5)]), kind).unwrap().position, Point::new(10.0, 10.0));
    }

    #[test]
    fn means_omit_missing_readings() {
        let idx = RfpIndex::build(&[sample(1.0, 1.0, &[(1, -50.0)]), sample(2.0, 2.0, &[(1, -60.0), (2, -70.0)])], spec20());
        let (mean, counts) = idx.grid_mean(GridId::new(0, 0)).unwrap();
        assert_eq!(mean, q(&[(1, -55.0), (2, -70.0)]));
        assert_eq!(counts.get(&1), Some(&2));
        assert_eq!(counts.get(&2), Some(&1));

        let single = RfpIndex::build(&[sample(5.0, 5.0, &[(3, -42.5), (4, -80.25)])], spec20());
        assert_eq!(single.grid_mean(GridId::new(0, 0)).unwrap().0, q(&[(3, -42.5), (4, -80.25)]));
    }

    #[test]
    fn empty_index() {
        let idx = RfpIndex::build(&[], spec20());
        assert!(idx.is_empty());
        assert_eq!(idx.localize(&q(&[(1, -50.0)]), MeasurementDistanceKind::default()), Err(LocalizeError::NoInformation));
    }

    #[test]
    fn all_disjoint_is_no_information() {
        let idx = worked_example_index();
        assert_eq!(idx.localize(&q(&[(2, -50.0)]), MeasurementDistanceKind::default()), Err(LocalizeError::NoInformation));
    }

    #[test]
    fn distance_examples() {
        let e = MeasurementDistanceKind::EuclideanSharedSupport;
        let c = MeasurementDistanceKind::CosineSharedSupport;
        let a = q(&[(1, -50.0), (2, -60.0)]);
        assert_eq!(measurement_distance(&a, &a, e), 0.0);
        assert!(measurement_distance(&a, &a, c).abs() < 1e-12);
        assert_eq!(measurement_distance(&a, &q(&[(1, -53.0), (2, -56.0)]), e), 5.0);
        assert_eq!(measurement_distance(&q(&[(1, -50.0)]), &q(&[(2, -50.0)]), e), DISJOINT_DISTANCE);
        assert_eq!(measurement_distance(&q(&[(1, -50.0)]), &q(&[(2, -50.0)]), c), DISJOINT_DISTANCE);
        // Only the shared antenna 1 counts.
        assert_eq!(measurement_distance(&q(&[(1, -50.0), (3, -10.0)]), &q(&[(1, -54.0), (2, -90.0)]), e), 4.0);
        // Parallel vectors have zero cosine distance.
        assert!(measurement_distance(&q(&[(1, -50.0), (2, -60.0)]), &q(&[(1, -25.0), (2, -30.0)]), c).abs() < 1e-12);
    }

    #[test]
    fn scan_counts_every_grid() {
        let idx = worked_example_index();
        let mut cost = QueryCost::default();
        idx.localize_counted(&q(&[(1, -61.0)]), MeasurementDistanceKind::default(), &mut cost).unwrap();
        assert_eq!(cost.grid_distances, 2);
        assert_eq!(cost.table_cells, 0);
    }

    fn world(seed: u64) -> Vec<LocatedSample> {
        UrbanLayout { extent: Rect::new(0.0, 0.0, 300.0, 300.0), antennas: 10, obstacles: 12, ..Default::default() }
            .build(seed)
            .unwrap()
            .generate_dataset(Sampling::Uniform { count: 400 }, seed)
            .unwrap()
    }

    #[test]
    fn text_round_trip() {
        let d = world(3);
        let idx = RfpIndex::build(&d, GridSpec::covering(d.iter().map(|s| &s.position), 25.0).unwrap());
        let text = idx.to_text();
        let back = RfpIndex::from_text(&text).unwrap();
        assert_eq!(back.to_text(), text);
        assert_eq!(back.grids(), idx.grids());
        for g in idx.grids() {
            assert_eq!(back.grid_mean(*g), idx.grid_mean(*g));
        }
        assert!(RfpIndex::from_text("rfp-index v1\nmean 0:0 1:-50:1\n").is_err());
        assert!(RfpIndex::from_text("rfp-index v1\ngrid 0 0 10\nmean 0:0 1:-50:0\n").is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn means_are_permutation_invariant(seed in 0u64..500, rot in 0usize..400) {
            let d = world(seed);
            let spec = GridSpec::covering(d.iter().map(|s| &s.position), 30.0).unwrap();
            let mut shuffled = d.clone();
            shuffled.rotate_left(rot);
            shuffled.reverse();
            prop_assert_eq!(RfpIndex::build(&d, spec), RfpIndex::build(&shuffled, spec));
        }

        #[test]
        fn dense_scan_matches_sparse_distance(seed in 0u64..500, cosine in any::<bool>()) {
            let kind = if cosine { MeasurementDistanceKind::CosineSharedSupport } else { MeasurementDistanceKind::EuclideanSharedSupport };
            let d = world(seed);
            let spec = GridSpec::covering(d.iter().map(|s| &s.position), 30.0).unwrap();
            let idx = RfpIndex::build(&d[..200], spec);
            for s in &d[200..230] {
                // Brute force over the sparse mean vectors.
                let mut best: Option<(GridId, f64)> = None;
                for g in idx.grids() {
                    let dist = measurement_distance(&s.measurement, &idx.grid_mean(*g).unwrap().0, kind);
                    if dist.is_finite() && best.is_none_or(|(_, bd)| dist < bd) {
                        best = Some((*g, dist));
                    }
                }
                let got = idx.nearest_grid(&s.measurement, kind, &mut QueryCost::default());
                prop_assert_eq!(got.map(|x| x.0), best.map(|x| x.0));
                if let (Some(a), Some(b)) = (got, best) {
                    prop_assert!((a.1 - b.1).abs() <= 1e-9 * b.1.max(1.0));
                }
            }
        }
    }
}
