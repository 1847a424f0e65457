//! Lookup lateration.
//!
//! Offline, every reference sample is filed under `(antenna, rss bin)` for
//! each of its readings; the cell stores the sample's location (a cluster
//! center in continuous mode, the deduplicated grid id in grid mode).
//!
//! Online, the query's readings are taken strongest first. The candidate set
//! starts as the strongest reading's cell and is intersected with the next
//! reading's cell (within tolerance `T` in continuous mode, exact grid id in
//! grid mode) until the candidates are tight enough or readings run out. A
//! step that would leave no candidates is discarded and the search stops.
//! The estimate is the mean of the surviving candidate positions.
//!
//! A query only reads the cells named by its own readings.

mod cluster;
mod text;

pub use cluster::{cluster_locations, Clustering};

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimate::{EstimateStatus, LocalizeError, LocationEstimate, QueryCost};
use crate::geometry::{centroid, Point, Rect};
use crate::grid::{BinSpec, GridId, GridSpec};
use crate::scenario::{Antenna, AntennaId, LocatedSample, Measurement};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LookupError {
    #[error("cluster diameter must be positive and finite, got {0}")]
    InvalidDiameter(f64),
    #[error("{0}")]
    InvalidParams(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TableMode {
    /// Cells hold cluster centers of the reference locations.
    Continuous { cluster_diameter: f64 },
    /// Cells hold the unique grid ids of the reference locations.
    Grid(GridSpec),
}

/// One stored reference location.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Entry {
    Point(Point),
    Cell(GridId),
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        use std::cmp::Ordering;
        match (self, other) {
            (Entry::Cell(a), Entry::Cell(b)) => a.cmp(b),
            (Entry::Point(a), Entry::Point(b)) => a.total_cmp(b),
            (Entry::Cell(_), Entry::Point(_)) => Ordering::Less,
            (Entry::Point(_), Entry::Cell(_)) => Ordering::Greater,
        }
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Search parameters for [`LookupTables::laterate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaterationParams {
    /// Continuous mode: max distance between matching candidates (m).
    /// Unused in grid mode, where candidates match by grid id.
    pub tolerance: f64,
    /// Refinement stops once the max pairwise distance between candidates
    /// is at most this (m).
    pub spread_threshold: f64,
}

impl LaterationParams {
    pub fn validate(&self) -> Result<(), LookupError> {
        for (name, v) in [("tolerance", self.tolerance), ("spread threshold", self.spread_threshold)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(LookupError::InvalidParams(format!("{name} must be finite and non-negative, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet {
    pub entries: Vec<Entry>,
    /// Number of table cells that contributed to `entries`.
    pub depth: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LookupTables {
    mode: TableMode,
    bins: BinSpec,
    cells: BTreeMap<(AntennaId, i64), Vec<Entry>>,
    antennas: BTreeMap<AntennaId, Point>,
}

impl LookupTables {
    /// Builds the tables from reference samples. An empty sample list gives
    /// empty tables.
    pub fn construct<'a>(
        samples: impl IntoIterator<Item = &'a LocatedSample>,
        bins: BinSpec,
        mode: TableMode,
    ) -> Result<Self, LookupError> {
        let cells = match mode {
            TableMode::Grid(spec) => {
                let mut sets: BTreeMap<(AntennaId, i64), BTreeSet<GridId>> = BTreeMap::new();
                for s in samples {
                    let g = spec.grid_of(&s.position);
                    for (a, r) in s.measurement.iter() {
                        let b = bins.bin_rss(r).expect("measurements hold finite RSS");
                        sets.entry((a, b)).or_default().insert(g);
                    }
                }
                sets.into_iter()
                    .map(|(k, v)| (k, v.into_iter().map(Entry::Cell).collect()))
                    .collect()
            }
            TableMode::Continuous { cluster_diameter } => {
                if !(cluster_diameter.is_finite() && cluster_diameter > 0.0) {
                    return Err(LookupError::InvalidDiameter(cluster_diameter));
                }
                let mut groups: BTreeMap<(AntennaId, i64), Vec<Point>> = BTreeMap::new();
                for s in samples {
                    for (a, r) in s.measurement.iter() {
                        let b = bins.bin_rss(r).expect("measurements hold finite RSS");
                        groups.entry((a, b)).or_default().push(s.position);
                    }
                }
                // Cells are independent; clustering them in parallel keeps
                // the BTreeMap order in the collected result.
                let clustered: Vec<_> = groups
                    .into_par_iter()
                    .map(|(k, pts)| {
                        let mut centers: Vec<Entry> = cluster_locations(&pts, cluster_diameter)
                            .centers
                            .into_iter()
                            .map(Entry::Point)
                            .collect();
                        centers.sort();
                        centers.dedup();
                        (k, centers)
                    })
                    .collect();
                clustered.into_iter().collect()
            }
        };
        Ok(Self { mode, bins, cells, antennas: BTreeMap::new() })
    }

    /// Registers antenna positions, used for the fallback estimate.
    pub fn with_antennas<'a>(mut self, antennas: impl IntoIterator<Item = &'a Antenna>) -> Self {
        self.antennas.extend(antennas.into_iter().map(|a| (a.id, a.position)));
        self
    }

    pub fn mode(&self) -> TableMode {
        self.mode
    }

    pub fn bins(&self) -> BinSpec {
        self.bins
    }

    pub fn antennas(&self) -> &BTreeMap<AntennaId, Point> {
        &self.antennas
    }

    /// The stored entries for `(antenna, bin)`, sorted; empty when absent.
    pub fn cell(&self, antenna: AntennaId, bin: i64) -> &[Entry] {
        self.cells.get(&(antenna, bin)).map(Vec::as_slice).unwrap_or(&[])
    }

    /// All non-empty cells in `(antenna, bin)` order.
    pub fn cells(&self) -> impl Iterator<Item = ((AntennaId, i64), &[Entry])> {
        self.cells.iter().map(|(k, v)| (*k, v.as_slice()))
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn num_entries(&self) -> usize {
        self.cells.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn entry_position(&self, e: &Entry) -> Point {
        match (e, self.mode) {
            (Entry::Point(p), _) => *p,
            (Entry::Cell(g), TableMode::Grid(spec)) => spec.center_of(*g),
            (Entry::Cell(_), TableMode::Continuous { .. }) => unreachable!("grid entry in continuous tables"),
        }
    }

    /// Defaults: spread threshold of one grid diagonal (grid mode) or the
    /// cluster diameter `D` (continuous mode); tolerance `2 D`.
    pub fn default_params(&self) -> LaterationParams {
        match self.mode {
            TableMode::Grid(spec) => LaterationParams { tolerance: 0.0, spread_threshold: spec.diagonal() },
            TableMode::Continuous { cluster_diameter } => LaterationParams {
                tolerance: 2.0 * cluster_diameter,
                spread_threshold: cluster_diameter,
            },
        }
    }

    /// Runs the greedy intersection and returns the surviving candidates, or
    /// `None` when no reading of `m` names a non-empty cell.
    pub fn candidates(&self, m: &Measurement, params: &LaterationParams, cost: &mut QueryCost) -> Option<CandidateSet> {
        let usable: Vec<&[Entry]> = m
            .by_strength()
            .into_iter()
            .filter_map(|(a, r)| {
                cost.table_cells += 1;
                let b = self.bins.bin_rss(r).ok()?;
                Some(self.cell(a, b)).filter(|c| !c.is_empty())
            })
            .collect();
        let (first, rest) = usable.split_first()?;
        let mut current: Vec<Entry> = first.to_vec();
        let mut depth = 1;
        for next in rest {
            if !self.spread_exceeds(&current, params.spread_threshold) {
                break;
            }
            let refined = self.refine(&current, next, params.tolerance);
            if refined.is_empty() {
                break;
            }
            current = refined;
            depth += 1;
        }
        Some(CandidateSet { entries: current, depth })
    }

    fn refine(&self, current: &[Entry], next: &[Entry], tolerance: f64) -> Vec<Entry> {
        match self.mode {
            // Kronecker match on sorted grid ids.
            TableMode::Grid(_) => current.iter().filter(|c| next.binary_search(c).is_ok()).copied().collect(),
            TableMode::Continuous { .. } => current
                .iter()
                .filter(|c| {
                    let p = self.entry_position(c);
                    next.iter().any(|e| self.entry_position(e).distance(&p) <= tolerance)
                })
                .copied()
                .collect(),
        }
    }

    /// Whether the max pairwise distance among the entries exceeds
    /// `threshold`. Uses the bounding box to settle most cases without the
    /// quadratic scan.
    fn spread_exceeds(&self, entries: &[Entry], threshold: f64) -> bool {
        if entries.len() < 2 {
            return false;
        }
        let pts: Vec<Point> = entries.iter().map(|e| self.entry_position(e)).collect();
        let bb = Rect::bounding(&pts).expect("non-empty");
        if bb.width() > threshold || bb.height() > threshold {
            return true;
        }
        if bb.width().hypot(bb.height()) <= threshold {
            return false;
        }
        pts.iter()
            .enumerate()
            .any(|(i, a)| pts[i + 1..].iter().any(|b| a.distance(b) > threshold))
    }

    /// Localizes `m`. See the module docs for the procedure.
    pub fn laterate(&self, m: &Measurement, params: &LaterationParams) -> Result<LocationEstimate, LocalizeError> {
        self.laterate_counted(m, params, &mut QueryCost::default())
    }

    pub fn laterate_counted(
        &self,
        m: &Measurement,
        params: &LaterationParams,
        cost: &mut QueryCost,
    ) -> Result<LocationEstimate, LocalizeError> {
        match self.candidates(m, params, cost) {
            Some(set) => {
                let pts: Vec<Point> = set.entries.iter().map(|e| self.entry_position(e)).collect();
                let status = if self.spread_exceeds(&set.entries, params.spread_threshold) {
                    EstimateStatus::Ambiguous
                } else {
                    EstimateStatus::Resolved
                };
                Ok(LocationEstimate {
                    position: centroid(&pts).expect("candidate sets are non-empty"),
                    status,
                    candidates_remaining: pts.len(),
                })
            }
            None => {
                // Default location: the strongest reading's antenna.
                let (antenna, _) = *m.by_strength().first().ok_or(LocalizeError::NoInformation)?;
                let position = *self.antennas.get(&antenna).ok_or(LocalizeError::NoInformation)?;
                Ok(LocationEstimate { position, status: EstimateStatus::FallbackDefault, candidates_remaining: 0 })
            }
        }
    }
}

pub fn construct_lookup_tables<'a>(
    samples: impl IntoIterator<Item = &'a LocatedSample>,
    bins: BinSpec,
    mode: TableMode,
) -> Result<LookupTables, LookupError> {
    LookupTables::construct(samples, bins, mode)
}

pub fn lookup_laterate(
    m: &Measurement,
    tables: &LookupTables,
    params: &LaterationParams,
) -> Result<LocationEstimate, LocalizeError> {
    tables.laterate(m, params)
}
