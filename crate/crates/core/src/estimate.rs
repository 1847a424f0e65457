use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Point;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimateStatus {
    Resolved,
    Ambiguous,
    FallbackDefault,
}

impl std::fmt::Display for EstimateStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EstimateStatus::Resolved => "resolved",
            EstimateStatus::Ambiguous => "ambiguous",
            EstimateStatus::FallbackDefault => "fallback-default",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocationEstimate {
    pub position: Point,
    pub status: EstimateStatus,
    /// Candidate locations averaged into `position`; zero for a fallback.
    pub candidates_remaining: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LocalizeError {
    #[error("query carries no usable information")]
    NoInformation,
    #[error("need at least {needed} readings from known antennas, have {have}")]
    InsufficientObservations { needed: usize, have: usize },
}

/// Abstract work counters for one or more queries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct QueryCost {
    /// Lookup-table cells read.
    pub table_cells: u64,
    /// Query-to-grid-mean distance evaluations.
    pub grid_distances: u64,
}

impl std::ops::AddAssign for QueryCost {
    fn add_assign(&mut self, rhs: Self) {
        self.table_cells += rhs.table_cells;
        self.grid_distances += rhs.grid_distances;
    }
}
