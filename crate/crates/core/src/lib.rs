//! RSS-based outdoor localization by lookup-table lateration, with
//! fingerprinting and range-lateration baselines, a synthetic urban radio
//! simulator and an evaluation harness.

pub mod artifact;
pub mod baselines;
pub mod estimate;
pub mod eval;
pub mod geometry;
pub mod grid;
pub mod lookup;
pub mod rng;
pub mod scenario;

pub use artifact::ArtifactError;
pub use estimate::{EstimateStatus, LocalizeError, LocationEstimate, QueryCost};
pub use geometry::{Point, Rect};
pub use grid::{BinSpec, GridError, GridId, GridSpec};
