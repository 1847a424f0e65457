//! Comparison methods: grid-mean fingerprinting and range lateration.

mod rfp;
mod tl;

pub use rfp::{build_rfp_index, measurement_distance, rfp_localize, MeasurementDistanceKind, RfpIndex, DISJOINT_DISTANCE};
pub use tl::{lateration_objective, linearized_start, observed_ranges, tl_localize, weighted_start, TlOptions, MIN_OBSERVATIONS};
