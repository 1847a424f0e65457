use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Point;

pub type AntennaId = u32;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeasurementError {
    #[error("antenna {antenna}: RSS must be finite, got {value}")]
    NonFinite { antenna: AntennaId, value: f64 },
    #[error("antenna {0} appears more than once")]
    DuplicateAntenna(AntennaId),
}

/// Sparse RSS vector: antenna id to dBm. Antennas that were not heard are
/// simply absent; [`Measurement::get`] reports them as NaN.
///
/// Readings are kept sorted by antenna id, which makes equality, hashing of
/// binned vectors and serialization canonical.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<(AntennaId, f64)>", into = "Vec<(AntennaId, f64)>")]
pub struct Measurement {
    readings: Vec<(AntennaId, f64)>,
}

impl Measurement {
    pub fn new(readings: impl IntoIterator<Item = (AntennaId, f64)>) -> Result<Self, MeasurementError> {
        let mut readings: Vec<_> = readings.into_iter().collect();
        for &(antenna, value) in &readings {
            if !value.is_finite() {
                return Err(MeasurementError::NonFinite { antenna, value });
            }
        }
        readings.sort_by_key(|&(a, _)| a);
        if let Some(w) = readings.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(MeasurementError::DuplicateAntenna(w[0].0));
        }
        Ok(Self { readings })
    }

    /// RSS from `antenna`, NaN when it was not observed.
    pub fn get(&self, antenna: AntennaId) -> f64 {
        self.readings
            .binary_search_by_key(&antenna, |&(a, _)| a)
            .map(|i| self.readings[i].1)
            .unwrap_or(f64::NAN)
    }

    pub fn contains(&self, antenna: AntennaId) -> bool {
        self.readings.binary_search_by_key(&antenna, |&(a, _)| a).is_ok()
    }

    /// Readings in ascending antenna-id order.
    pub fn iter(&self) -> impl ExactSizeIterator<Item = (AntennaId, f64)> + '_ {
        self.readings.iter().copied()
    }

    pub fn as_slice(&self) -> &[(AntennaId, f64)] {
        &self.readings
    }

    pub fn len(&self) -> usize {
        self.readings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.readings.is_empty()
    }

    /// Readings in strictly decreasing RSS; equal RSS ordered by ascending
    /// antenna id.
    pub fn by_strength(&self) -> Vec<(AntennaId, f64)> {
        let mut v = self.readings.clone();
        v.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        v
    }

    /// Keeps only the `k` strongest readings.
    pub fn strongest(&self, k: usize) -> Measurement {
        if self.readings.len() <= k {
            return self.clone();
        }
        let mut kept: Vec<_> = self.by_strength().into_iter().take(k).collect();
        kept.sort_by_key(|&(a, _)| a);
        Measurement { readings: kept }
    }
}

impl TryFrom<Vec<(AntennaId, f64)>> for Measurement {
    type Error = MeasurementError;

    fn try_from(v: Vec<(AntennaId, f64)>) -> Result<Self, Self::Error> {
        Measurement::new(v)
    }
}

impl From<Measurement> for Vec<(AntennaId, f64)> {
    fn from(m: Measurement) -> Self {
        m.readings
    }
}

/// A reference record: a measurement with its ground-truth position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocatedSample {
    pub id: u64,
    pub position: Point,
    pub measurement: Measurement,
}
