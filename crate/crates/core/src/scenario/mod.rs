//! Synthetic urban RSS world.
//!
//! Propagation follows a log-distance law with a multi-wall NLOS term: each
//! obstacle whose interior the antenna-receiver segment passes through
//! subtracts its penalty. Optional receiver noise is zero-mean Gaussian and
//! is drawn from a per-sample stream, so a measurement is a pure function of
//! `(scenario, position, draw index)`.

mod format;
mod measurement;

pub use format::{format_sample, ingest_samples, write_samples, SampleReader};
pub use measurement::{AntennaId, LocatedSample, Measurement, MeasurementError};

use std::collections::BTreeSet;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Point, Rect};
use crate::rng;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: sample has no readings")]
    EmptyReadings { line: usize },
    #[error("at least one sample must be requested")]
    ZeroSamples,
    #[error("scenario config: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Antenna {
    pub id: AntennaId,
    pub position: Point,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    pub rect: Rect,
    /// Attenuation in dB applied once per crossing.
    pub penalty: f64,
}

/// `rss(d) = tx_power - pl0 - 10 n log10(d / d0)` for `d >= d0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathLossModel {
    pub tx_power: f64,
    pub pl0: f64,
    pub exponent: f64,
    pub d0: f64,
}

impl Default for PathLossModel {
    fn default() -> Self {
        Self { tx_power: 0.0, pl0: 40.0, exponent: 3.5, d0: 1.0 }
    }
}

impl PathLossModel {
    fn validate(&self) -> Result<(), ScenarioError> {
        let finite = [self.tx_power, self.pl0, self.exponent, self.d0].iter().all(|v| v.is_finite());
        if !finite || self.exponent <= 0.0 || self.d0 <= 0.0 {
            return Err(ScenarioError::Invalid(format!(
                "path loss model needs finite values, exponent > 0 and d0 > 0: {self:?}"
            )));
        }
        Ok(())
    }

    /// RSS at the reference distance; the strongest value the model emits.
    pub fn near_field_rss(&self) -> f64 {
        self.tx_power - self.pl0
    }

    /// Received power at distance `d`; distances below `d0` are clamped.
    pub fn rss_at_distance(&self, d: f64) -> f64 {
        let d = d.max(self.d0);
        self.near_field_rss() - 10.0 * self.exponent * (d / self.d0).log10()
    }

    /// Inverse of [`rss_at_distance`](Self::rss_at_distance); RSS above the
    /// near-field value maps to `d0`.
    pub fn distance_of(&self, rss: f64) -> f64 {
        let excess = (self.near_field_rss() - rss).max(0.0);
        self.d0 * 10f64.powf(excess / (10.0 * self.exponent))
    }
}

fn default_noise_std() -> f64 {
    1.0
}

fn default_top_k() -> usize {
    20
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    /// Area in which receivers are placed.
    pub extent: Rect,
    pub antennas: Vec<Antenna>,
    #[serde(default)]
    pub obstacles: Vec<Obstacle>,
    #[serde(default)]
    pub model: PathLossModel,
    #[serde(default = "default_noise_std")]
    pub noise_std: f64,
    #[serde(default = "default_top_k")]
    pub top_k: usize,
    #[serde(default)]
    pub rng_seed: u64,
}

/// How receiver positions are laid out by [`Scenario::generate_dataset`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sampling {
    /// `nx * ny` points at the centers of a regular lattice over the extent.
    Lattice { nx: usize, ny: usize },
    /// `count` points drawn uniformly over the extent.
    Uniform { count: usize },
}

impl Scenario {
    /// Scenario with default model, noise and `top_k`; validated.
    pub fn new(extent: Rect, antennas: Vec<Antenna>, obstacles: Vec<Obstacle>) -> Result<Self, ScenarioError> {
        let s = Self {
            extent,
            antennas,
            obstacles,
            model: PathLossModel::default(),
            noise_std: default_noise_std(),
            top_k: default_top_k(),
            rng_seed: 0,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let s: Scenario = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let invalid = |m: String| Err(ScenarioError::Invalid(m));
        if !self.extent.is_valid() {
            return invalid(format!("extent must have positive area: {:?}", self.extent));
        }
        if self.antennas.is_empty() {
            return invalid("at least one antenna is required".into());
        }
        let mut ids = BTreeSet::new();
        for a in &self.antennas {
            if !ids.insert(a.id) {
                return invalid(format!("duplicate antenna id {}", a.id));
            }
            if !a.position.is_finite() {
                return invalid(format!("antenna {} has a non-finite position", a.id));
            }
        }
        for (i, o) in self.obstacles.iter().enumerate() {
            if !o.rect.is_valid() || !(o.penalty.is_finite() && o.penalty >= 0.0) {
                return invalid(format!("obstacle {i} needs xmin<xmax, ymin<ymax and penalty >= 0"));
            }
        }
        self.model.validate()?;
        if !(self.noise_std.is_finite() && self.noise_std >= 0.0) {
            return invalid(format!("noise_std must be >= 0, got {}", self.noise_std));
        }
        if self.top_k == 0 {
            return invalid("top_k must be at least 1".into());
        }
        Ok(())
    }

    pub fn antenna(&self, id: AntennaId) -> Option<&Antenna> {
        self.antennas.iter().find(|a| a.id == id)
    }

    /// Number of obstacles whose interior the segment antenna-`p` crosses.
    pub fn count_obstructions(&self, antenna: &Antenna, p: &Point) -> usize {
        self.obstacles.iter().filter(|o| o.rect.crossed_by(&antenna.position, p)).count()
    }

    /// Total NLOS attenuation (dB) on the path antenna-`p`.
    pub fn obstruction_loss(&self, antenna: &Antenna, p: &Point) -> f64 {
        self.obstacles
            .iter()
            .filter(|o| o.rect.crossed_by(&antenna.position, p))
            .map(|o| o.penalty)
            .sum()
    }

    /// Noise-free RSS of `antenna` at `p`, including obstruction losses.
    pub fn mean_rss(&self, antenna: &Antenna, p: &Point) -> f64 {
        self.model.rss_at_distance(antenna.position.distance(p)) - self.obstruction_loss(antenna, p)
    }

    /// Measurement observed at `p` for draw number `draw`: path loss minus
    /// obstruction losses minus receiver noise, truncated to the `top_k`
    /// strongest readings.
    pub fn simulate_measurement(&self, p: &Point, draw: u64) -> Measurement {
        let noise = (self.noise_std > 0.0).then(|| {
            let normal = Normal::new(0.0, self.noise_std).expect("validated noise std");
            let mut rng = rng::stream(self.rng_seed, draw);
            self.antennas.iter().map(|_| normal.sample(&mut rng)).collect::<Vec<f64>>()
        });
        let readings = self.antennas.iter().enumerate().map(|(i, a)| {
            let e = noise.as_ref().map_or(0.0, |n| n[i]);
            (a.id, self.mean_rss(a, p) - e)
        });
        Measurement::new(readings).expect("antenna ids are unique and RSS finite").strongest(self.top_k)
    }

    /// Generates located samples. Output is identical for a fixed `seed`,
    /// independent of the rayon pool size.
    pub fn generate_dataset(&self, sampling: Sampling, seed: u64) -> Result<Vec<LocatedSample>, ScenarioError> {
        let positions = self.sample_positions(sampling, seed)?;
        Ok(positions
            .into_par_iter()
            .enumerate()
            .map(|(i, position)| {
                let i = i as u64;
                LocatedSample {
                    id: i,
                    position,
                    measurement: self.simulate_measurement(&position, rng::derive_seed(seed, i)),
                }
            })
            .collect())
    }

    fn sample_positions(&self, sampling: Sampling, seed: u64) -> Result<Vec<Point>, ScenarioError> {
        let e = &self.extent;
        match sampling {
            Sampling::Lattice { nx, ny } => {
                if nx == 0 || ny == 0 {
                    return Err(ScenarioError::ZeroSamples);
                }
                let (dx, dy) = (e.width() / nx as f64, e.height() / ny as f64);
                Ok((0..ny)
                    .flat_map(|j| {
                        (0..nx).map(move |i| {
                            Point::new(e.xmin + (i as f64 + 0.5) * dx, e.ymin + (j as f64 + 0.5) * dy)
                        })
                    })
                    .collect())
            }
            Sampling::Uniform { count } => {
                if count == 0 {
                    return Err(ScenarioError::ZeroSamples);
                }
                // Stream index u64::MAX is reserved for positions; per-sample
                // noise uses the sample index.
                let mut rng = rng::stream(seed, u64::MAX);
                Ok((0..count)
                    .map(|_| Point::new(rng.random_range(e.xmin..e.xmax), rng.random_range(e.ymin..e.ymax)))
                    .collect())
            }
        }
    }
}

/// Parameters for a randomly laid out urban scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UrbanLayout {
    pub extent: Rect,
    pub antennas: usize,
    pub obstacles: usize,
    /// Obstacle side lengths are drawn uniformly from this range (m).
    pub obstacle_size: (f64, f64),
    pub penalty: f64,
    pub model: PathLossModel,
    pub noise_std: f64,
    pub top_k: usize,
}

impl Default for UrbanLayout {
    fn default() -> Self {
        Self {
            extent: Rect::new(0.0, 0.0, 1000.0, 1000.0),
            antennas: 20,
            obstacles: 50,
            obstacle_size: (20.0, 80.0),
            penalty: 20.0,
            model: PathLossModel::default(),
            noise_std: 1.0,
            top_k: 20,
        }
    }
}

impl UrbanLayout {
    /// Places obstacles, then antennas outside every obstacle. Antenna ids
    /// are `1..=antennas`.
    pub fn build(&self, seed: u64) -> Result<Scenario, ScenarioError> {
        let e = self.extent;
        let (lo, hi) = self.obstacle_size;
        if !(lo > 0.0 && lo <= hi && hi < e.width().min(e.height())) {
            return Err(ScenarioError::Invalid(format!("obstacle size range {lo}..{hi} does not fit the extent")));
        }
        let mut rng = rng::stream(seed, 0);
        let obstacles: Vec<Obstacle> = (0..self.obstacles)
            .map(|_| {
                let w = rng.random_range(lo..=hi);
                let h = rng.random_range(lo..=hi);
                let x = rng.random_range(e.xmin..e.xmax - w);
                let y = rng.random_range(e.ymin..e.ymax - h);
                Obstacle { rect: Rect::new(x, y, x + w, y + h), penalty: self.penalty }
            })
            .collect();
        let mut antennas = Vec::with_capacity(self.antennas);
        let mut attempts = 0usize;
        while antennas.len() < self.antennas {
            attempts += 1;
            if attempts > 1000 * self.antennas.max(1) {
                return Err(ScenarioError::Invalid("could not place antennas outside obstacles".into()));
            }
            let p = Point::new(rng.random_range(e.xmin..e.xmax), rng.random_range(e.ymin..e.ymax));
            if obstacles.iter().all(|o| !o.rect.contains(&p)) {
                antennas.push(Antenna { id: antennas.len() as AntennaId + 1, position: p });
            }
        }
        let s = Scenario {
            extent: e,
            antennas,
            obstacles,
            model: self.model,
            noise_std: self.noise_std,
            top_k: self.top_k,
            rng_seed: rng::derive_seed(seed, 1),
        };
        s.validate()?;
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn model() -> PathLossModel {
        PathLossModel { tx_power: 0.0, pl0: 40.0, exponent: 3.5, d0: 1.0 }
    }

    fn single_antenna(obstacles: Vec<Obstacle>) -> Scenario {
        let mut s = Scenario::new(
            Rect::new(-50.0, -50.0, 50.0, 50.0),
            vec![Antenna { id: 1, position: Point::new(0.0, 0.0) }],
            obstacles,
        )
        .unwrap();
        s.noise_std = 0.0;
        s
    }

    #[test]
    fn path_loss_examples() {
        let m = model();
        assert_eq!(m.rss_at_distance(1.0), -40.0);
        assert!((m.rss_at_distance(100.0) - -110.0).abs() < 1e-12);
        assert_eq!(m.rss_at_distance(0.2), -40.0);
        assert_eq!(m.distance_of(-40.0), 1.0);
        assert!((m.distance_of(-110.0) - 100.0).abs() < 1e-9);
        assert!((m.distance_of(-75.0) - 10.0).abs() < 1e-12);
        assert_eq!(m.distance_of(-10.0), 1.0);
        for d in [1.0, 10.0, 500.0] {
            assert!((m.distance_of(m.rss_at_distance(d)) - d).abs() <= 1e-9 * d);
        }
    }

    #[test]
    fn obstruction_counts() {
        let a = Antenna { id: 1, position: Point::new(0.0, 0.0) };
        let p = Point::new(10.0, 0.0);
        let hit = Obstacle { rect: Rect::new(4.0, -1.0, 6.0, 1.0), penalty: 20.0 };
        let miss = Obstacle { rect: Rect::new(4.0, 1.0, 6.0, 2.0), penalty: 20.0 };
        let second = Obstacle { rect: Rect::new(7.5, -0.5, 8.5, 3.0), penalty: 20.0 };
        assert_eq!(single_antenna(vec![hit]).count_obstructions(&a, &p), 1);
        assert_eq!(single_antenna(vec![miss]).count_obstructions(&a, &p), 0);
        assert_eq!(single_antenna(vec![hit, miss, second]).count_obstructions(&a, &p), 2);
    }

    #[test]
    fn simulate_examples() {
        let at_one = Point::new(1.0, 0.0);
        let s = single_antenna(vec![]);
        assert_eq!(s.simulate_measurement(&at_one, 0).as_slice(), &[(1, -40.0)]);

        let wall = Obstacle { rect: Rect::new(0.4, -1.0, 0.6, 1.0), penalty: 20.0 };
        let s = single_antenna(vec![wall]);
        assert_eq!(s.simulate_measurement(&at_one, 0).as_slice(), &[(1, -60.0)]);
    }

    #[test]
    fn top_k_truncates() {
        let mut s = Scenario::new(
            Rect::new(0.0, 0.0, 100.0, 100.0),
            vec![
                Antenna { id: 1, position: Point::new(0.0, 0.0) },
                Antenna { id: 2, position: Point::new(50.0, 0.0) },
                Antenna { id: 3, position: Point::new(100.0, 100.0) },
            ],
            vec![],
        )
        .unwrap();
        s.noise_std = 0.0;
        s.top_k = 2;
        let m = s.simulate_measurement(&Point::new(10.0, 1.0), 0);
        assert_eq!(m.len(), 2);
        assert!(m.contains(1) && m.contains(2));
        assert!(m.get(3).is_nan());
    }

    #[test]
    fn noise_is_deterministic_per_draw() {
        let mut s = single_antenna(vec![]);
        s.noise_std = 2.0;
        let p = Point::new(10.0, 10.0);
        assert_eq!(s.simulate_measurement(&p, 5), s.simulate_measurement(&p, 5));
        assert_ne!(s.simulate_measurement(&p, 5), s.simulate_measurement(&p, 6));
    }

    #[test]
    fn lattice_sampling() {
        let s = Scenario::new(
            Rect::new(0.0, 0.0, 100.0, 100.0),
            vec![Antenna { id: 1, position: Point::new(50.0, 50.0) }],
            vec![],
        )
        .unwrap();
        let d = s.generate_dataset(Sampling::Lattice { nx: 10, ny: 10 }, 1).unwrap();
        assert_eq!(d.len(), 100);
        assert_eq!(d[0].position, Point::new(5.0, 5.0));
        assert_eq!(d[99].position, Point::new(95.0, 95.0));
        assert!(d.iter().all(|x| (x.position.x - 5.0) % 10.0 == 0.0));
    }

    #[test]
    fn uniform_sampling_is_deterministic_and_in_extent() {
        let s = UrbanLayout::default().build(3).unwrap();
        let a = s.generate_dataset(Sampling::Uniform { count: 1000 }, 9).unwrap();
        let b = s.generate_dataset(Sampling::Uniform { count: 1000 }, 9).unwrap();
        assert_eq!(a.len(), 1000);
        assert_eq!(a, b);
        assert!(a.iter().all(|x| s.extent.contains(&x.position)));
        assert!(matches!(
            s.generate_dataset(Sampling::Uniform { count: 0 }, 9),
            Err(ScenarioError::ZeroSamples)
        ));
    }

    #[test]
    fn urban_layout_respects_counts() {
        let s = UrbanLayout::default().build(11).unwrap();
        assert_eq!(s.antennas.len(), 20);
        assert_eq!(s.obstacles.len(), 50);
        assert!(s.antennas.iter().all(|a| s.obstacles.iter().all(|o| !o.rect.contains(&a.position))));
        assert_eq!(s, UrbanLayout::default().build(11).unwrap());
    }

    #[test]
    fn json_round_trip_and_validation() {
        let s = UrbanLayout::default().build(2).unwrap();
        assert_eq!(Scenario::from_json(&s.to_json()).unwrap(), s);

        let minimal = r#"{"extent":{"xmin":0,"ymin":0,"xmax":10,"ymax":10},
                          "antennas":[{"id":1,"position":{"x":0,"y":0}}]}"#;
        let m = Scenario::from_json(minimal).unwrap();
        assert_eq!(m.top_k, 20);
        assert_eq!(m.noise_std, 1.0);

        let dup = r#"{"extent":{"xmin":0,"ymin":0,"xmax":10,"ymax":10},
                      "antennas":[{"id":1,"position":{"x":0,"y":0}},{"id":1,"position":{"x":1,"y":0}}]}"#;
        assert!(matches!(Scenario::from_json(dup), Err(ScenarioError::Invalid(_))));
    }

    #[test]
    fn one_wall_dominates_default_noise() {
        let layout = UrbanLayout::default();
        assert!(layout.penalty > 3.0 * layout.noise_std);
        assert!(layout.noise_std <= 2.0);
    }

    proptest! {
        #[test]
        fn rss_strictly_decreasing(d in 1.0..1e5f64, step in 1e-3..1e3f64) {
            let m = model();
            prop_assert!(m.rss_at_distance(d + step) < m.rss_at_distance(d));
        }

        #[test]
        fn distance_inverts_rss(d in 1.0..1e6f64, n in 1.5..6.0f64, pl0 in 20.0..60.0f64) {
            let m = PathLossModel { tx_power: 10.0, pl0, exponent: n, d0: 1.0 };
            let back = m.distance_of(m.rss_at_distance(d));
            prop_assert!((back - d).abs() <= 1e-9 * d);
        }

        #[test]
        fn adding_an_obstacle_never_raises_rss(
            px in -40.0..40.0f64, py in -40.0..40.0f64,
            x0 in -45.0..40.0f64, y0 in -45.0..40.0f64, w in 0.5..20.0f64, h in 0.5..20.0f64,
        ) {
            let p = Point::new(px, py);
            let base = single_antenna(vec![Obstacle { rect: Rect::new(-30.0, 5.0, -20.0, 8.0), penalty: 20.0 }]);
            let mut more = base.clone();
            more.obstacles.push(Obstacle { rect: Rect::new(x0, y0, x0 + w, y0 + h), penalty: 15.0 });
            let a = base.simulate_measurement(&p, 0).get(1);
            let b = more.simulate_measurement(&p, 0).get(1);
            prop_assert!(b <= a);
        }
    }
}
