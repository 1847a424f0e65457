//! Benchmark harness: repeated random train/test splits, nearest-rank error
//! percentiles, coverage and sweeps over methods, grid sizes and bin sizes.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baselines::{tl_localize, MeasurementDistanceKind, RfpIndex, TlOptions};
use crate::estimate::{EstimateStatus, LocalizeError, LocationEstimate, QueryCost};
use crate::geometry::centroid;
use crate::grid::{BinSpec, GridSpec};
use crate::lookup::{LaterationParams, LookupTables, TableMode};
use crate::rng;
use crate::scenario::{Antenna, LocatedSample, PathLossModel};

/// Resolution of the error CDF stored in reports: one sample per percent.
pub const CDF_POINTS: usize = 100;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("error list is empty")]
    EmptyErrors,
}

fn config_err<T>(msg: impl Into<String>) -> Result<T, EvalError> {
    Err(EvalError::Config(msg.into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub repetitions: usize,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(train_fraction: f64, repetitions: usize, seed: u64) -> Result<Self, EvalError> {
        let s = Self { train_fraction, repetitions, seed };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return config_err(format!("train fraction must be in (0, 1), got {}", self.train_fraction));
        }
        if self.repetitions == 0 {
            return config_err("repetitions must be at least 1");
        }
        Ok(())
    }

    /// Number of training samples out of `n`.
    pub fn train_count(&self, n: usize) -> usize {
        (self.train_fraction * n as f64).round() as usize
    }
}

/// Index partition for repetition `rep`: `(train, test)`, each ascending.
pub fn split_indices(n: usize, spec: &SplitSpec, rep: usize) -> Result<(Vec<usize>, Vec<usize>), EvalError> {
    spec.validate()?;
    let k = spec.train_count(n);
    if k == 0 || k >= n {
        return config_err(format!("train fraction {} of {n} samples leaves an empty side", spec.train_fraction));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng::stream(spec.seed, rep as u64));
    let mut train = idx[..k].to_vec();
    let mut test = idx[k..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

pub fn split<T: Clone>(samples: &[T], spec: &SplitSpec, rep: usize) -> Result<(Vec<T>, Vec<T>), EvalError> {
    let (tr, te) = split_indices(samples.len(), spec, rep)?;
    Ok((tr.iter().map(|&i| samples[i].clone()).collect(), te.iter().map(|&i| samples[i].clone()).collect()))
}

/// Nearest-rank percentile of an ascending-sorted list.
fn nearest_rank(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    // The epsilon keeps products like 0.67 * 100 = 67.00000000000001 at rank 67.
    let rank = ((p * n as f64 - 1e-9).ceil() as usize).clamp(1, n);
    sorted[rank - 1]
}

/// Nearest-rank percentile: the value at 1-based rank `⌈p·n⌉` of the
/// ascending sort.
pub fn error_percentile(errors: &[f64], p: f64) -> Result<f64, EvalError> {
    if errors.is_empty() {
        return Err(EvalError::EmptyErrors);
    }
    if !(p > 0.0 && p <= 1.0) {
        return config_err(format!("percentile must be in (0, 1], got {p}"));
    }
    let mut v = errors.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(nearest_rank(&v, p))
}

/// Fraction of the grids holding any sample of `all` that also hold a
/// training sample.
pub fn coverage<'a, 'b>(
    train: impl IntoIterator<Item = &'a LocatedSample>,
    all: impl IntoIterator<Item = &'b LocatedSample>,
    spec: &GridSpec,
) -> f64 {
    let total: BTreeSet<_> = all.into_iter().map(|s| spec.grid_of(&s.position)).collect();
    if total.is_empty() {
        return 0.0;
    }
    let hit = train.into_iter().map(|s| spec.grid_of(&s.position)).filter(|g| total.contains(g)).collect::<BTreeSet<_>>();
    hit.len() as f64 / total.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Ll,
    Rfp,
    Tl,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Ll => "ll",
            Method::Rfp => "rfp",
            Method::Tl => "tl",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ll" => Ok(Method::Ll),
            "rfp" => Ok(Method::Rfp),
            "tl" => Ok(Method::Tl),
            other => Err(format!("unknown method {other:?} (expected ll, rfp or tl)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub methods: Vec<Method>,
    pub grid_sizes: Vec<f64>,
    /// RSS bin sizes swept for LL. Empty means the default of 1 dB.
    #[serde(default)]
    pub bin_sizes: Vec<f64>,
    pub split: SplitSpec,
    #[serde(default)]
    pub distance: MeasurementDistanceKind,
    /// LL search parameters; `None` uses the table defaults for each grid.
    #[serde(default)]
    pub ll_params: Option<LaterationParams>,
    #[serde(default)]
    pub tl: TlOptions,
}

impl BenchConfig {
    pub fn new(methods: Vec<Method>, grid_sizes: Vec<f64>, split: SplitSpec) -> Self {
        Self {
            methods,
            grid_sizes,
            bin_sizes: Vec::new(),
            split,
            distance: MeasurementDistanceKind::default(),
            ll_params: None,
            tl: TlOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        self.split.validate()?;
        if self.methods.is_empty() {
            return config_err("at least one method is required");
        }
        if self.grid_sizes.is_empty() {
            return config_err("at least one grid size is required");
        }
        let mut seen = BTreeSet::new();
        for m in &self.methods {
            if !seen.insert(*m) {
                return config_err(format!("method {m} listed twice"));
            }
        }
        for &g in &self.grid_sizes {
            if !(g.is_finite() && g > 0.0) {
                return config_err(format!("grid size must be positive, got {g}"));
            }
        }
        for &b in &self.bin_sizes {
            BinSpec::new(b).map_err(|e| EvalError::Config(e.to_string()))?;
        }
        if !self.bin_sizes.is_empty() && !self.methods.contains(&Method::Ll) {
            return config_err("bin sizes apply only to ll, which is not selected");
        }
        if let Some(p) = &self.ll_params {
            p.validate().map_err(|e| EvalError::Config(e.to_string()))?;
        }
        Ok(())
    }

    fn bins(&self) -> Vec<f64> {
        if self.bin_sizes.is_empty() {
            vec![BinSpec::default().bin_size()]
        } else {
            self.bin_sizes.clone()
        }
    }

    /// Sweep cells in report order: methods as listed, then grid size, then
    /// bin size (LL only).
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for &method in &self.methods {
            for &grid_size in &self.grid_sizes {
                match method {
                    Method::Ll => out.extend(self.bins().into_iter().map(|b| Cell { method, grid_size, bin_size: Some(b) })),
                    _ => out.push(Cell { method, grid_size, bin_size: None }),
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub method: Method,
    pub grid_size: f64,
    pub bin_size: Option<f64>,
}

/// Everything a method needs besides the training samples.
#[derive(Debug, Clone, Copy)]
pub struct World<'a> {
    pub antennas: &'a [Antenna],
    pub model: &'a PathLossModel,
}

/// Raw outcome of localizing one test set with one trained method.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    /// Planar error per test query, in test order.
    pub errors: Vec<f64>,
    pub cost: QueryCost,
    /// Queries the method could not place; they are scored at the training
    /// centroid.
    pub no_information: usize,
    pub fallback: usize,
    pub ambiguous: usize,
    pub build_time: Duration,
    pub query_time: Duration,
}

enum Trained {
    Ll(LookupTables, LaterationParams),
    Rfp(RfpIndex),
    Tl,
}

/// Trains `cell.method` on `train` and localizes every sample of `test`.
pub fn evaluate(
    cell: &Cell,
    train: &[&LocatedSample],
    test: &[&LocatedSample],
    grid: GridSpec,
    config: &BenchConfig,
    world: World<'_>,
) -> Result<Evaluation, EvalError> {
    let start = Instant::now();
    let trained = match cell.method {
        Method::Ll => {
            let bins = BinSpec::new(cell.bin_size.unwrap_or(1.0)).map_err(|e| EvalError::Config(e.to_string()))?;
            let tables = LookupTables::construct(train.iter().copied(), bins, TableMode::Grid(grid))
                .map_err(|e| EvalError::Config(e.to_string()))?
                .with_antennas(world.antennas);
            let params = config.ll_params.unwrap_or_else(|| tables.default_params());
            Trained::Ll(tables, params)
        }
        Method::Rfp => Trained::Rfp(RfpIndex::build(train.iter().copied(), grid)),
        Method::Tl => Trained::Tl,
    };
    let build_time = start.elapsed();
    let default = centroid(train.iter().map(|s| &s.position)).unwrap_or_default();

    let mut ev = Evaluation {
        errors: Vec::with_capacity(test.len()),
        cost: QueryCost::default(),
        no_information: 0,
        fallback: 0,
        ambiguous: 0,
        build_time,
        query_time: Duration::ZERO,
    };
    let start = Instant::now();
    for s in test {
        let m = &s.measurement;
        let est: Result<LocationEstimate, LocalizeError> = match &trained {
            Trained::Ll(t, p) => t.laterate_counted(m, p, &mut ev.cost),
            Trained::Rfp(idx) => idx.localize_counted(m, config.distance, &mut ev.cost),
            Trained::Tl => tl_localize(m, world.antennas, world.model, &config.tl),
        };
        let position = match est {
            Ok(e) => {
                match e.status {
                    EstimateStatus::Resolved => {}
                    EstimateStatus::Ambiguous => ev.ambiguous += 1,
                    EstimateStatus::FallbackDefault => ev.fallback += 1,
                }
                e.position
            }
            Err(_) => {
                ev.no_information += 1;
                default
            }
        };
        ev.errors.push(position.distance(&s.position));
    }
    ev.query_time = start.elapsed();
    Ok(ev)
}

/// Mean and sample standard deviation over repetitions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Self { mean, std }
    }
}

/// Repetition-averaged metrics for one sweep cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub method: Method,
    pub grid_size: f64,
    pub bin_size: Option<f64>,
    pub repetitions: usize,
    /// Test queries per repetition.
    pub queries: usize,
    pub err67: Stat,
    pub err95: Stat,
    pub relative_error_67: f64,
    pub relative_error_95: f64,
    pub mean_error: Stat,
    pub coverage: Stat,
    pub no_information_rate: f64,
    pub fallback_rate: f64,
    pub ambiguous_rate: f64,
    pub table_cells_per_query: f64,
    pub grid_distances_per_query: f64,
    /// Mean over repetitions of the error at each percent, 1% to 100%.
    pub cdf: Vec<f64>,
}

/// Wall-clock figures for one sweep cell; these vary run to run and are
/// kept apart from the reproducible metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellTiming {
    pub method: Method,
    pub grid_size: f64,
    pub bin_size: Option<f64>,
    pub build_ms: f64,
    pub query_us: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub config: BenchConfig,
    pub percentile: String,
    pub samples: usize,
    pub cells: Vec<ErrorReport>,
    #[serde(skip)]
    pub timing: Vec<CellTiming>,
}

struct RepResult {
    err67: f64,
    err95: f64,
    mean: f64,
    coverage: f64,
    cdf: Vec<f64>,
    eval: Evaluation,
}

fn summarize(ev: Evaluation, coverage: f64) -> RepResult {
    let mut sorted = ev.errors.clone();
    sorted.sort_by(f64::total_cmp);
    let cdf = (1..=CDF_POINTS).map(|i| nearest_rank(&sorted, i as f64 / CDF_POINTS as f64)).collect();
    RepResult {
        err67: nearest_rank(&sorted, 0.67),
        err95: nearest_rank(&sorted, 0.95),
        mean: sorted.iter().sum::<f64>() / sorted.len() as f64,
        coverage,
        cdf,
        eval: ev,
    }
}

/// Runs every sweep cell over every repetition. Results do not depend on
/// the size of the rayon pool.
pub fn run_benchmark(samples: &[LocatedSample], world: World<'_>, config: &BenchConfig) -> Result<BenchReport, EvalError> {
    config.validate()?;
    if config.methods.contains(&Method::Tl) && world.antennas.is_empty() {
        return config_err("tl needs antenna positions");
    }
    let cells = config.cells();
    let specs: Vec<GridSpec> = config
        .grid_sizes
        .iter()
        .map(|&g| GridSpec::covering(samples.iter().map(|s| &s.position), g))
        .collect::<Result<_, _>>()
        .map_err(|e| EvalError::Config(e.to_string()))?;
    let spec_of = |size: f64| specs[config.grid_sizes.iter().position(|&g| g == size).expect("cell from config")];
    let splits: Vec<_> = (0..config.split.repetitions)
        .map(|rep| split_indices(samples.len(), &config.split, rep))
        .collect::<Result<_, _>>()?;

    let jobs: Vec<(usize, usize)> = (0..cells.len()).flat_map(|c| (0..splits.len()).map(move |r| (c, r))).collect();
    let results: Vec<RepResult> = jobs
        .par_iter()
        .map(|&(c, r)| {
            let (tr, te) = &splits[r];
            let train: Vec<&LocatedSample> = tr.iter().map(|&i| &samples[i]).collect();
            let test: Vec<&LocatedSample> = te.iter().map(|&i| &samples[i]).collect();
            let grid = spec_of(cells[c].grid_size);
            let ev = evaluate(&cells[c], &train, &test, grid, config, world)?;
            Ok(summarize(ev, coverage(train.iter().copied(), samples, &grid)))
        })
        .collect::<Result<_, EvalError>>()?;

    let reps = splits.len();
    let mut reports = Vec::with_capacity(cells.len());
    let mut timing = Vec::with_capacity(cells.len());
    for (c, cell) in cells.iter().enumerate() {
        let rs = &results[c * reps..(c + 1) * reps];
        let pick = |f: &dyn Fn(&RepResult) -> f64| Stat::of(&rs.iter().map(f).collect::<Vec<_>>());
        let queries = rs[0].eval.errors.len();
        let total = (queries * reps) as f64;
        let sum = |f: &dyn Fn(&Evaluation) -> u64| rs.iter().map(|r| f(&r.eval)).sum::<u64>() as f64;
        let err67 = pick(&|r| r.err67);
        let err95 = pick(&|r| r.err95);
        reports.push(ErrorReport {
            method: cell.method,
            grid_size: cell.grid_size,
            bin_size: cell.bin_size,
            repetitions: reps,
            queries,
            err67,
            err95,
            relative_error_67: err67.mean / cell.grid_size,
            relative_error_95: err95.mean / cell.grid_size,
            mean_error: pick(&|r| r.mean),
            coverage: pick(&|r| r.coverage),
            no_information_rate: sum(&|e| e.no_information as u64) / total,
            fallback_rate: sum(&|e| e.fallback as u64) / total,
            ambiguous_rate: sum(&|e| e.ambiguous as u64) / total,
            table_cells_per_query: sum(&|e| e.cost.table_cells) / total,
            grid_distances_per_query: sum(&|e| e.cost.grid_distances) / total,
            cdf: (0..CDF_POINTS).map(|i| rs.iter().map(|r| r.cdf[i]).sum::<f64>() / reps as f64).collect(),
        });
        let build: Duration = rs.iter().map(|r| r.eval.build_time).sum();
        let query: Duration = rs.iter().map(|r| r.eval.query_time).sum();
        timing.push(CellTiming {
            method: cell.method,
            grid_size: cell.grid_size,
            bin_size: cell.bin_size,
            build_ms: build.as_secs_f64() * 1e3 / reps as f64,
            query_us: query.as_secs_f64() * 1e6 / total.max(1.0),
        });
    }
    Ok(BenchReport { config: config.clone(), percentile: "nearest-rank".into(), samples: samples.len(), cells: reports, timing })
}

fn opt(v: Option<f64>) -> String {
    v.map(|b| b.to_string()).unwrap_or_default()
}

impl BenchReport {
    pub const CSV_HEADER: &'static str = "method,grid_size,bin_size,repetitions,queries,err67,err67_std,err95,err95_std,\
relative_error_67,relative_error_95,mean_error,mean_error_std,coverage,coverage_std,no_information_rate,fallback_rate,\
ambiguous_rate,table_cells_per_query,grid_distances_per_query";

    pub const TIMING_HEADER: &'static str = "method,grid_size,bin_size,build_ms,query_us";

    pub fn to_csv(&self) -> String {
        let mut out = format!("{}\n", Self::CSV_HEADER);
        for r in &self.cells {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                r.method,
                r.grid_size,
                opt(r.bin_size),
                r.repetitions,
                r.queries,
                r.err67.mean,
                r.err67.std,
                r.err95.mean,
                r.err95.std,
                r.relative_error_67,
                r.relative_error_95,
                r.mean_error.mean,
                r.mean_error.std,
                r.coverage.mean,
                r.coverage.std,
                r.no_information_rate,
                r.fallback_rate,
                r.ambiguous_rate,
                r.table_cells_per_query,
                r.grid_distances_per_query
            )
            .unwrap();
        }
        out
    }

    pub fn timing_csv(&self) -> String {
        let mut out = format!("{}\n", Self::TIMING_HEADER);
        for t in &self.timing {
            writeln!(out, "{},{},{},{},{}", t.method, t.grid_size, opt(t.bin_size), t.build_ms, t.query_us).unwrap();
        }
        out
    }

    /// Fixed-width summary table for terminals.
    pub fn summary(&self) -> String {
        let mut out = format!(
            "{:<6}{:>8}{:>6}{:>11}{:>11}{:>10}{:>12}\n",
            "method", "grid", "bin", "err67", "err95", "coverage", "query_us"
        );
        for (r, t) in self.cells.iter().zip(&self.timing) {
            writeln!(
                out,
                "{:<6}{:>8}{:>6}{:>11.2}{:>11.2}{:>10.3}{:>12.2}",
                r.method.name(),
                r.grid_size,
                r.bin_size.map(|b| b.to_string()).unwrap_or_else(|| "-".into()),
                r.err67.mean,
                r.err95.mean,
                r.coverage.mean,
                t.query_us
            )
            .unwrap();
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Point, Rect};
    use crate::scenario::{Measurement, Sampling, UrbanLayout};
    use proptest::prelude::*;

    #[test]
    fn split_examples() {
        let spec = SplitSpec::new(0.1, 1, 9).unwrap();
        let (tr, te) = split_indices(1000, &spec, 0).unwrap();
        assert_eq!((tr.len(), te.len()), (100, 900));
        assert_eq!(split_indices(1000, &spec, 0).unwrap(), (tr.clone(), te.clone()));
        assert_ne!(split_indices(1000, &spec, 1).unwrap().0, tr);
        let all: BTreeSet<_> = tr.iter().chain(&te).copied().collect();
        assert_eq!(all.len(), 1000);

        assert!(split_indices(4, &spec, 0).is_err());
        assert!(SplitSpec::new(0.0, 1, 0).is_err());
        assert!(SplitSpec::new(1.0, 1, 0).is_err());
        assert!(SplitSpec::new(0.5, 0, 0).is_err());
    }

    #[test]
    fn percentile_examples() {
        let v: Vec<f64> = (1..=100).rev().map(f64::from).collect();
        assert_eq!(error_percentile(&v, 0.67), Ok(67.0));
        assert_eq!(error_percentile(&v, 0.95), Ok(95.0));
        assert_eq!(error_percentile(&v, 1.0), Ok(100.0));
        assert_eq!(error_percentile(&v, 0.001), Ok(1.0));
        for p in [0.01, 0.5, 0.67, 1.0] {
            assert_eq!(error_percentile(&[42.0], p), Ok(42.0));
        }
        assert_eq!(error_percentile(&[], 0.5), Err(EvalError::EmptyErrors));
        assert!(error_percentile(&v, 0.0).is_err());
    }

    fn at(x: f64, y: f64) -> LocatedSample {
        LocatedSample { id: 0, position: Point::new(x, y), measurement: Measurement::new([(1, -50.0)]).unwrap() }
    }

    #[test]
    fn coverage_examples() {
        let spec = GridSpec::new(Point::default(), 10.0).unwrap();
        let all: Vec<_> = (0..20).map(|i| at(i as f64 * 10.0 + 5.0, 5.0)).collect();
        assert_eq!(coverage(&all[..5], &all, &spec), 0.25);
        assert_eq!(coverage(&all, &all, &spec), 1.0);
        assert_eq!(coverage(&[], &all, &spec), 0.0);
    }

    proptest! {
        #[test]
        fn split_is_a_partition(n in 2usize..400, f in 0.01..0.99f64, seed: u64, rep in 0usize..5) {
            let spec = SplitSpec::new(f, 1, seed).unwrap();
            match split_indices(n, &spec, rep) {
                Ok((tr, te)) => {
                    prop_assert_eq!(tr.len(), spec.train_count(n));
                    let mut all: Vec<_> = tr.iter().chain(&te).copied().collect();
                    all.sort_unstable();
                    prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
                }
                Err(_) => prop_assert!(spec.train_count(n) == 0 || spec.train_count(n) >= n),
            }
        }

        #[test]
        fn percentile_matches_counting_definition(v in proptest::collection::vec(0.0..1e4f64, 1..200), p in 0.001..1.0f64) {
            let x = error_percentile(&v, p).unwrap();
            // Smallest value with at least p·n values at or below it.
            let need = p * v.len() as f64 - 1e-9;
            let le = v.iter().filter(|&&e| e <= x).count() as f64;
            let lt = v.iter().filter(|&&e| e < x).count() as f64;
            prop_assert!(le >= need);
            prop_assert!(lt < need.max(1.0));
        }
    }

    fn worked_example() -> Vec<LocatedSample> {
        let mut v = Vec::new();
        for (i, r) in [-53.0, -55.0, -57.0, -59.0, -61.0].into_iter().enumerate() {
            v.push(LocatedSample { id: i as u64, position: Point::new(10.0, 10.0), measurement: Measurement::new([(1, r)]).unwrap() });
        }
        for (i, r) in [-58.0, -60.0, -62.0, -64.0, -66.0].into_iter().enumerate() {
            v.push(LocatedSample { id: 5 + i as u64, position: Point::new(30.0, 10.0), measurement: Measurement::new([(1, r)]).unwrap() });
        }
        v
    }

    #[test]
    fn worked_example_replay() {
        let data = worked_example();
        let refs: Vec<_> = data.iter().collect();
        let grid = GridSpec::new(Point::default(), 20.0).unwrap();
        let config = BenchConfig::new(vec![Method::Ll, Method::Rfp], vec![20.0], SplitSpec::new(0.5, 1, 0).unwrap());
        let antennas = [Antenna { id: 1, position: Point::new(-100.0, 10.0) }];
        let model = PathLossModel::default();
        let world = World { antennas: &antennas, model: &model };

        let ll = Cell { method: Method::Ll, grid_size: 20.0, bin_size: Some(1.0) };
        let ev = evaluate(&ll, &refs, &refs, grid, &config, world).unwrap();
        assert_eq!(error_percentile(&ev.errors, 0.67), Ok(0.0));
        assert_eq!(error_percentile(&ev.errors, 0.95), Ok(0.0));
        assert!(ev.cost.table_cells <= refs.len() as u64);

        let rfp = Cell { method: Method::Rfp, grid_size: 20.0, bin_size: None };
        let ev = evaluate(&rfp, &refs, &refs, grid, &config, world).unwrap();
        // The -61 reading sits nearer G_uv's mean.
        assert_eq!(ev.errors[4], 20.0);
        assert!(ev.errors.iter().sum::<f64>() > 0.0);
        assert_eq!(ev.cost.grid_distances, 2 * refs.len() as u64);
    }

    fn small_world() -> (crate::scenario::Scenario, Vec<LocatedSample>) {
        let s = UrbanLayout { extent: Rect::new(0.0, 0.0, 300.0, 300.0), antennas: 8, obstacles: 10, ..Default::default() }
            .build(11)
            .unwrap();
        let d = s.generate_dataset(Sampling::Uniform { count: 600 }, 11).unwrap();
        (s, d)
    }

    #[test]
    fn report_shape_and_relative_error() {
        let (s, d) = small_world();
        let mut config = BenchConfig::new(vec![Method::Ll, Method::Rfp, Method::Tl], vec![10.0, 25.0], SplitSpec::new(0.3, 2, 5).unwrap());
        config.bin_sizes = vec![1.0, 3.0];
        let world = World { antennas: &s.antennas, model: &s.model };
        let r = run_benchmark(&d, world, &config).unwrap();
        assert_eq!(r.cells.len(), 2 * 2 + 2 + 2);
        for c in &r.cells {
            assert!(c.err67.mean <= c.err95.mean);
            assert!((0.0..=1.0).contains(&c.coverage.mean));
            assert_eq!(c.relative_error_67, c.err67.mean / c.grid_size);
            assert_eq!(c.relative_error_95, c.err95.mean / c.grid_size);
            assert_eq!(c.cdf.len(), CDF_POINTS);
            assert!(c.cdf.windows(2).all(|w| w[0] <= w[1]));
            assert_eq!(c.queries, 420);
            match c.method {
                Method::Ll => assert!(c.table_cells_per_query <= 8.0),
                Method::Rfp => assert!(c.grid_distances_per_query > 1.0),
                Method::Tl => assert_eq!(c.table_cells_per_query + c.grid_distances_per_query, 0.0),
            }
        }
        let csv = r.to_csv();
        assert_eq!(csv.lines().count(), 1 + r.cells.len());
        assert!(csv.lines().all(|l| l.split(',').count() == BenchReport::CSV_HEADER.split(',').count()));
        assert_eq!(r.timing_csv().lines().count(), 1 + r.cells.len());
    }

    #[test]
    fn results_do_not_depend_on_pool_size() {
        let (s, d) = small_world();
        let config = BenchConfig::new(vec![Method::Ll, Method::Rfp], vec![20.0], SplitSpec::new(0.2, 3, 1).unwrap());
        let world = World { antennas: &s.antennas, model: &s.model };
        let run = |n| {
            rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap().install(|| run_benchmark(&d, world, &config).unwrap())
        };
        let (a, b) = (run(1), run(4));
        assert_eq!(a.to_csv(), b.to_csv());
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn config_errors() {
        let split = SplitSpec::new(0.5, 1, 0).unwrap();
        let mut c = BenchConfig::new(vec![Method::Rfp], vec![20.0], split);
        c.bin_sizes = vec![2.0];
        assert!(c.validate().is_err());
        assert!(BenchConfig::new(vec![], vec![20.0], split).validate().is_err());
        assert!(BenchConfig::new(vec![Method::Ll], vec![], split).validate().is_err());
        assert!(BenchConfig::new(vec![Method::Ll], vec![-1.0], split).validate().is_err());
        assert!(BenchConfig::new(vec![Method::Ll, Method::Ll], vec![5.0], split).validate().is_err());
        let (_, d) = small_world();
        let model = PathLossModel::default();
        let world = World { antennas: &[], model: &model };
        assert!(run_benchmark(&d, world, &BenchConfig::new(vec![Method::Tl], vec![20.0], split)).is_err());
    }
}
