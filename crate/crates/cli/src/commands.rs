use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use lookup_lateration::baselines::{tl_localize, MeasurementDistanceKind, RfpIndex, TlOptions};
use lookup_lateration::eval::{run_benchmark, BenchConfig, Method, SplitSpec, World};
use lookup_lateration::lookup::{Entry, LaterationParams, LookupTables, TableMode};
use lookup_lateration::scenario::{ingest_samples, write_samples, LocatedSample, Measurement, Sampling, Scenario, UrbanLayout};
use lookup_lateration::{BinSpec, EstimateStatus, GridSpec, LocalizeError, Point, Rect};

use crate::error::{CliError, Result};
use crate::{BenchArgs, BuildArgs, GenArgs, LocalizeArgs, ScenarioArgs};

fn required<T>(v: Option<T>, flag: &str) -> Result<T> {
    v.ok_or_else(|| CliError::usage(format!("missing required --{flag}")))
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn load_scenario(path: &Path) -> Result<Scenario> {
    Scenario::from_json(&read_text(path)?).map_err(|e| CliError::io(path, e))
}

fn load_samples(path: &Path) -> Result<Vec<LocatedSample>> {
    let f = File::open(path).map_err(|e| CliError::io(path, e))?;
    let samples = ingest_samples(BufReader::new(f)).map_err(|e| CliError::io(path, e))?;
    if samples.is_empty() {
        return Err(CliError::io(path, "no usable samples"));
    }
    Ok(samples)
}

fn distance_kind(s: Option<&str>) -> Result<MeasurementDistanceKind> {
    s.map_or(Ok(MeasurementDistanceKind::default()), |s| s.parse().map_err(CliError::Usage))
}

fn parse_pair(s: &str, what: &str) -> Result<(f64, f64)> {
    let bad = || CliError::usage(format!("{what} {s:?} is not `x,y`"));
    let (a, b) = s.split_once(',').ok_or_else(bad)?;
    let a: f64 = a.trim().parse().map_err(|_| bad())?;
    let b: f64 = b.trim().parse().map_err(|_| bad())?;
    if a.is_finite() && b.is_finite() {
        Ok((a, b))
    } else {
        Err(bad())
    }
}

/// Parses `aid:rss` pairs separated by `;` or `,`.
pub fn parse_query(q: &str) -> Result<Measurement> {
    let mut readings = Vec::new();
    for part in q.split([';', ',']).map(str::trim).filter(|p| !p.is_empty()) {
        let bad = || CliError::usage(format!("query reading {part:?} is not `antenna:rss`"));
        let (a, r) = part.split_once(':').ok_or_else(bad)?;
        let a: u32 = a.trim().parse().map_err(|_| bad())?;
        let r: f64 = r.trim().parse().map_err(|_| bad())?;
        readings.push((a, r));
    }
    if readings.is_empty() {
        return Err(CliError::usage("query has no readings"));
    }
    Measurement::new(readings).map_err(|e| CliError::usage(e.to_string()))
}

pub fn scenario(a: ScenarioArgs) -> Result<()> {
    let side = a.extent.unwrap_or(1000.0);
    let d = UrbanLayout::default();
    let layout = UrbanLayout {
        extent: Rect::new(0.0, 0.0, side, side),
        antennas: a.antennas.unwrap_or(d.antennas),
        obstacles: a.obstacles.unwrap_or(d.obstacles),
        penalty: a.penalty.unwrap_or(d.penalty),
        noise_std: a.noise.unwrap_or(d.noise_std),
        ..d
    };
    let s = layout.build(a.seed.unwrap_or(0)).map_err(|e| CliError::usage(e.to_string()))?;
    let out = required(a.out, "out")?;
    write_text(&out, &(s.to_json() + "\n"))?;
    println!("{} antennas, {} obstacles", s.antennas.len(), s.obstacles.len());
    Ok(())
}

fn sampling(samples: Option<usize>, lattice: Option<&str>) -> Result<Sampling> {
    match (samples, lattice) {
        (Some(_), Some(_)) => Err(CliError::usage("--samples and --lattice are exclusive")),
        (Some(0), None) => Err(CliError::usage("--samples must be at least 1")),
        (Some(count), None) => Ok(Sampling::Uniform { count }),
        (None, Some(l)) => {
            let bad = || CliError::usage(format!("lattice {l:?} is not `NXxNY`"));
            let (x, y) = l.split_once('x').ok_or_else(bad)?;
            let nx: usize = x.parse().map_err(|_| bad())?;
            let ny: usize = y.parse().map_err(|_| bad())?;
            if nx == 0 || ny == 0 {
                return Err(bad());
            }
            Ok(Sampling::Lattice { nx, ny })
        }
        (None, None) => Err(CliError::usage("one of --samples or --lattice is required")),
    }
}

fn scenario_or_default(path: Option<&Path>, seed: u64) -> Result<Scenario> {
    match path {
        Some(p) => load_scenario(p),
        None => UrbanLayout::default().build(seed).map_err(|e| CliError::usage(e.to_string())),
    }
}

pub fn gen(a: GenArgs) -> Result<()> {
    let seed = a.seed.unwrap_or(0);
    let sampling = sampling(a.samples, a.lattice.as_deref())?;
    let mut s = scenario_or_default(a.scenario.as_deref(), seed)?;
    if let Some(n) = a.noise {
        s.noise_std = n;
        s.validate().map_err(|e| CliError::usage(e.to_string()))?;
    }
    let out = required(a.out, "out")?;
    let data = s.generate_dataset(sampling, seed).map_err(|e| CliError::usage(e.to_string()))?;
    let f = File::create(&out).map_err(|e| CliError::io(&out, e))?;
    write_samples(BufWriter::new(f), &data).map_err(|e| CliError::io(&out, e))?;
    let e = s.extent;
    println!("{} samples, extent {} {} {} {}", data.len(), e.xmin, e.ymin, e.xmax, e.ymax);
    Ok(())
}

fn grid_spec(size: Option<f64>, origin: Option<&str>) -> Result<GridSpec> {
    let (ox, oy) = origin.map_or(Ok((0.0, 0.0)), |o| parse_pair(o, "origin"))?;
    GridSpec::new(Point::new(ox, oy), size.unwrap_or(20.0)).map_err(|e| CliError::usage(e.to_string()))
}

pub fn build(a: BuildArgs) -> Result<()> {
    let method = a.method.unwrap_or(Method::Ll);
    let spec = grid_spec(a.grid, a.origin.as_deref())?;
    let input = required(a.input, "in")?;
    let text = match method {
        Method::Ll => {
            let bins = BinSpec::new(a.bin.unwrap_or(1.0)).map_err(|e| CliError::usage(e.to_string()))?;
            let mode = match a.cluster {
                Some(d) => TableMode::Continuous { cluster_diameter: d },
                None => TableMode::Grid(spec),
            };
            let samples = load_samples(&input)?;
            let mut tables = LookupTables::construct(&samples, bins, mode).map_err(|e| CliError::usage(e.to_string()))?;
            if let Some(p) = &a.scenario {
                tables = tables.with_antennas(&load_scenario(p)?.antennas);
            }
            println!("{} table cells, {} entries", tables.num_cells(), tables.num_entries());
            if a.list {
                for ((ant, bin), entries) in tables.cells() {
                    let shown: Vec<String> = entries
                        .iter()
                        .map(|e| match e {
                            Entry::Cell(g) => g.to_string(),
                            Entry::Point(p) => format!("{}:{}", p.x, p.y),
                        })
                        .collect();
                    println!("{ant},{bin} -> {}", shown.join(" "));
                }
            }
            tables.to_text()
        }
        Method::Rfp => {
            if a.bin.is_some() || a.cluster.is_some() || a.scenario.is_some() {
                return Err(CliError::usage("--bin, --cluster and --scenario apply only to ll"));
            }
            let samples = load_samples(&input)?;
            let index = RfpIndex::build(&samples, spec);
            println!("{} grids", index.num_grids());
            if a.list {
                for g in index.grids() {
                    let (mean, counts) = index.grid_mean(*g).expect("listed grid");
                    let shown: Vec<String> = mean.iter().map(|(ant, r)| format!("{ant}:{r}:{}", counts[&ant])).collect();
                    println!("{g} -> {}", shown.join(" "));
                }
            }
            index.to_text()
        }
        Method::Tl => return Err(CliError::usage("tl has no artifact; use `localize --method tl --scenario`")),
    };
    if let Some(out) = a.out {
        write_text(&out, &text)?;
    }
    Ok(())
}

pub fn localize(a: LocalizeArgs) -> Result<()> {
    let method = a.method.unwrap_or(Method::Ll);
    let m = parse_query(&required(a.q, "q")?)?;
    let est = match method {
        Method::Ll => {
            let path = required(a.artifact, "artifact")?;
            let tables = LookupTables::from_text(&read_text(&path)?).map_err(|e| CliError::io(&path, e))?;
            let mut params = tables.default_params();
            if let Some(t) = a.tolerance {
                params.tolerance = t;
            }
            if let Some(s) = a.spread {
                params.spread_threshold = s;
            }
            params.validate().map_err(|e| CliError::usage(e.to_string()))?;
            tables.laterate(&m, &params)
        }
        Method::Rfp => {
            let path = required(a.artifact, "artifact")?;
            let index = RfpIndex::from_text(&read_text(&path)?).map_err(|e| CliError::io(&path, e))?;
            index.localize(&m, distance_kind(a.distance.as_deref())?)
        }
        Method::Tl => {
            let s = load_scenario(&required(a.scenario, "scenario")?)?;
            tl_localize(&m, &s.antennas, &s.model, &TlOptions::default())
        }
    };
    match est {
        Ok(e) => {
            println!("{} {} {}", e.position.x, e.position.y, e.status);
            if e.status == EstimateStatus::FallbackDefault {
                return Err(CliError::NoInformation("no reading matched a table cell; placed at the strongest antenna".into()));
            }
            Ok(())
        }
        Err(e @ (LocalizeError::NoInformation | LocalizeError::InsufficientObservations { .. })) => {
            Err(CliError::NoInformation(e.to_string()))
        }
    }
}

fn bench_echo(a: &BenchArgs) -> serde_json::Value {
    let mut v = serde_json::to_value(a).expect("plain data");
    if let Some(m) = v.as_object_mut() {
        m.remove("out-dir");
    }
    v
}

pub fn bench(a: BenchArgs) -> Result<()> {
    let seed = a.seed.unwrap_or(0);
    let (samples, scenario) = match (&a.input, &a.scenario) {
        (Some(p), s) => (load_samples(p)?, s.as_deref().map(load_scenario).transpose()?),
        (None, s) => {
            let sc = scenario_or_default(s.as_deref(), seed)?;
            let n = a.samples.unwrap_or(10_000);
            if n == 0 {
                return Err(CliError::usage("--samples must be at least 1"));
            }
            let data = sc.generate_dataset(Sampling::Uniform { count: n }, seed).map_err(|e| CliError::usage(e.to_string()))?;
            (data, Some(sc))
        }
    };
    let reps = a.reps.unwrap_or(10);
    let split = SplitSpec::new(a.train_frac.unwrap_or(0.1), reps, seed).map_err(|e| CliError::usage(e.to_string()))?;
    let mut config = BenchConfig::new(
        a.methods.clone().unwrap_or_else(|| vec![Method::Ll, Method::Rfp]),
        a.grids.clone().unwrap_or_else(|| vec![20.0]),
        split,
    );
    config.bin_sizes = a.bins.clone().unwrap_or_default();
    config.distance = distance_kind(a.distance.as_deref())?;
    if let Some(s) = a.spread {
        config.ll_params = Some(LaterationParams { tolerance: 0.0, spread_threshold: s });
    }
    let model = scenario.as_ref().map(|s| s.model).unwrap_or_default();
    let antennas = scenario.as_ref().map_or(&[][..], |s| s.antennas.as_slice());
    let report =
        run_benchmark(&samples, World { antennas, model: &model }, &config).map_err(|e| CliError::usage(e.to_string()))?;
    print!("{}", report.summary());

    if let Some(dir) = &a.out_dir {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let json = serde_json::json!({ "config": bench_echo(&a), "report": report });
        let files: [(PathBuf, String); 3] = [
            (dir.join("report.csv"), report.to_csv()),
            (dir.join("report.json"), serde_json::to_string_pretty(&json).expect("plain data") + "\n"),
            (dir.join("timing.csv"), report.timing_csv()),
        ];
        for (path, text) in &files {
            let f = File::create(path).map_err(|e| CliError::io(path, e))?;
            let mut w = BufWriter::new(f);
            w.write_all(text.as_bytes()).and_then(|_| w.flush()).map_err(|e| CliError::io(path, e))?;
        }
    }
    Ok(())
}
