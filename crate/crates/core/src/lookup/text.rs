//! Canonical line-text serialization of [`LookupTables`].
//!
//! ```text
//! lookup-tables v1
//! bin <size>
//! mode grid
//! grid <origin_x> <origin_y> <cell_size>      (grid mode)
//! mode continuous <cluster_diameter>          (continuous mode)
//! antenna <id> <x> <y>                        (zero or more)
//! cell <antenna> <bin> <entry> [<entry> ...]
//! ```
//!
//! Grid entries are `ix:iy`, continuous entries `x:y`. Cells appear in
//! `(antenna, bin)` order with sorted entries, so equal tables serialize to
//! identical bytes.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::{Entry, LookupTables, TableMode};
use crate::artifact::{format_err, format_grid, parse_f64, parse_grid, parse_grid_id, parse_num, parse_point, records, ArtifactError};
use crate::geometry::Point;
use crate::grid::BinSpec;

const MAGIC: &str = "lookup-tables v1";

impl LookupTables {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{MAGIC}").unwrap();
        writeln!(out, "bin {}", self.bins.bin_size()).unwrap();
        match self.mode {
            TableMode::Grid(spec) => {
                writeln!(out, "mode grid").unwrap();
                writeln!(out, "{}", format_grid(&spec)).unwrap();
            }
            TableMode::Continuous { cluster_diameter } => writeln!(out, "mode continuous {cluster_diameter}").unwrap(),
        }
        for (id, p) in &self.antennas {
            writeln!(out, "antenna {id} {} {}", p.x, p.y).unwrap();
        }
        for ((a, b), entries) in &self.cells {
            write!(out, "cell {a} {b}").unwrap();
            for e in entries {
                match e {
                    Entry::Cell(g) => write!(out, " {g}").unwrap(),
                    Entry::Point(p) => write!(out, " {}:{}", p.x, p.y).unwrap(),
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, ArtifactError> {
        let mut recs = records(text);
        match recs.next() {
            Some((_, MAGIC)) => {}
            Some((line, other)) => return Err(format_err(line, format!("expected `{MAGIC}`, found {other:?}"))),
            None => return Err(format_err(1, "empty lookup table artifact")),
        }
        let mut bins = None;
        let mut mode_line = None;
        let mut mode = None;
        let mut antennas = BTreeMap::new();
        let mut cells = BTreeMap::new();
        for (line, rec) in recs {
            let mut toks = rec.split_whitespace();
            match toks.next() {
                Some("bin") => {
                    let s = parse_f64(toks.next(), line, "bin size")?;
                    bins = Some(BinSpec::new(s).map_err(|e| format_err(line, e.to_string()))?);
                }
                Some("mode") => {
                    mode_line = Some(line);
                    match toks.next() {
                        Some("grid") => mode = Some(None),
                        Some("continuous") => {
                            let d = parse_f64(toks.next(), line, "cluster diameter")?;
                            if d <= 0.0 {
                                return Err(format_err(line, "cluster diameter must be positive"));
                            }
                            mode = Some(Some(TableMode::Continuous { cluster_diameter: d }));
                        }
                        other => return Err(format_err(line, format!("unknown mode {other:?}"))),
                    }
                }
                Some("grid") => {
                    if mode != Some(None) {
                        return Err(format_err(line, "`grid` line requires a preceding `mode grid`"));
                    }
                    mode = Some(Some(TableMode::Grid(parse_grid(toks.by_ref(), line)?)));
                }
                Some("antenna") => {
                    let id = parse_num(toks.next(), line, "antenna id")?;
                    let p = Point::new(parse_f64(toks.next(), line, "x")?, parse_f64(toks.next(), line, "y")?);
                    antennas.insert(id, p);
                }
                Some("cell") => {
                    let m = match mode {
                        Some(Some(m)) => m,
                        _ => return Err(format_err(line, "`cell` before the table mode is fully specified")),
                    };
                    let a = parse_num(toks.next(), line, "antenna id")?;
                    let b = parse_num(toks.next(), line, "bin")?;
                    let mut entries = toks
                        .by_ref()
                        .map(|t| match m {
                            TableMode::Grid(_) => parse_grid_id(t, line).map(Entry::Cell),
                            TableMode::Continuous { .. } => parse_point(t, line).map(Entry::Point),
                        })
                        .collect::<Result<Vec<_>, _>>()?;
                    if entries.is_empty() {
                        return Err(format_err(line, "cell has no entries"));
                    }
                    entries.sort();
                    entries.dedup();
                    if cells.insert((a, b), entries).is_some() {
                        return Err(format_err(line, format!("duplicate cell ({a}, {b})")));
                    }
                }
                other => return Err(format_err(line, format!("unknown record {other:?}"))),
            }
            if toks.next().is_some() {
                return Err(format_err(line, "trailing tokens"));
            }
        }
        let bins = bins.ok_or_else(|| format_err(0, "missing `bin` record"))?;
        let mode = match mode {
            Some(Some(m)) => m,
            Some(None) => return Err(format_err(mode_line.unwrap_or(0), "grid mode without a `grid` record")),
            None => return Err(format_err(0, "missing `mode` record")),
        };
        Ok(LookupTables { mode, bins, cells, antennas })
    }
}
