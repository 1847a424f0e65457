//! Line-oriented sample files.
//!
//! ```text
//! # comment
//! id,x,y,aid:rss[;aid:rss]*
//! ```
//!
//! Floats are written with Rust's shortest round-trip representation, so
//! writing and re-reading a sample reproduces it bit for bit.

use std::io::{BufRead, Write};

use super::{AntennaId, LocatedSample, Measurement, ScenarioError};
use crate::geometry::Point;

pub fn format_sample(s: &LocatedSample) -> String {
    let readings: Vec<String> = s.measurement.iter().map(|(a, r)| format!("{a}:{r}")).collect();
    format!("{},{},{},{}", s.id, s.position.x, s.position.y, readings.join(";"))
}

pub fn write_samples<'a, W: Write>(
    mut w: W,
    samples: impl IntoIterator<Item = &'a LocatedSample>,
) -> std::io::Result<()> {
    for s in samples {
        writeln!(w, "{}", format_sample(s))?;
    }
    w.flush()
}

fn parse_line(line: &str, lineno: usize) -> Result<LocatedSample, ScenarioError> {
    let err = |msg: String| ScenarioError::Parse { line: lineno, msg };
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    if fields.len() != 4 {
        return Err(err(format!("expected 4 comma-separated fields `id,x,y,readings`, found {}", fields.len())));
    }
    let id: u64 = fields[0].parse().map_err(|_| err(format!("bad sample id {:?}", fields[0])))?;
    let coord = |s: &str| -> Result<f64, ScenarioError> {
        s.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| err(format!("bad coordinate {s:?}")))
    };
    let position = Point::new(coord(fields[1])?, coord(fields[2])?);
    if fields[3].is_empty() {
        return Err(ScenarioError::EmptyReadings { line: lineno });
    }
    let mut readings = Vec::new();
    for pair in fields[3].split(';').map(str::trim) {
        let (a, r) = pair
            .split_once(':')
            .ok_or_else(|| err(format!("reading {pair:?} is not `antennaId:rss`")))?;
        let a: AntennaId = a.trim().parse().map_err(|_| err(format!("bad antenna id {a:?}")))?;
        let r: f64 = r.trim().parse().map_err(|_| err(format!("bad RSS value {r:?}")))?;
        readings.push((a, r));
    }
    let measurement = Measurement::new(readings).map_err(|e| err(e.to_string()))?;
    Ok(LocatedSample { id, position, measurement })
}

/// Streaming reader over a sample file. Blank and `#` lines are skipped;
/// each record yields `Ok(sample)` or an error carrying its 1-based line
/// number, so callers may either stop at the first error or count rejects.
pub struct SampleReader<R> {
    lines: std::io::Lines<R>,
    lineno: usize,
}

impl<R: BufRead> SampleReader<R> {
    pub fn new(reader: R) -> Self {
        Self { lines: reader.lines(), lineno: 0 }
    }
}

impl<R: BufRead> Iterator for SampleReader<R> {
    type Item = Result<LocatedSample, ScenarioError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = match self.lines.next()? {
                Ok(l) => l,
                Err(e) => return Some(Err(e.into())),
            };
            self.lineno += 1;
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            return Some(parse_line(t, self.lineno));
        }
    }
}

/// Reads every sample, failing on the first malformed or empty record.
pub fn ingest_samples<R: BufRead>(reader: R) -> Result<Vec<LocatedSample>, ScenarioError> {
    SampleReader::new(reader).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{Sampling, UrbanLayout};
    use proptest::prelude::*;

    #[test]
    fn parses_a_record() {
        let s = ingest_samples("7,100.0,200.0,183:-79.0;27:-85.2\n".as_bytes()).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].id, 7);
        assert_eq!(s[0].position, Point::new(100.0, 200.0));
        assert_eq!(s[0].measurement.get(183), -79.0);
        assert_eq!(s[0].measurement.get(27), -85.2);
    }

    #[test]
    fn empty_readings_rejected() {
        let e = ingest_samples("7,100.0,200.0,\n".as_bytes()).unwrap_err();
        assert!(matches!(e, ScenarioError::EmptyReadings { line: 1 }));
    }

    #[test]
    fn garbage_names_line() {
        let e = ingest_samples("# header\n1,0,0,1:-50\ngarbage\n".as_bytes()).unwrap_err();
        match e {
            ScenarioError::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(e.to_string().starts_with("line 3"));
    }

    #[test]
    fn bad_fields() {
        for bad in ["x,0,0,1:-50", "1,a,0,1:-50", "1,0,0,1-50", "1,0,0,1:-50;1:-60", "1,0,0,1:nan", "1,0,0,1:-50,5"] {
            assert!(matches!(ingest_samples(bad.as_bytes()), Err(ScenarioError::Parse { line: 1, .. })), "{bad}");
        }
    }

    #[test]
    fn reader_continues_after_reject() {
        let text = "1,0,0,1:-50\n2,0,0,\n3,1,1,2:-60\n";
        let results: Vec<_> = SampleReader::new(text.as_bytes()).collect();
        assert_eq!(results.len(), 3);
        assert!(results[0].is_ok() && results[1].is_err() && results[2].is_ok());
    }

    #[test]
    fn generated_dataset_round_trips() {
        let s = UrbanLayout::default().build(5).unwrap();
        let data = s.generate_dataset(Sampling::Uniform { count: 200 }, 17).unwrap();
        let mut buf = Vec::new();
        write_samples(&mut buf, &data).unwrap();
        assert_eq!(ingest_samples(buf.as_slice()).unwrap(), data);
    }

    proptest! {
        #[test]
        fn arbitrary_samples_round_trip(
            id in any::<u64>(),
            x in -1e7..1e7f64, y in -1e7..1e7f64,
            readings in proptest::collection::btree_map(any::<u32>(), -200.0..20.0f64, 1..25),
        ) {
            let sample = LocatedSample {
                id,
                position: Point::new(x, y),
                measurement: Measurement::new(readings).unwrap(),
            };
            let parsed = ingest_samples(format_sample(&sample).as_bytes()).unwrap();
            prop_assert_eq!(parsed, vec![sample]);
        }
    }
}
