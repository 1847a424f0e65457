//! Shared plumbing for the line-text artifact formats (lookup tables and
//! fingerprint indices): a versioned magic first line, `#` comments, and
//! whitespace-separated records.

use thiserror::Error;

use crate::geometry::Point;
use crate::grid::{GridId, GridSpec};

#[derive(Debug, Error)]
pub enum ArtifactError {
    #[error("line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn format_err(line: usize, msg: impl Into<String>) -> ArtifactError {
    ArtifactError::Format { line, msg: msg.into() }
}

/// Non-comment, non-blank lines with their 1-based line numbers.
pub(crate) fn records(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

pub(crate) fn parse_num<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T, ArtifactError> {
    let tok = tok.ok_or_else(|| format_err(line, format!("missing {what}")))?;
    tok.parse().map_err(|_| format_err(line, format!("bad {what} {tok:?}")))
}

pub(crate) fn parse_f64(tok: Option<&str>, line: usize, what: &str) -> Result<f64, ArtifactError> {
    let v: f64 = parse_num(tok, line, what)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format_err(line, format!("{what} must be finite")))
    }
}

pub(crate) fn parse_grid_id(tok: &str, line: usize) -> Result<GridId, ArtifactError> {
    let (x, y) = tok
        .split_once(':')
        .ok_or_else(|| format_err(line, format!("grid id {tok:?} is not `ix:iy`")))?;
    Ok(GridId::new(parse_num(Some(x), line, "grid ix")?, parse_num(Some(y), line, "grid iy")?))
}

pub(crate) fn parse_point(tok: &str, line: usize) -> Result<Point, ArtifactError> {
    let (x, y) = tok
        .split_once(':')
        .ok_or_else(|| format_err(line, format!("point {tok:?} is not `x:y`")))?;
    Ok(Point::new(parse_f64(Some(x), line, "x")?, parse_f64(Some(y), line, "y")?))
}

/// `grid <origin_x> <origin_y> <cell_size>`
pub(crate) fn format_grid(spec: &GridSpec) -> String {
    format!("grid {} {} {}", spec.origin().x, spec.origin().y, spec.cell_size())
}

pub(crate) fn parse_grid<'a>(mut toks: impl Iterator<Item = &'a str>, line: usize) -> Result<GridSpec, ArtifactError> {
    let ox = parse_f64(toks.next(), line, "grid origin x")?;
    let oy = parse_f64(toks.next(), line, "grid origin y")?;
    let size = parse_f64(toks.next(), line, "cell size")?;
    GridSpec::new(Point::new(ox, oy), size).map_err(|e| format_err(line, e.to_string()))
}
