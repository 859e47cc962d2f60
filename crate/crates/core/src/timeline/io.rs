//! Text formats for anchors (`year,cumulative_probability`) and annual
//! distributions (`year,probability` rows followed by `never,probability`).

use std::fs;
use std::path::Path;

use super::fit::Anchor;
use super::ArrivalDistribution;
use crate::error::{Error, Result};
use crate::format::sig;

/// Digits written for distribution probabilities; enough to round-trip an f64.
const DISTRIBUTION_DIGITS: usize = 17;

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// Data rows as `(line number, fields)`, skipping the mandatory header and blank lines.
fn data_rows<'a>(path: &Path, text: &'a str) -> Result<Vec<(usize, Vec<&'a str>)>> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    match lines.next() {
        Some((n, header)) => {
            let first = header.split(',').next().unwrap_or("").trim();
            if first.parse::<f64>().is_ok() {
                return Err(parse_error(path, n, "missing header line"));
            }
        }
        None => return Err(parse_error(path, 1, "empty file")),
    }
    Ok(lines.map(|(n, l)| (n, l.split(',').map(str::trim).collect())).collect())
}

fn parse_f64(path: &Path, line: usize, field: &str) -> Result<f64> {
    field
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| parse_error(path, line, format!("invalid number '{field}'")))
}

pub fn read_anchors(path: impl AsRef<Path>) -> Result<Vec<Anchor>> {
    let path = path.as_ref();
    let text = read_text(path)?;
    let mut anchors = Vec::new();
    for (line, fields) in data_rows(path, &text)? {
        if fields.len() != 2 {
            return Err(parse_error(path, line, "expected 'year,cumulative_probability'"));
        }
        let year = fields[0]
            .parse::<u32>()
            .map_err(|_| parse_error(path, line, format!("invalid year '{}'", fields[0])))?;
        let cumulative = parse_f64(path, line, fields[1])?;
        anchors.push(Anchor { year, cumulative });
    }
    Ok(anchors)
}

pub fn write_anchors(path: impl AsRef<Path>, anchors: &[Anchor]) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from("year,cumulative_probability\n");
    for a in anchors {
        out.push_str(&format!("{},{}\n", a.year, sig(a.cumulative, DISTRIBUTION_DIGITS)));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Reads a distribution file. The source label is the file stem.
pub fn read_distribution(path: impl AsRef<Path>) -> Result<ArrivalDistribution> {
    let path = path.as_ref();
    let text = read_text(path)?;
    let rows = data_rows(path, &text)?;
    let mut probs = Vec::new();
    let mut never = None;
    for (line, fields) in rows {
        if fields.len() != 2 {
            return Err(parse_error(path, line, "expected 'year,probability'"));
        }
        if never.is_some() {
            return Err(parse_error(path, line, "rows after the 'never' row"));
        }
        let p = parse_f64(path, line, fields[1])?;
        if fields[0] == "never" {
            never = Some(p);
            continue;
        }
        let year = fields[0]
            .parse::<usize>()
            .map_err(|_| parse_error(path, line, format!("invalid year '{}'", fields[0])))?;
        if year != probs.len() + 1 {
            return Err(parse_error(
                path,
                line,
                format!("expected year {}, found {year}", probs.len() + 1),
            ));
        }
        probs.push(p);
    }
    let p_never = never.ok_or_else(|| parse_error(path, text.lines().count(), "missing 'never' row"))?;
    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    ArrivalDistribution::new(probs, p_never, label)
}

pub fn write_distribution(path: impl AsRef<Path>, dist: &ArrivalDistribution) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from("year,probability\n");
    for (i, p) in dist.annual_probs().iter().enumerate() {
        out.push_str(&format!("{},{}\n", i + 1, sig(*p, DISTRIBUTION_DIGITS)));
    }
    out.push_str(&format!("never,{}\n", sig(dist.p_never(), DISTRIBUTION_DIGITS)));
    fs::write(path, out).map_err(|e| Error::io(path, e))
}
