//! Point files: CSV, one point per row, no header unless asked for.

use std::io::{Read, Write};
use std::path::Path;

use robust_ellipsoid::PointSet;

use crate::CliError;

/// Parses every row as finite reals; all rows must have the width of the
/// first. Errors name the offending line.
pub fn parse_points<R: Read>(reader: R, header: bool) -> Result<PointSet, CliError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut coords = Vec::new();
    let mut dim = None;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CliError::Input(format!("csv: {e}")))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        let width = *dim.get_or_insert(rec.len());
        if rec.len() != width {
            return Err(CliError::Input(format!(
                "line {line}: expected {width} columns, found {}",
                rec.len()
            )));
        }
        for (col, field) in rec.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                CliError::Input(format!("line {line}, column {}: not a number: {field:?}", col + 1))
            })?;
            if !v.is_finite() {
                return Err(CliError::Input(format!(
                    "line {line}, column {}: non-finite value {field:?}",
                    col + 1
                )));
            }
            coords.push(v);
        }
    }
    let dim = dim.ok_or_else(|| CliError::Input("no points in input".into()))?;
    PointSet::from_flat(dim, coords).map_err(|e| CliError::Input(e.to_string()))
}

pub fn read_points(path: &Path, header: bool) -> Result<PointSet, CliError> {
    let file = std::fs::File::open(path)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    parse_points(file, header)
}

/// Rows of reals in shortest round-trip form.
pub fn write_rows<W: Write>(out: W, rows: impl IntoIterator<Item = Vec<f64>>) -> Result<(), CliError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    for row in rows {
        w.write_record(row.iter().map(|v| v.to_string()))
            .map_err(|e| CliError::Io(e.to_string()))?;
    }
    w.flush().map_err(|e| CliError::Io(e.to_string()))
}

pub fn write_rows_to(path: &Path, rows: impl IntoIterator<Item = Vec<f64>>) -> Result<(), CliError> {
    let file = std::fs::File::create(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    write_rows(file, rows)
}

pub fn write_points(path: &Path, points: &PointSet) -> Result<(), CliError> {
    write_rows_to(path, points.to_rows())
}
