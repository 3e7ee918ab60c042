use std::path::Path;

use nalgebra::DMatrix;

use super::{fmt_f64, ColumnSpec, IoError};
use crate::rank::MixedOutcomeMatrix;
use crate::spatial::LocationSet;

/// Outcomes and (optionally) coordinates read from a CSV file.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedData {
    pub y: MixedOutcomeMatrix,
    pub locations: Option<LocationSet>,
    pub rows: usize,
}

/// Reads the declared outcome columns and, if named, the two coordinate
/// columns. Empty fields are missing values; coordinates may not be missing.
/// Row numbers in errors count data rows from 1 (the header is not counted).
pub fn load_csv(path: &Path, columns: &[ColumnSpec], location_columns: &[String]) -> Result<LoadedData, IoError> {
    if !matches!(location_columns.len(), 0 | 2) {
        return Err(IoError::Config("location_columns must name zero or two columns".into()));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| IoError::format(path, e.to_string()))?;
    let header = reader
        .headers()
        .map_err(|e| IoError::format(path, e.to_string()))?
        .clone();
    let find = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| IoError::MissingColumn(name.to_string()))
    };
    let outcome_idx = columns.iter().map(|c| find(&c.name)).collect::<Result<Vec<_>, _>>()?;
    let loc_idx = location_columns
        .iter()
        .map(|c| find(c))
        .collect::<Result<Vec<_>, _>>()?;

    let p = columns.len();
    let mut values: Vec<f64> = Vec::new();
    let mut missing: Vec<bool> = Vec::new();
    let mut coords: Vec<[f64; 2]> = Vec::new();
    let mut rows = 0;
    for (r, record) in reader.records().enumerate() {
        let row = r + 1;
        let record = record.map_err(|e| IoError::format(path, format!("row {row}: {e}")))?;
        for (spec, &idx) in columns.iter().zip(&outcome_idx) {
            let field = record.get(idx).unwrap_or("");
            if field.is_empty() {
                values.push(f64::NAN);
                missing.push(true);
                continue;
            }
            let v = parse_number(field, row, &spec.name)?;
            if !spec.kind.accepts(v) {
                return Err(IoError::KindMismatch {
                    row,
                    column: spec.name.clone(),
                    kind: spec.kind,
                    value: v,
                });
            }
            values.push(v);
            missing.push(false);
        }
        if loc_idx.len() == 2 {
            let mut xy = [0.0; 2];
            for (k, &idx) in loc_idx.iter().enumerate() {
                xy[k] = parse_number(record.get(idx).unwrap_or(""), row, &location_columns[k])?;
            }
            coords.push(xy);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(IoError::format(path, "no data rows"));
    }
    // collected row by row; nalgebra wants column-major
    let values = DMatrix::from_row_slice(rows, p, &values);
    let missing = DMatrix::from_row_slice(rows, p, &missing);
    let names = columns.iter().map(|c| c.name.clone()).collect();
    let y = MixedOutcomeMatrix::new(values, columns.iter().map(|c| c.kind).collect(), missing)?.with_names(names);
    let locations = if loc_idx.is_empty() {
        None
    } else {
        Some(LocationSet::new(coords)?)
    };
    Ok(LoadedData { y, locations, rows })
}

fn parse_number(field: &str, row: usize, column: &str) -> Result<f64, IoError> {
    field
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| IoError::Parse {
            row,
            column: column.to_string(),
            value: field.to_string(),
        })
}

/// Writes the outcomes (missing cells empty) followed by coordinate columns
/// `x`, `y` when locations are given. Values are written in shortest
/// round-trip form, so [`load_csv`] reads them back bitwise.
pub fn write_csv(path: &Path, y: &MixedOutcomeMatrix, locations: Option<&LocationSet>) -> Result<(), IoError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| IoError::file(dir, e))?;
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| IoError::format(path, e.to_string()))?;
    let mut header: Vec<String> = y.names().to_vec();
    if locations.is_some() {
        header.extend(["x".to_string(), "y".to_string()]);
    }
    let io = |e: csv::Error| IoError::format(path, e.to_string());
    w.write_record(&header).map_err(io)?;
    for i in 0..y.n() {
        let mut rec: Vec<String> = (0..y.p())
            .map(|j| y.get(i, j).map(fmt_f64).unwrap_or_default())
            .collect();
        if let Some(l) = locations {
            let c = l.coords()[i];
            rec.push(fmt_f64(c[0]));
            rec.push(fmt_f64(c[1]));
        }
        w.write_record(&rec).map_err(io)?;
    }
    w.flush().map_err(|e| IoError::file(path, e))
}
