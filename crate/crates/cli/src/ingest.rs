//! CSV ingestion and the bounding-box transform between raw data units and
//! the normalized domain.
//!
//! Rescaling is isotropic: one scale factor (the largest axis extent) is
//! shared by all axes, so Euclidean distances are preserved up to that factor
//! and a radius in raw units converts as `alpha_normalized = alpha / scale`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::errors::CliError;

/// Affine map between raw and normalized coordinates:
/// `normalized = (raw - offset) / scale` per axis. All `scale` entries are
/// equal (the maximum axis extent).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transform {
    pub offset: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Transform {
    pub fn dim(&self) -> usize {
        self.offset.len()
    }

    pub fn to_normalized(&self, raw: &[f64]) -> Vec<f64> {
        raw.iter()
            .zip(&self.offset)
            .zip(&self.scale)
            .map(|((&x, &o), &s)| (x - o) / s)
            .collect()
    }

    pub fn to_raw(&self, normalized: &[f64]) -> Vec<f64> {
        normalized
            .iter()
            .zip(&self.offset)
            .zip(&self.scale)
            .map(|((&x, &o), &s)| x * s + o)
            .collect()
    }

    /// Converts a radius in raw units into normalized units.
    pub fn normalize_radius(&self, alpha_raw: f64) -> f64 {
        alpha_raw / self.scale[0]
    }
}

/// Reads the selected numeric columns of a CSV file.
pub fn read_columns(
    path: &Path,
    columns: &[usize],
    has_header: bool,
) -> Result<Vec<Vec<f64>>, CliError> {
    if columns.is_empty() {
        return Err(CliError::Config("at least one column must be selected".into()));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Data(format!("cannot open {}: {e}", path.display())))?;
    let mut rows = Vec::new();
    let mut bad_rows: Vec<usize> = Vec::new();
    let header_offset = if has_header { 2 } else { 1 };
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let row_number = i + header_offset;
        let mut point = Vec::with_capacity(columns.len());
        let mut ok = true;
        for &col in columns {
            match record.get(col).map(str::parse::<f64>) {
                Some(Ok(v)) if v.is_finite() => point.push(v),
                _ => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            rows.push(point);
        } else {
            bad_rows.push(row_number);
        }
    }
    if !bad_rows.is_empty() {
        let shown: Vec<String> = bad_rows.iter().take(10).map(|r| r.to_string()).collect();
        return Err(CliError::Data(format!(
            "{} rows with missing or non-numeric fields (rows {}{})",
            bad_rows.len(),
            shown.join(", "),
            if bad_rows.len() > 10 { ", ..." } else { "" }
        )));
    }
    if rows.is_empty() {
        return Err(CliError::Data(format!(
            "{} contains no data rows",
            path.display()
        )));
    }
    Ok(rows)
}

/// Min-max rescale into `[0,1]^d` with a shared scale factor; returns the
/// normalized points and the transform.
pub fn normalize(raw: &[Vec<f64>]) -> Result<(Vec<Vec<f64>>, Transform), CliError> {
    let d = raw[0].len();
    let mut mins = vec![f64::INFINITY; d];
    let mut maxs = vec![f64::NEG_INFINITY; d];
    for p in raw {
        for i in 0..d {
            mins[i] = mins[i].min(p[i]);
            maxs[i] = maxs[i].max(p[i]);
        }
    }
    let mut extent = 0.0f64;
    for i in 0..d {
        let e = maxs[i] - mins[i];
        if e == 0.0 {
            return Err(CliError::Data(format!(
                "axis {i} is constant (zero extent); remove it or add variation"
            )));
        }
        extent = extent.max(e);
    }
    let transform = Transform {
        offset: mins,
        scale: vec![extent; d],
    };
    let points = raw.iter().map(|p| transform.to_normalized(p)).collect();
    Ok((points, transform))
}

/// Full ingestion: read, validate, and rescale.
pub fn ingest(
    path: &Path,
    columns: &[usize],
    has_header: bool,
) -> Result<(Vec<Vec<f64>>, Transform), CliError> {
    let raw = read_columns(path, columns, has_header)?;
    normalize(&raw)
}

/// Reads a single-column CSV of integer labels.
pub fn read_labels(path: &Path, has_header: bool) -> Result<Vec<u32>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Data(format!("cannot open {}: {e}", path.display())))?;
    let mut labels = Vec::new();
    for record in reader.records() {
        let record = record?;
        let field = record
            .get(0)
            .ok_or_else(|| CliError::Data("empty label row".into()))?;
        let value: u32 = field
            .parse()
            .map_err(|_| CliError::Data(format!("non-integer label {field:?}")))?;
        labels.push(value);
    }
    Ok(labels)
}
