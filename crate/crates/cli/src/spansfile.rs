//! The released span file: a canonical JSON document holding the grid, the
//! raw-to-normalized transform, the spans as cell lists, and full provenance.
//! Field order is fixed and cells are listed lexicographically, so identical
//! runs produce byte-identical files.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use dp_dbscan::pipeline::{HistogramKind, ReleasedHistogram};
use dp_dbscan::{CellIndex, GridSpec, SpanSet, SparseHistogram};

use crate::errors::CliError;
use crate::ingest::Transform;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSection {
    pub d: usize,
    pub w: f64,
    pub alpha_normalized: f64,
    pub cells_per_axis: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpanSection {
    pub id: u32,
    pub cells: Vec<Vec<u64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProvenanceSection {
    pub epsilon: f64,
    pub beta: f64,
    pub theta: f64,
    pub eta_prime: f64,
    pub w: f64,
    pub kappa: usize,
    pub gamma: f64,
    pub big_gamma: f64,
    pub tau: f64,
    pub rho: f64,
    pub alpha_raw: f64,
    pub alpha_normalized: f64,
    pub min_pts: u64,
    pub min_pts_effective: f64,
    pub seed: u64,
    pub histogram_mode: String,
    pub histogram_sha256: String,
    pub epsilon_spent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpansFile {
    pub grid: GridSection,
    pub transform: Transform,
    pub spans: Vec<SpanSection>,
    pub provenance: ProvenanceSection,
}

/// SHA-256 over the sorted `(cell id, count bits)` entries of a histogram.
pub fn histogram_hash(hist: &SparseHistogram, spec: &GridSpec) -> String {
    let mut hasher = Sha256::new();
    for (cell, value) in hist.sorted_entries(spec) {
        for c in &cell.coords {
            hasher.update(c.to_le_bytes());
        }
        hasher.update(value.to_bits().to_le_bytes());
    }
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Assembles the released document for one span extraction.
pub fn build_file(
    span_set: &SpanSet,
    release: &ReleasedHistogram,
    transform: &Transform,
    alpha_raw: f64,
    seed: u64,
) -> Result<SpansFile, CliError> {
    let provenance = span_set
        .provenance
        .as_ref()
        .ok_or_else(|| CliError::Config("span set lacks provenance".into()))?;
    let grid = &span_set.grid;
    let mode = match provenance.histogram_kind {
        HistogramKind::Naive => "naive",
        HistogramKind::Linear => "linear",
    };
    Ok(SpansFile {
        grid: GridSection {
            d: grid.dim(),
            w: grid.width(),
            alpha_normalized: grid.alpha(),
            cells_per_axis: grid.cells_per_axis(),
        },
        transform: transform.clone(),
        spans: span_set
            .spans
            .iter()
            .map(|s| SpanSection {
                id: s.id,
                cells: s.cells.iter().map(|c| c.coords.clone()).collect(),
            })
            .collect(),
        provenance: ProvenanceSection {
            epsilon: provenance.privacy.epsilon,
            beta: provenance.privacy.beta,
            theta: provenance.theta_used,
            eta_prime: grid.eta_prime(),
            w: grid.width(),
            kappa: provenance.bounds.kappa,
            gamma: provenance.bounds.gamma,
            big_gamma: provenance.bounds.big_gamma,
            tau: provenance.bounds.tau,
            rho: provenance.bounds.rho,
            alpha_raw,
            alpha_normalized: grid.alpha(),
            min_pts: provenance.dbscan.min_pts,
            min_pts_effective: provenance.min_pts_effective,
            seed,
            histogram_mode: mode.to_string(),
            histogram_sha256: histogram_hash(&release.histogram, grid),
            epsilon_spent: provenance.epsilon_spent,
        },
    })
}

pub fn save(file: &SpansFile, path: &Path) -> Result<(), CliError> {
    let json = serde_json::to_string_pretty(file)?;
    std::fs::write(path, json + "\n")?;
    Ok(())
}

pub fn load(path: &Path) -> Result<SpansFile, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    Ok(serde_json::from_str(&text)?)
}

impl SpansFile {
    /// Rebuilds the in-memory span set; the grid is reconstructed from
    /// `(d, alpha, eta')` and must reproduce the stored width.
    pub fn to_span_set(&self) -> Result<SpanSet, CliError> {
        if self.transform.dim() != self.grid.d {
            return Err(CliError::Data(format!(
                "transform is {}-dimensional, grid is {}-dimensional",
                self.transform.dim(),
                self.grid.d
            )));
        }
        let grid = GridSpec::new(self.grid.d, self.grid.alpha_normalized, self.provenance.eta_prime)
            .map_err(CliError::from)?;
        if grid.width() != self.grid.w || grid.cells_per_axis() != self.grid.cells_per_axis {
            return Err(CliError::Data(format!(
                "grid mismatch: file says w={}, cells={}, reconstruction gives w={}, cells={}",
                self.grid.w,
                self.grid.cells_per_axis,
                grid.width(),
                grid.cells_per_axis()
            )));
        }
        let spans = self
            .spans
            .iter()
            .map(|s| dp_dbscan::Span {
                id: s.id,
                cells: s.cells.iter().map(|c| CellIndex::new(c.clone())).collect(),
            })
            .collect();
        Ok(SpanSet::new(spans, grid, None))
    }

    /// Emits one CSV row per span cell with the rectangle corners in raw
    /// units: `span_id,lo_0,...,lo_{d-1},hi_0,...,hi_{d-1}`.
    pub fn write_plot_data<W: std::io::Write>(&self, out: &mut W) -> Result<(), CliError> {
        let span_set = self.to_span_set()?;
        let d = self.grid.d;
        let mut header = vec!["span_id".to_string()];
        header.extend((0..d).map(|i| format!("lo_{i}")));
        header.extend((0..d).map(|i| format!("hi_{i}")));
        writeln!(out, "{}", header.join(","))?;
        for span in &span_set.spans {
            for cell in &span.cells {
                let (lo, hi) = span_set.grid.cell_box(cell);
                let lo_raw = self.transform.to_raw(&lo);
                let hi_raw = self.transform.to_raw(&hi);
                let mut fields = vec![span.id.to_string()];
                fields.extend(lo_raw.iter().map(|v| v.to_string()));
                fields.extend(hi_raw.iter().map(|v| v.to_string()));
                writeln!(out, "{}", fields.join(","))?;
            }
        }
        Ok(())
    }
}
