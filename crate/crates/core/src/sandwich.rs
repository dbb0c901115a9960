//! Checker for the span sandwich guarantee.
//!
//! A span set is a valid `(rho, tau)`-approximation of the `(alpha, MinPts)`
//! clustering when
//!
//! 1. every `(alpha, MinPts)`-cluster is contained in a single span, and
//! 2. every span is contained in the span of some
//!    `(rho*alpha, MinPts - tau)`-cluster.
//!
//! Condition 2 tests each span cell against the relaxed clusters with a
//! lattice of sample locations per cell (3 per axis, with a denser 5-per-axis
//! retry on failure). The sampling is conservative up to grid resolution;
//! exact box-in-union-of-balls containment is not required at this scale.

use crate::dbscan::{dbscan_with_threshold, DbscanParams};
use crate::error::{Error, Result};
use crate::grid::{euclidean_sq, CellIndex, GridSpec};
use crate::pipeline::SpanSet;

/// Outcome of the check; both conditions are always evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SandwichReport {
    pub condition1_ok: bool,
    pub condition2_ok: bool,
}

impl SandwichReport {
    pub fn is_ok(&self) -> bool {
        self.condition1_ok && self.condition2_ok
    }
}

/// Lattice sample locations of a cell's box clamped to the domain,
/// `resolution` points per axis.
fn cell_lattice(spec: &GridSpec, cell: &CellIndex, resolution: usize) -> Vec<Vec<f64>> {
    let (lower, upper) = spec.cell_box(cell);
    let upper: Vec<f64> = upper.into_iter().map(|u| u.min(1.0)).collect();
    let d = spec.dim();
    let mut samples = Vec::with_capacity(resolution.pow(d as u32));
    let mut idx = vec![0usize; d];
    loop {
        let point: Vec<f64> = (0..d)
            .map(|i| {
                let frac = idx[i] as f64 / (resolution - 1) as f64;
                lower[i] + frac * (upper[i] - lower[i])
            })
            .collect();
        samples.push(point);
        let mut axis = d;
        loop {
            if axis == 0 {
                return samples;
            }
            axis -= 1;
            if idx[axis] + 1 < resolution {
                idx[axis] += 1;
                for v in &mut idx[axis + 1..] {
                    *v = 0;
                }
                break;
            }
        }
    }
}

fn lattice_covered(
    spec: &GridSpec,
    cell: &CellIndex,
    cores: &[&Vec<f64>],
    radius: f64,
    resolution: usize,
) -> bool {
    let radius_sq = radius * radius;
    cell_lattice(spec, cell, resolution).iter().all(|sample| {
        cores
            .iter()
            .any(|core| euclidean_sq(core, sample) < radius_sq)
    })
}

/// Checks both sandwich conditions for `span_set` against the clusterings of
/// `points` at `(alpha, MinPts)` and `(rho*alpha, MinPts - tau)`.
pub fn sandwich_check(
    span_set: &SpanSet,
    points: &[Vec<f64>],
    params: &DbscanParams,
    rho: f64,
    tau: f64,
) -> Result<SandwichReport> {
    sandwich_check_with_threshold(span_set, points, params.alpha, params.min_pts as f64, rho, tau)
}

/// Like [`sandwich_check`] but with a real-valued density threshold, as needed
/// when checking against the shifted `MinPts' = MinPts + tau` clustering.
pub fn sandwich_check_with_threshold(
    span_set: &SpanSet,
    points: &[Vec<f64>],
    alpha: f64,
    min_pts: f64,
    rho: f64,
    tau: f64,
) -> Result<SandwichReport> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidParameter(format!("alpha must be > 0, got {alpha}")));
    }
    if !(rho > 0.0) {
        return Err(Error::InvalidParameter(format!("rho must be > 0, got {rho}")));
    }
    if !(tau >= 0.0) || tau >= min_pts {
        return Err(Error::InvalidParameter(format!(
            "tau must satisfy 0 <= tau < MinPts, got tau {tau} with MinPts {min_pts}"
        )));
    }

    // condition 1: each (alpha, MinPts)-cluster inside one common span
    let truth = dbscan_with_threshold(points, alpha, min_pts);
    let mut condition1_ok = true;
    'clusters: for cluster_id in 1..=truth.num_clusters {
        let mut common_span: Option<u32> = None;
        for (p, &label) in points.iter().zip(&truth.labels) {
            if label != cluster_id {
                continue;
            }
            let span = match span_set.classify(p)? {
                0 => {
                    condition1_ok = false;
                    continue 'clusters;
                }
                s => s,
            };
            match common_span {
                None => common_span = Some(span),
                Some(existing) if existing != span => {
                    condition1_ok = false;
                    continue 'clusters;
                }
                _ => {}
            }
        }
    }

    // condition 2: each span inside the span of one relaxed cluster
    let relaxed_radius = rho * alpha;
    let relaxed = dbscan_with_threshold(points, relaxed_radius, min_pts - tau);
    let clusters: Vec<Vec<&Vec<f64>>> = (1..=relaxed.num_clusters)
        .map(|id| {
            points
                .iter()
                .zip(&relaxed.labels)
                .filter(|(_, &l)| l == id)
                .map(|(p, _)| p)
                .collect()
        })
        .collect();
    let mut condition2_ok = true;
    'spans: for span in &span_set.spans {
        for cores in &clusters {
            let covers = span.cells.iter().all(|cell| {
                lattice_covered(&span_set.grid, cell, cores, relaxed_radius, 3)
                    || lattice_covered(&span_set.grid, cell, cores, relaxed_radius, 5)
            });
            if covers {
                continue 'spans;
            }
        }
        condition2_ok = false;
        break;
    }

    Ok(SandwichReport {
        condition1_ok,
        condition2_ok,
    })
}
