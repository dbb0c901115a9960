//! The private clustering mechanism, end to end: release a DP histogram over
//! grid cells, keep cells whose noisy neighborhood upper bound clears a
//! shifted density threshold, and merge kept cells into spans.
//!
//! Only [`release_histogram`] touches point data. Everything downstream
//! ([`noisy_ub`], [`find_core_cells`], [`merge_cells`],
//! [`ReleasedHistogram::spans`]) consumes the released histogram alone, so by
//! post-processing the whole output is as private as the histogram, and
//! re-thresholding at other `MinPts` values is free.

use std::collections::{BTreeSet, HashMap};

use rand::Rng;

use crate::dbscan::DbscanParams;
use crate::error::{Error, Result};
use crate::grid::{CellIndex, GridSpec};
use crate::histogram::{self, CellCounts, SparseHistogram};
use crate::noise::{self, BigGammaKind};
use crate::union_find::UnionFind;

/// Privacy budget, failure probability, and truncation threshold.
///
/// `theta = 0` leaves the histogram choice to [`choose_theta`]
/// (`histogram::choose_theta`); a positive `theta` forces the linear path at
/// that threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct PrivacyParams {
    pub epsilon: f64,
    pub beta: f64,
    pub theta: f64,
}

impl PrivacyParams {
    pub fn new(epsilon: f64, beta: f64, theta: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be positive and finite, got {epsilon}"
            )));
        }
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "beta must lie in (0,1), got {beta}"
            )));
        }
        if !(theta >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "theta must be non-negative, got {theta}"
            )));
        }
        Ok(PrivacyParams {
            epsilon,
            beta,
            theta,
        })
    }
}

/// Derived approximation quantities of one release.
#[derive(Debug, Clone, PartialEq)]
pub struct ApproxBounds {
    /// Neighborhood size `kappa` (exact enumeration, not the closed form).
    pub kappa: usize,
    /// Per-cell sup-norm error scale of the histogram.
    pub gamma: f64,
    /// Slack added to neighborhood sums so they upper-bound the true sums.
    pub big_gamma: f64,
    /// Additive density-threshold error, always `2 * big_gamma`.
    pub tau: f64,
    /// Multiplicative radius ratio of the guarantee, `3 + 4 * eta'`.
    pub rho: f64,
}

/// Which histogram to release.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HistogramMode {
    /// Linear path when `n <= |X|/2` (threshold from `choose_theta`), dense
    /// otherwise; an explicit `PrivacyParams::theta > 0` forces the linear
    /// path at that threshold.
    Auto,
    /// Dense Laplace histogram over every cell.
    Naive,
    /// High-pass-filter histogram; uses `PrivacyParams::theta` if positive,
    /// otherwise the `choose_theta` recommendation.
    Linear,
}

/// Histogram path actually taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HistogramKind {
    Naive,
    Linear,
}

/// Parameters and derived bounds a span release was produced with.
#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub dbscan: DbscanParams,
    pub privacy: PrivacyParams,
    pub bounds: ApproxBounds,
    pub min_pts_effective: f64,
    pub histogram_kind: HistogramKind,
    pub theta_used: f64,
    pub epsilon_spent: f64,
}

/// One approximate span: a set of cells sharing a cluster id.
#[derive(Debug, Clone, PartialEq)]
pub struct Span {
    pub id: u32,
    pub cells: Vec<CellIndex>,
}

/// The public output: disjoint spans over a grid, plus provenance when the
/// set came out of a full pipeline run.
#[derive(Debug, Clone)]
pub struct SpanSet {
    pub spans: Vec<Span>,
    pub grid: GridSpec,
    pub provenance: Option<Provenance>,
    cell_to_span: HashMap<u64, u32>,
}

impl PartialEq for SpanSet {
    fn eq(&self, other: &Self) -> bool {
        self.spans == other.spans && self.grid == other.grid && self.provenance == other.provenance
    }
}

impl SpanSet {
    pub fn new(spans: Vec<Span>, grid: GridSpec, provenance: Option<Provenance>) -> Self {
        let mut cell_to_span = HashMap::new();
        for span in &spans {
            for cell in &span.cells {
                cell_to_span.insert(grid.linear_id(cell), span.id);
            }
        }
        SpanSet {
            spans,
            grid,
            provenance,
            cell_to_span,
        }
    }

    pub fn num_spans(&self) -> usize {
        self.spans.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spans.is_empty()
    }

    /// Span id of a cell, if the cell belongs to any span.
    pub fn span_of_cell(&self, cell: &CellIndex) -> Option<u32> {
        self.cell_to_span.get(&self.grid.linear_id(cell)).copied()
    }

    /// Span id containing the point's cell, or 0 for noise.
    pub fn classify(&self, point: &[f64]) -> Result<u32> {
        let cell = self.grid.cell_of(point)?;
        Ok(self.span_of_cell(&cell).unwrap_or(0))
    }
}

/// Noisy upper bound of Eq. (2): sum of stored noisy counts over the cell's
/// alpha-neighborhood (absent cells contribute 0) plus the slack `big_gamma`.
pub fn noisy_ub(
    hist: &SparseHistogram,
    spec: &GridSpec,
    cell: &CellIndex,
    big_gamma: f64,
) -> f64 {
    let mut sum = 0.0;
    for offset in spec.offsets_within(spec.alpha()) {
        if let Some(neighbor) = spec.offset_cell(cell, &offset) {
            if let Some(v) = hist.get_linear(spec.linear_id(&neighbor)) {
                sum += v;
            }
        }
    }
    sum + big_gamma
}

/// Superset of core cells: every cell whose noisy upper bound reaches
/// `min_pts_effective`. Scans only cells within neighborhood range of stored
/// entries, never the full universe; this is exact because a cell without
/// stored mass in its neighborhood has `noisy_ub == big_gamma`, which the
/// threshold must exceed.
pub fn find_core_cells(
    hist: &SparseHistogram,
    spec: &GridSpec,
    min_pts_effective: f64,
    big_gamma: f64,
) -> Result<BTreeSet<CellIndex>> {
    if !(min_pts_effective > big_gamma) {
        return Err(Error::InvalidParameter(format!(
            "threshold {min_pts_effective} must exceed big_gamma {big_gamma}; \
             otherwise every universe cell qualifies"
        )));
    }
    let offsets = spec.offsets_within(spec.alpha());
    let mut candidates: BTreeSet<u64> = BTreeSet::new();
    for id in hist.entry_ids() {
        let cell = spec.cell_from_linear(id);
        for offset in &offsets {
            if let Some(c) = spec.offset_cell(&cell, offset) {
                candidates.insert(spec.linear_id(&c));
            }
        }
    }
    let mut core = BTreeSet::new();
    for id in candidates {
        let cell = spec.cell_from_linear(id);
        let mut sum = 0.0;
        for offset in &offsets {
            if let Some(neighbor) = spec.offset_cell(&cell, offset) {
                if let Some(v) = hist.get_linear(spec.linear_id(&neighbor)) {
                    sum += v;
                }
            }
        }
        if sum + big_gamma >= min_pts_effective {
            core.insert(cell);
        }
    }
    Ok(core)
}

/// Merges cells whose minimum box distance is strictly below `alpha` into
/// spans; ids are assigned 1..k in order of each span's lexicographically
/// smallest cell.
pub fn merge_cells(core_cells: &BTreeSet<CellIndex>, spec: &GridSpec, alpha: f64) -> SpanSet {
    let cells: Vec<CellIndex> = core_cells.iter().cloned().collect();
    let index_of: HashMap<u64, usize> = cells
        .iter()
        .enumerate()
        .map(|(i, c)| (spec.linear_id(c), i))
        .collect();
    let offsets = spec.offsets_within(alpha);
    let mut uf = UnionFind::new(cells.len());
    for (i, cell) in cells.iter().enumerate() {
        for offset in &offsets {
            if let Some(neighbor) = spec.offset_cell(cell, offset) {
                if let Some(&j) = index_of.get(&spec.linear_id(&neighbor)) {
                    uf.union(i, j);
                }
            }
        }
    }
    // `cells` is sorted, so components appear in order of their smallest member
    let mut id_of_root: HashMap<usize, u32> = HashMap::new();
    let mut spans: Vec<Span> = Vec::new();
    for (i, cell) in cells.iter().enumerate() {
        let root = uf.find(i);
        let id = *id_of_root.entry(root).or_insert_with(|| {
            spans.push(Span {
                id: spans.len() as u32 + 1,
                cells: Vec::new(),
            });
            spans.len() as u32
        });
        spans[(id - 1) as usize].cells.push(cell.clone());
    }
    SpanSet::new(spans, spec.clone(), None)
}

/// A DP histogram release plus everything needed to extract spans from it.
/// Extracting spans for several `MinPts` values reuses the single release and
/// therefore spends no additional privacy budget.
#[derive(Debug, Clone)]
pub struct ReleasedHistogram {
    pub histogram: SparseHistogram,
    pub grid: GridSpec,
    pub privacy: PrivacyParams,
    pub bounds: ApproxBounds,
    pub kind: HistogramKind,
    pub theta_used: f64,
}

impl ReleasedHistogram {
    /// Span extraction (post-processing only): threshold at
    /// `MinPts' = MinPts + tau` and merge.
    pub fn spans(&self, min_pts: u64) -> Result<SpanSet> {
        if min_pts == 0 {
            return Err(Error::InvalidParameter("min_pts must be >= 1".into()));
        }
        let min_pts_effective = min_pts as f64 + self.bounds.tau;
        let core = find_core_cells(
            &self.histogram,
            &self.grid,
            min_pts_effective,
            self.bounds.big_gamma,
        )?;
        let mut span_set = merge_cells(&core, &self.grid, self.grid.alpha());
        span_set.provenance = Some(Provenance {
            dbscan: DbscanParams {
                alpha: self.grid.alpha(),
                min_pts,
            },
            privacy: self.privacy.clone(),
            bounds: self.bounds.clone(),
            min_pts_effective,
            histogram_kind: self.kind,
            theta_used: self.theta_used,
            epsilon_spent: self.histogram.epsilon_spent(),
        });
        Ok(span_set)
    }
}

fn infer_dim(points: &[Vec<f64>]) -> Result<usize> {
    match points.first() {
        None => Ok(1), // empty data: run on a 1-D grid
        Some(first) => {
            let d = first.len();
            if d == 0 {
                return Err(Error::InvalidParameter("points must have dimension >= 1".into()));
            }
            if points.iter().any(|p| p.len() != d) {
                return Err(Error::InvalidParameter(
                    "all points must share one dimension".into(),
                ));
            }
            Ok(d)
        }
    }
}

/// Releases the DP histogram for `points` under `alpha` and `eta_prime`.
/// This is the only operation that reads point data.
pub fn release_histogram<R: Rng + ?Sized>(
    points: &[Vec<f64>],
    alpha: f64,
    privacy: &PrivacyParams,
    eta_prime: f64,
    mode: HistogramMode,
    rng: &mut R,
) -> Result<ReleasedHistogram> {
    let dim = infer_dim(points)?;
    let spec = GridSpec::new(dim, alpha, eta_prime)?;
    let freqs = histogram::exact_counts(points, &spec)?;
    release_from_counts(&freqs, &spec, privacy, mode, rng)
}

/// Histogram release from precomputed exact counts.
pub fn release_from_counts<R: Rng + ?Sized>(
    freqs: &CellCounts,
    spec: &GridSpec,
    privacy: &PrivacyParams,
    mode: HistogramMode,
    rng: &mut R,
) -> Result<ReleasedHistogram> {
    let eps = privacy.epsilon;
    let theta = match mode {
        HistogramMode::Naive => 0.0,
        HistogramMode::Linear => {
            let t = if privacy.theta > 0.0 {
                privacy.theta
            } else {
                histogram::choose_theta(spec, freqs.total(), eps)
            };
            if !(t > 0.0) {
                return Err(Error::InvalidParameter(
                    "linear histogram requires theta > 0; the data is dense enough \
                     that choose_theta recommends the naive path"
                        .into(),
                ));
            }
            t
        }
        HistogramMode::Auto => {
            if privacy.theta > 0.0 {
                privacy.theta
            } else {
                histogram::choose_theta(spec, freqs.total(), eps)
            }
        }
    };

    let (hist, kind) = if theta > 0.0 {
        (
            histogram::build_linear(freqs, spec, eps, theta, rng)?,
            HistogramKind::Linear,
        )
    } else {
        (
            histogram::build_naive(freqs, spec, eps, rng)?,
            HistogramKind::Naive,
        )
    };

    let kappa = spec.kappa();
    let universe = spec.universe_size() as f64;
    let gamma_kind = match kind {
        HistogramKind::Naive => BigGammaKind::Laplace,
        HistogramKind::Linear => BigGammaKind::LinearHist { theta },
    };
    let big_gamma = noise::big_gamma(gamma_kind, kappa, eps, universe, privacy.beta)?;
    let per_cell_gamma = noise::gamma_laplace(eps, universe, privacy.beta)
        + if kind == HistogramKind::Linear { theta } else { 0.0 };
    let bounds = ApproxBounds {
        kappa,
        gamma: per_cell_gamma,
        big_gamma,
        tau: 2.0 * big_gamma,
        rho: 3.0 + 4.0 * spec.eta_prime(),
    };
    Ok(ReleasedHistogram {
        histogram: hist,
        grid: spec.clone(),
        privacy: privacy.clone(),
        bounds,
        kind,
        theta_used: theta,
    })
}

/// The full mechanism: one histogram release followed by span extraction at
/// the user's `MinPts`. Consumes the privacy budget exactly once.
pub fn run<R: Rng + ?Sized>(
    points: &[Vec<f64>],
    dbscan_params: &DbscanParams,
    privacy: &PrivacyParams,
    eta_prime: f64,
    rng: &mut R,
) -> Result<SpanSet> {
    let release = release_histogram(
        points,
        dbscan_params.alpha,
        privacy,
        eta_prime,
        HistogramMode::Auto,
        rng,
    )?;
    release.spans(dbscan_params.min_pts)
}
