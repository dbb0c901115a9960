//! Non-private reference DBSCAN and true cluster spans.
//!
//! This is the ground truth the private pipeline is measured against: a plain
//! `O(n^2)` implementation of the textbook definitions. A point is core when
//! its open `alpha`-ball contains at least `MinPts` dataset points (itself
//! included); clusters are the maximal sets of core points connected by hops
//! shorter than `alpha`. Border points are labeled noise: clusters consist of
//! core points only, and span membership handles the border region separately.

use crate::error::{Error, Result};
use crate::grid::{euclidean, euclidean_sq};
use crate::union_find::UnionFind;

/// Radius and density threshold of one clustering.
#[derive(Debug, Clone, PartialEq)]
pub struct DbscanParams {
    pub alpha: f64,
    pub min_pts: u64,
}

impl DbscanParams {
    pub fn new(alpha: f64, min_pts: u64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha must lie in (0,1) after normalization, got {alpha}"
            )));
        }
        if min_pts == 0 {
            return Err(Error::InvalidParameter("min_pts must be >= 1".into()));
        }
        Ok(DbscanParams { alpha, min_pts })
    }
}

/// Per-point cluster ids; 0 is noise, ids 1..=num_clusters are contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct Labeling {
    pub labels: Vec<u32>,
    pub num_clusters: u32,
}

impl Labeling {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Exact DBSCAN with a possibly fractional density threshold; used for the
/// relaxed `(rho*alpha, MinPts - tau)` clusterings of the sandwich checker.
pub(crate) fn dbscan_with_threshold(points: &[Vec<f64>], alpha: f64, min_count: f64) -> Labeling {
    let n = points.len();
    let alpha_sq = alpha * alpha;
    let mut neighbor_counts = vec![0u64; n];
    for i in 0..n {
        neighbor_counts[i] += 1; // the point itself, at distance 0
        for j in i + 1..n {
            if euclidean_sq(&points[i], &points[j]) < alpha_sq {
                neighbor_counts[i] += 1;
                neighbor_counts[j] += 1;
            }
        }
    }
    let core: Vec<bool> = neighbor_counts
        .iter()
        .map(|&c| c as f64 >= min_count)
        .collect();

    let mut uf = UnionFind::new(n);
    for i in 0..n {
        if !core[i] {
            continue;
        }
        for j in i + 1..n {
            if core[j] && euclidean_sq(&points[i], &points[j]) < alpha_sq {
                uf.union(i, j);
            }
        }
    }

    // cluster ids 1..k in order of each component's smallest point index
    let mut labels = vec![0u32; n];
    let mut next_id = 0u32;
    let mut id_of_root = std::collections::HashMap::new();
    for i in 0..n {
        if core[i] {
            let root = uf.find(i);
            let id = *id_of_root.entry(root).or_insert_with(|| {
                next_id += 1;
                next_id
            });
            labels[i] = id;
        }
    }
    Labeling {
        labels,
        num_clusters: next_id,
    }
}

/// Exact `(alpha, MinPts)`-DBSCAN labels; noise (and border) points get 0.
pub fn exact_dbscan(points: &[Vec<f64>], params: &DbscanParams) -> Labeling {
    dbscan_with_threshold(points, params.alpha, params.min_pts as f64)
}

/// The span of one true cluster: the union of open `alpha`-balls around its
/// core points.
#[derive(Debug, Clone)]
pub struct TrueSpan {
    pub cluster_id: u32,
    pub core_points: Vec<Vec<f64>>,
    pub alpha: f64,
}

impl TrueSpan {
    /// Whether a location lies in the span (within `< alpha` of some core point).
    pub fn contains(&self, location: &[f64]) -> bool {
        self.core_points
            .iter()
            .any(|p| euclidean(p, location) < self.alpha)
    }
}

/// Spans of all clusters of a labeling, ordered by cluster id.
pub fn true_spans(points: &[Vec<f64>], labeling: &Labeling, alpha: f64) -> Vec<TrueSpan> {
    let mut spans: Vec<TrueSpan> = (1..=labeling.num_clusters)
        .map(|id| TrueSpan {
            cluster_id: id,
            core_points: Vec::new(),
            alpha,
        })
        .collect();
    for (p, &label) in points.iter().zip(&labeling.labels) {
        if label > 0 {
            spans[(label - 1) as usize].core_points.push(p.clone());
        }
    }
    spans
}
