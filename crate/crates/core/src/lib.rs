//! Differentially private DBSCAN over a grid of cells.
//!
//! Instead of per-point cluster labels (which admit no useful privacy/utility
//! trade-off), the mechanism releases *spans*: unions of grid cells that cover
//! the clusters. The pipeline is
//!
//! 1. decompose the unit cube into cells of width `w = eta' * alpha / sqrt(d)`,
//! 2. release a differentially private histogram of cell counts (dense Laplace
//!    histogram, or a linear-time high-pass-filter histogram for large grids),
//! 3. mark cells whose noisy neighborhood sum plus a calibrated slack clears a
//!    shifted density threshold,
//! 4. merge marked cells whose minimum distance is below `alpha` into spans.
//!
//! Everything after step 2 is post-processing of the released histogram, so a
//! single run spends its privacy budget exactly once; the density threshold can
//! be re-applied for other `MinPts` values at no extra cost.
//!
//! The crate also ships the non-private reference DBSCAN ([`dbscan`]), a
//! checker for the span sandwich guarantee ([`sandwich`]), clustering metrics
//! ([`metrics`]), and synthetic dataset generators ([`datagen`]).

pub mod datagen;
pub mod dbscan;
mod error;
pub mod grid;
pub mod histogram;
pub mod metrics;
pub mod noise;
pub mod pipeline;
pub mod sandwich;
mod union_find;

pub use error::{Error, Result};
pub use grid::{CellIndex, GridSpec};
pub use histogram::{CellCounts, SparseHistogram};
pub use pipeline::{ApproxBounds, HistogramMode, PrivacyParams, Span, SpanSet};
pub use dbscan::{DbscanParams, Labeling};
