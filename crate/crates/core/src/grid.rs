//! Geometry of the cell decomposition: point-to-cell mapping, cell
//! neighborhoods, and minimum distances between cells.
//!
//! The normalized domain `[0,1]^d` is covered by half-open boxes of width
//! `w = eta' * alpha / sqrt(d)`, so that any two locations inside one cell are
//! closer than `alpha` whenever `eta' <= 1`. The last cell on each axis may be
//! partial; points with a coordinate of exactly `1.0` are clamped into it.

use crate::error::{Error, Result};

/// Index of one grid cell, one coordinate per axis.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellIndex {
    pub coords: Vec<u64>,
}

impl CellIndex {
    pub fn new(coords: Vec<u64>) -> Self {
        CellIndex { coords }
    }
}

/// The cell decomposition of the unit cube for one clustering radius.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    dim: usize,
    alpha: f64,
    eta_prime: f64,
    width: f64,
    cells_per_axis: u64,
}

impl GridSpec {
    /// Builds the grid for dimension `dim`, radius `alpha` (normalized units)
    /// and cell-size constant `eta_prime`.
    pub fn new(dim: usize, alpha: f64, eta_prime: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be >= 1".into()));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha must lie in (0,1), got {alpha}"
            )));
        }
        if !(eta_prime > 0.0 && eta_prime <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "eta_prime must lie in (0,1], got {eta_prime}"
            )));
        }
        let width = eta_prime * alpha / (dim as f64).sqrt();
        let cells_per_axis = (1.0 / width).ceil() as u64;
        let spec = GridSpec {
            dim,
            alpha,
            eta_prime,
            width,
            cells_per_axis,
        };
        if spec.checked_universe_size().is_none() {
            return Err(Error::CapacityExceeded(format!(
                "universe {cells_per_axis}^{dim} does not fit in u128"
            )));
        }
        Ok(spec)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn eta_prime(&self) -> f64 {
        self.eta_prime
    }

    /// Cell width `w = eta' * alpha / sqrt(d)`.
    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn cells_per_axis(&self) -> u64 {
        self.cells_per_axis
    }

    fn checked_universe_size(&self) -> Option<u128> {
        let mut size: u128 = 1;
        for _ in 0..self.dim {
            size = size.checked_mul(self.cells_per_axis as u128)?;
        }
        Some(size)
    }

    /// Total number of cells `|X| = cells_per_axis^d`.
    pub fn universe_size(&self) -> u128 {
        self.checked_universe_size().expect("validated in new")
    }

    /// `ln |X|`, usable even when `|X|` overflows f64 precision.
    pub fn ln_universe_size(&self) -> f64 {
        self.dim as f64 * (self.cells_per_axis as f64).ln()
    }

    /// Maps a point of `[0,1]^d` to its cell; coordinates equal to 1.0 land in
    /// the last cell.
    pub fn cell_of(&self, point: &[f64]) -> Result<CellIndex> {
        if point.len() != self.dim {
            return Err(Error::InvalidParameter(format!(
                "point has dimension {}, grid has {}",
                point.len(),
                self.dim
            )));
        }
        let mut coords = Vec::with_capacity(self.dim);
        for (axis, &x) in point.iter().enumerate() {
            if !(0.0..=1.0).contains(&x) {
                return Err(Error::OutOfDomain(format!(
                    "coordinate {x} on axis {axis} outside [0,1]; rescale the input first"
                )));
            }
            let c = ((x / self.width).floor() as u64).min(self.cells_per_axis - 1);
            coords.push(c);
        }
        Ok(CellIndex::new(coords))
    }

    fn check_cell(&self, cell: &CellIndex) -> Result<()> {
        if cell.coords.len() != self.dim || cell.coords.iter().any(|&c| c >= self.cells_per_axis) {
            return Err(Error::InvalidParameter(format!(
                "cell {:?} invalid for a {}^{} grid",
                cell.coords, self.cells_per_axis, self.dim
            )));
        }
        Ok(())
    }

    /// Sum over axes of `max(0, |a_i - b_i| - 1)^2`; the squared distance
    /// between the closed boxes is this key times `w^2`.
    fn gap_key(offsets: impl Iterator<Item = i64>) -> u64 {
        offsets
            .map(|o| {
                let g = o.unsigned_abs().saturating_sub(1);
                g * g
            })
            .sum()
    }

    /// Euclidean distance between the closed boxes of two cells.
    pub fn min_cell_distance(&self, a: &CellIndex, b: &CellIndex) -> f64 {
        let key = Self::gap_key(
            a.coords
                .iter()
                .zip(&b.coords)
                .map(|(&x, &y)| x as i64 - y as i64),
        );
        (key as f64).sqrt() * self.width
    }

    /// Whether boxes at integer offset key `key` are strictly closer than
    /// `radius`. For `radius == alpha` the comparison `key * w^2 < alpha^2`
    /// reduces to `key * eta'^2 < d`, which avoids the square-root round-off
    /// at exactly-touching configurations.
    fn key_within(&self, key: u64, radius: f64) -> bool {
        if radius == self.alpha {
            (key as f64) * self.eta_prime * self.eta_prime < self.dim as f64
        } else {
            (key as f64) * self.width * self.width < radius * radius
        }
    }

    /// Per-axis offset range that can possibly satisfy `key_within`.
    fn offset_reach(&self, radius: f64) -> i64 {
        (radius / self.width).ceil() as i64
    }

    /// All integer offsets (in lexicographic order) whose boxes are strictly
    /// closer than `radius` to the origin cell. Includes the zero offset.
    pub fn offsets_within(&self, radius: f64) -> Vec<Vec<i64>> {
        let reach = self.offset_reach(radius);
        let mut out = Vec::new();
        let mut current = vec![-reach; self.dim];
        loop {
            let key = Self::gap_key(current.iter().copied());
            if self.key_within(key, radius) {
                out.push(current.clone());
            }
            // lexicographic increment
            let mut axis = self.dim;
            loop {
                if axis == 0 {
                    return out;
                }
                axis -= 1;
                if current[axis] < reach {
                    current[axis] += 1;
                    for c in &mut current[axis + 1..] {
                        *c = -reach;
                    }
                    break;
                }
            }
        }
    }

    /// Number of cells in the alpha-neighborhood of a cell away from the
    /// domain boundary; constant for fixed `d` and `eta'`.
    pub fn kappa(&self) -> usize {
        self.offsets_within(self.alpha).len()
    }

    /// Applies an offset to a cell, returning `None` when it leaves the domain.
    pub fn offset_cell(&self, cell: &CellIndex, offset: &[i64]) -> Option<CellIndex> {
        let mut coords = Vec::with_capacity(self.dim);
        for (&c, &o) in cell.coords.iter().zip(offset) {
            let v = c as i64 + o;
            if v < 0 || v as u64 >= self.cells_per_axis {
                return None;
            }
            coords.push(v as u64);
        }
        Some(CellIndex::new(coords))
    }

    /// The alpha-neighborhood `NB(x)`: all in-domain cells whose closed box
    /// intersects the union of open alpha-balls around locations of `x`,
    /// in lexicographic order. Contains `x` itself.
    pub fn neighborhood(&self, cell: &CellIndex) -> Result<Vec<CellIndex>> {
        self.check_cell(cell)?;
        Ok(self
            .offsets_within(self.alpha)
            .iter()
            .filter_map(|o| self.offset_cell(cell, o))
            .collect())
    }

    /// Row-major linear id of a cell; requires the universe to fit in `u64`.
    pub fn linear_id(&self, cell: &CellIndex) -> u64 {
        let mut id: u64 = 0;
        for &c in &cell.coords {
            id = id * self.cells_per_axis + c;
        }
        id
    }

    /// Inverse of [`linear_id`](Self::linear_id).
    pub fn cell_from_linear(&self, mut id: u64) -> CellIndex {
        let mut coords = vec![0u64; self.dim];
        for c in coords.iter_mut().rev() {
            *c = id % self.cells_per_axis;
            id /= self.cells_per_axis;
        }
        CellIndex::new(coords)
    }

    /// Lower and upper corners of the (unclamped) closed box of a cell.
    pub fn cell_box(&self, cell: &CellIndex) -> (Vec<f64>, Vec<f64>) {
        let lower: Vec<f64> = cell.coords.iter().map(|&c| c as f64 * self.width).collect();
        let upper: Vec<f64> = cell
            .coords
            .iter()
            .map(|&c| (c + 1) as f64 * self.width)
            .collect();
        (lower, upper)
    }
}

pub(crate) fn euclidean_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x - y) * (x - y))
        .sum()
}

pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    euclidean_sq(a, b).sqrt()
}
