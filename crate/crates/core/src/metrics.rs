//! Clustering-quality metrics: adjusted Rand index and adjusted mutual
//! information, plus label extraction from a span set.
//!
//! The noise label 0 is treated as an ordinary cluster id in both metrics,
//! and AMI normalizes by the arithmetic mean of the entropies, matching the
//! scikit-learn conventions the reference scores rely on.

use std::collections::HashMap;

use crate::dbscan::Labeling;
use crate::error::{Error, Result};
use crate::pipeline::SpanSet;

/// Co-occurrence counts between two labelings.
#[derive(Debug, Clone)]
pub struct ContingencyTable {
    /// `counts[i][j]`: points with row label i and column label j.
    pub counts: Vec<Vec<u64>>,
    /// Row sums.
    pub a_marginals: Vec<u64>,
    /// Column sums.
    pub b_marginals: Vec<u64>,
    /// Total number of points.
    pub total: u64,
}

impl ContingencyTable {
    pub fn from_labelings(a: &Labeling, b: &Labeling) -> Result<Self> {
        if a.labels.len() != b.labels.len() {
            return Err(Error::InvalidParameter(format!(
                "labelings have different lengths: {} vs {}",
                a.labels.len(),
                b.labels.len()
            )));
        }
        let index_map = |labels: &[u32]| -> HashMap<u32, usize> {
            let mut distinct: Vec<u32> = labels.to_vec();
            distinct.sort_unstable();
            distinct.dedup();
            distinct.into_iter().enumerate().map(|(i, l)| (l, i)).collect()
        };
        let rows = index_map(&a.labels);
        let cols = index_map(&b.labels);
        let mut counts = vec![vec![0u64; cols.len()]; rows.len()];
        for (&la, &lb) in a.labels.iter().zip(&b.labels) {
            counts[rows[&la]][cols[&lb]] += 1;
        }
        let a_marginals: Vec<u64> = counts.iter().map(|row| row.iter().sum()).collect();
        let b_marginals: Vec<u64> = (0..cols.len())
            .map(|j| counts.iter().map(|row| row[j]).sum())
            .collect();
        let total = a_marginals.iter().sum();
        Ok(ContingencyTable {
            counts,
            a_marginals,
            b_marginals,
            total,
        })
    }
}

fn comb2(x: u64) -> f64 {
    let x = x as f64;
    x * (x - 1.0) / 2.0
}

/// Adjusted Rand index of two labelings (pair-counting form with
/// expected-index correction).
pub fn ari(a: &Labeling, b: &Labeling) -> Result<f64> {
    let table = ContingencyTable::from_labelings(a, b)?;
    let n = table.total;
    if n < 2 {
        return Ok(1.0);
    }
    let sum_ij: f64 = table
        .counts
        .iter()
        .flat_map(|row| row.iter())
        .map(|&c| comb2(c))
        .sum();
    let sum_a: f64 = table.a_marginals.iter().map(|&c| comb2(c)).sum();
    let sum_b: f64 = table.b_marginals.iter().map(|&c| comb2(c)).sum();
    let expected = sum_a * sum_b / comb2(n);
    let max_index = 0.5 * (sum_a + sum_b);
    if max_index == expected {
        // both partitions trivial (all-one-cluster or all-singletons): treat
        // identical trivial partitions as perfect agreement
        return Ok(1.0);
    }
    Ok((sum_ij - expected) / (max_index - expected))
}

fn entropy_terms(marginals: &[u64], n: f64) -> f64 {
    marginals
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            p * (n / c as f64).ln()
        })
        .sum()
}

/// Expected mutual information under the permutation model (hypergeometric
/// law per table entry), computed with log-factorials.
fn expected_mutual_information(table: &ContingencyTable) -> f64 {
    let n = table.total;
    let nf = n as f64;
    // ln k! table
    let mut ln_fact = vec![0.0f64; (n + 1) as usize];
    for k in 1..=n as usize {
        ln_fact[k] = ln_fact[k - 1] + (k as f64).ln();
    }
    let lf = |k: u64| ln_fact[k as usize];
    let mut emi = 0.0;
    for &ai in &table.a_marginals {
        for &bj in &table.b_marginals {
            if ai == 0 || bj == 0 {
                continue;
            }
            let start = 1.max((ai + bj).saturating_sub(n));
            let end = ai.min(bj);
            for nij in start..=end {
                let ln_p = lf(ai) + lf(bj) + lf(n - ai) + lf(n - bj)
                    - lf(n)
                    - lf(nij)
                    - lf(ai - nij)
                    - lf(bj - nij)
                    - lf(n + nij - ai - bj);
                let term = (nij as f64 / nf) * ((nf * nij as f64) / (ai as f64 * bj as f64)).ln();
                emi += term * ln_p.exp();
            }
        }
    }
    emi
}

/// Adjusted mutual information with the arithmetic-mean entropy normalizer.
pub fn ami(a: &Labeling, b: &Labeling) -> Result<f64> {
    let table = ContingencyTable::from_labelings(a, b)?;
    let n = table.total;
    if n == 0 {
        return Ok(1.0);
    }
    // both sides a single cluster (or both all-singletons): perfect agreement
    let single_a = table.a_marginals.len() == 1;
    let single_b = table.b_marginals.len() == 1;
    let singletons_a = table.a_marginals.len() == n as usize;
    let singletons_b = table.b_marginals.len() == n as usize;
    if (single_a && single_b) || (singletons_a && singletons_b) {
        return Ok(1.0);
    }
    let nf = n as f64;
    let mut mi = 0.0;
    for (i, row) in table.counts.iter().enumerate() {
        for (j, &nij) in row.iter().enumerate() {
            if nij == 0 {
                continue;
            }
            let p = nij as f64 / nf;
            mi += p
                * ((nf * nij as f64)
                    / (table.a_marginals[i] as f64 * table.b_marginals[j] as f64))
                    .ln();
        }
    }
    let h_a = entropy_terms(&table.a_marginals, nf);
    let h_b = entropy_terms(&table.b_marginals, nf);
    let emi = expected_mutual_information(&table);
    let mean_h = 0.5 * (h_a + h_b);
    let mut denominator = mean_h - emi;
    if denominator.abs() < f64::EPSILON {
        denominator = if denominator < 0.0 {
            -f64::EPSILON
        } else {
            f64::EPSILON
        };
    }
    Ok((mi - emi) / denominator)
}

/// Labels every point by the span containing its cell (0 = noise); span ids
/// are remapped to contiguous 1..k in ascending id order.
pub fn extract_labels(span_set: &SpanSet, points: &[Vec<f64>]) -> Result<Labeling> {
    let mut raw = Vec::with_capacity(points.len());
    for p in points {
        raw.push(span_set.classify(p)?);
    }
    let mut distinct: Vec<u32> = raw.iter().copied().filter(|&l| l > 0).collect();
    distinct.sort_unstable();
    distinct.dedup();
    let remap: HashMap<u32, u32> = distinct
        .iter()
        .enumerate()
        .map(|(i, &l)| (l, i as u32 + 1))
        .collect();
    let labels: Vec<u32> = raw
        .into_iter()
        .map(|l| if l == 0 { 0 } else { remap[&l] })
        .collect();
    Ok(Labeling {
        num_clusters: distinct.len() as u32,
        labels,
    })
}
