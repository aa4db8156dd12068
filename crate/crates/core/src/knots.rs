//! Min/max K-partition candidate knot selection.
//!
//! Year-ordered observations are cut into `K` consecutive blocks of
//! `L = floor(n / K)`. In each block the observation whose response deviates
//! most from the block mean nominates its predictor value as a knot. The
//! trailing `n - K L` observations nominate nothing but still take part in
//! every regression fit.

use std::ops::Range;

use crate::basis::{Knot, KnotSet};
use crate::error::{KpartError, Result};

/// One block of consecutive observations. `range` is 0-based and half-open.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    /// 1-based block number.
    pub index: usize,
    pub range: Range<usize>,
}

/// Blocks plus the trailing observations that belong to none of them.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionLayout {
    pub partitions: Vec<Partition>,
    pub remainder: Range<usize>,
}

impl PartitionLayout {
    /// Block size `L`.
    pub fn block_len(&self) -> usize {
        self.partitions[0].range.len()
    }
}

pub fn partition_indices(n: usize, k: usize) -> Result<PartitionLayout> {
    if k < 1 || k > n {
        return Err(KpartError::contract(format!(
            "number of partitions K = {k} must satisfy 1 <= K <= n = {n}"
        )));
    }
    let len = n / k;
    let partitions = (0..k)
        .map(|i| Partition {
            index: i + 1,
            range: i * len..(i + 1) * len,
        })
        .collect();
    Ok(PartitionLayout {
        partitions,
        remainder: k * len..n,
    })
}

/// Rounding slack, in units of `EPSILON * max|y|`, within which two deviations
/// are considered equal.
const TIE_ULPS: f64 = 16.0;

pub fn partition_mean(y: &[f64], range: Range<usize>) -> f64 {
    let block = &y[range];
    block.iter().sum::<f64>() / block.len() as f64
}

/// Index (absolute, 0-based) of the largest `|y_i - mean|` in the block; ties go
/// to the smallest index.
///
/// Deviations that differ only by rounding count as tied. Otherwise blocks
/// with mathematically equal deviations (any block of two, for instance) could
/// pick a different index after `y + c` or `c * y`.
fn max_deviation_index(y: &[f64], range: Range<usize>) -> usize {
    let mean = partition_mean(y, range.clone());
    let devs: Vec<f64> = range.clone().map(|i| (y[i] - mean).abs()).collect();
    let max_dev = devs.iter().cloned().fold(0.0, f64::max);
    let magnitude = range.clone().map(|i| y[i].abs()).fold(mean.abs(), f64::max);
    let slack = TIE_ULPS * f64::EPSILON * magnitude;
    let offset = devs.iter().position(|&d| d >= max_dev - slack).unwrap_or(0);
    range.start + offset
}

/// Nominates one knot per partition and builds the [`KnotSet`] (which drops
/// duplicates and knots at `max(x)`), so the result holds at most `K` knots.
pub fn select_knots(x: &[f64], y: &[f64], k: usize) -> Result<KnotSet> {
    if x.len() != y.len() {
        return Err(KpartError::contract(format!(
            "x has {} values but y has {}",
            x.len(),
            y.len()
        )));
    }
    let layout = partition_indices(x.len(), k)?;
    let knots = layout
        .partitions
        .iter()
        .map(|part| {
            let i = max_deviation_index(y, part.range.clone());
            Knot {
                location: x[i],
                partition_index: part.index,
                source_index: i + 1,
            }
        })
        .collect();
    Ok(KnotSet::new(knots, x))
}
