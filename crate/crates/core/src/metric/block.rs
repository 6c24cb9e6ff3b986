use serde::{Deserialize, Serialize};

use super::{GroundMetric, MetricError};
use crate::scalar::Real;

/// Disjoint cells of class labels with a within-cell and a between-cell distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockPartition<F = f64> {
    pub cells: Vec<Vec<String>>,
    pub within: F,
    pub between: F,
}

/// Classes are ordered cell by cell, in the order given.
pub fn block_metric<F: Real>(part: &BlockPartition<F>) -> Result<GroundMetric<F>, MetricError> {
    let (within, between) = (part.within, part.between);
    if !(within > F::zero()) || !(between > within) || !between.is_finite() {
        return Err(MetricError::InvalidBlockDistances {
            within: within.as_f64(),
            between: between.as_f64(),
        });
    }
    let mut labels: Vec<String> = Vec::new();
    let mut cell_of: Vec<usize> = Vec::new();
    for (c, cell) in part.cells.iter().enumerate() {
        if cell.is_empty() {
            return Err(MetricError::EmptyCell);
        }
        for label in cell {
            if labels.contains(label) {
                return Err(MetricError::OverlappingCells(label.clone()));
            }
            labels.push(label.clone());
            cell_of.push(c);
        }
    }
    if labels.is_empty() {
        return Err(MetricError::Empty);
    }
    let n = labels.len();
    let rows = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        F::zero()
                    } else if cell_of[i] == cell_of[j] {
                        within
                    } else {
                        between
                    }
                })
                .collect()
        })
        .collect();
    GroundMetric::new(labels, rows)
}
