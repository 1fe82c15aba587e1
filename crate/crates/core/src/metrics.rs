//! Contingency tables against known classes.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::ensemble::align_labels;
use crate::{Error, Result};

/// Rows are true classes, columns predicted clusters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Contingency {
    pub counts: Vec<Vec<usize>>,
    /// Predicted cluster shown in column `c`; identity when unaligned.
    pub column_labels: Vec<usize>,
}

impl Contingency {
    pub fn diagonal(&self) -> Vec<usize> {
        (0..self.counts.len().min(self.column_labels.len()))
            .map(|i| self.counts[i][i])
            .collect()
    }

    pub fn trace(&self) -> usize {
        self.diagonal().iter().sum()
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn misassigned(&self) -> usize {
        self.total() - self.trace()
    }
}

pub fn contingency(truth: &[usize], predicted: &[usize], classes: usize, k: usize) -> Result<Contingency> {
    if truth.len() != predicted.len() {
        return Err(Error::Shape(alloc::format!(
            "{} true labels vs {} predictions",
            truth.len(),
            predicted.len()
        )));
    }
    let mut counts = alloc::vec![alloc::vec![0; k]; classes];
    for (i, (&t, &p)) in truth.iter().zip(predicted).enumerate() {
        if t >= classes {
            return Err(Error::LabelOutOfRange { index: i, label: t, k: classes });
        }
        if p >= k {
            return Err(Error::LabelOutOfRange { index: i, label: p, k });
        }
        counts[t][p] += 1;
    }
    Ok(Contingency {
        counts,
        column_labels: (0..k).collect(),
    })
}

/// Contingency with predicted clusters relabelled for maximum agreement with
/// the classes, so that column `c` collects the cluster matched to class `c`.
pub fn aligned_contingency(truth: &[usize], predicted: &[usize], k: usize) -> Result<Contingency> {
    let alignment = align_labels(truth, predicted, k)?;
    let relabelled: Vec<usize> = predicted.iter().map(|&p| alignment.apply(p)).collect();
    let mut table = contingency(truth, &relabelled, k, k)?;
    let mut column_labels = alloc::vec![0; k];
    for (cluster, &class) in alignment.permutation.iter().enumerate() {
        column_labels[class] = cluster;
    }
    table.column_labels = column_labels;
    Ok(table)
}
