//! Dense row-major observation table.

use alloc::format;
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// An `n × p` table of finite reals, one observation per row.
///
/// Rows may carry stable integer identifiers. When present they are unique
/// and cover `0..n`, which lets procedures work in a canonical row order that
/// does not depend on how the rows happen to be arranged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMatrix")]
pub struct DataMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    row_ids: Option<Vec<usize>>,
}

#[derive(Deserialize)]
struct RawMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    row_ids: Option<Vec<usize>>,
}

impl TryFrom<RawMatrix> for DataMatrix {
    type Error = Error;

    fn try_from(raw: RawMatrix) -> Result<Self> {
        let m = Self::with_shape(raw.rows, raw.cols, raw.values)?;
        match raw.row_ids {
            Some(ids) => m.with_row_ids(ids),
            None => Ok(m),
        }
    }
}

impl DataMatrix {
    /// Builds a matrix from row-major values. Requires `rows ≥ 1`, `cols ≥ 1`
    /// and finite entries.
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Shape(format!(
                "data matrix needs at least one row and one column, got {rows}x{cols}"
            )));
        }
        Self::with_shape(rows, cols, values)
    }

    /// A matrix with no rows, used for empty samples.
    pub fn empty(cols: usize) -> Self {
        Self {
            rows: 0,
            cols,
            values: Vec::new(),
            row_ids: None,
        }
    }

    pub(crate) fn with_shape(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::Shape(format!(
                "expected {} values for {rows}x{cols}, got {}",
                rows * cols,
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / cols,
                col: pos % cols,
            });
        }
        Ok(Self {
            rows,
            cols,
            values,
            row_ids: None,
        })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut values = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::Shape(format!(
                    "row {i} has {} columns, expected {cols}",
                    r.len()
                )));
            }
            values.extend_from_slice(r);
        }
        Self::new(rows.len(), cols, values)
    }

    /// Attaches row identifiers; they must be a permutation of `0..n`.
    pub fn with_row_ids(mut self, ids: Vec<usize>) -> Result<Self> {
        if ids.len() != self.rows {
            return Err(Error::Shape(format!(
                "{} row ids for {} rows",
                ids.len(),
                self.rows
            )));
        }
        let mut seen = alloc::vec![false; self.rows];
        for &id in &ids {
            if id >= self.rows || seen[id] {
                return Err(Error::DuplicateRowId(id));
            }
            seen[id] = true;
        }
        self.row_ids = Some(ids);
        Ok(self)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> core::slice::ChunksExact<'_, f64> {
        self.values.chunks_exact(self.cols.max(1))
    }

    pub fn row_ids(&self) -> Option<&[usize]> {
        self.row_ids.as_deref()
    }

    /// Identifier of the row at position `i`; the position itself when no
    /// identifiers are attached.
    pub fn row_id(&self, i: usize) -> usize {
        self.row_ids.as_ref().map_or(i, |ids| ids[i])
    }

    /// New matrix made of the given rows, in the given order. Row ids are
    /// dropped.
    pub fn select_rows(&self, indices: &[usize]) -> DataMatrix {
        let mut values = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            values.extend_from_slice(self.row(i));
        }
        DataMatrix {
            rows: indices.len(),
            cols: self.cols,
            values,
            row_ids: None,
        }
    }

    /// Positions of the rows sorted by row id, i.e. `order[id]` is the
    /// position holding row `id`. `None` when the rows are already canonical.
    pub fn canonical_order(&self) -> Option<Vec<usize>> {
        let ids = self.row_ids.as_ref()?;
        if ids.iter().enumerate().all(|(i, &id)| i == id) {
            return None;
        }
        let mut order = alloc::vec![0; self.rows];
        for (pos, &id) in ids.iter().enumerate() {
            order[id] = pos;
        }
        Some(order)
    }

    /// Number of distinct rows among those with positive weight.
    pub fn distinct_rows(&self, weights: Option<&[f64]>) -> usize {
        let mut idx: Vec<usize> = (0..self.rows)
            .filter(|&i| weights.map_or(true, |w| w[i] > 0.0))
            .collect();
        idx.sort_unstable_by(|&a, &b| cmp_rows(self.row(a), self.row(b)));
        idx.dedup_by(|a, b| cmp_rows(self.row(*a), self.row(*b)) == Ordering::Equal);
        idx.len()
    }

    /// Column means.
    pub fn mean(&self) -> Vec<f64> {
        let mut mean = alloc::vec![0.0; self.cols];
        for r in self.iter_rows() {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v;
            }
        }
        let n = self.rows.max(1) as f64;
        mean.iter_mut().for_each(|m| *m /= n);
        mean
    }

    /// Per-column `(min, max)`.
    pub fn bounding_box(&self) -> Vec<(f64, f64)> {
        let mut bounds = alloc::vec![(f64::INFINITY, f64::NEG_INFINITY); self.cols];
        for r in self.iter_rows() {
            for (b, &v) in bounds.iter_mut().zip(r) {
                b.0 = b.0.min(v);
                b.1 = b.1.max(v);
            }
        }
        bounds
    }
}

fn cmp_rows(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| *o != Ordering::Equal)
        .unwrap_or(Ordering::Equal)
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
