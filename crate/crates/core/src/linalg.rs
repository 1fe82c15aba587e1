// Small dense helpers over row-major `p × p` matrices.

use alloc::vec::Vec;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::{Error, Result};

/// Checks symmetry and positive definiteness, reporting the smallest
/// eigenvalue when the matrix is not SPD.
pub(crate) fn check_spd(cov: &[f64], p: usize) -> Result<()> {
    let m = DMatrix::from_row_slice(p, p, cov);
    let scale = cov.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
    for i in 0..p {
        for j in 0..i {
            if (m[(i, j)] - m[(j, i)]).abs() > 1e-12 * scale {
                return Err(Error::NotSymmetric);
            }
        }
    }
    let min = m
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    if !(min > 0.0) {
        return Err(Error::NotPositiveDefinite { eigenvalue: min });
    }
    Ok(())
}

/// Lower Cholesky factor, row-major.
pub(crate) fn cholesky(cov: &[f64], p: usize) -> Result<Vec<f64>> {
    let m = DMatrix::from_row_slice(p, p, cov);
    let chol = m.cholesky().ok_or_else(|| Error::NotPositiveDefinite {
        eigenvalue: DMatrix::from_row_slice(p, p, cov)
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min),
    })?;
    let l = chol.l();
    let mut out = Vec::with_capacity(p * p);
    for i in 0..p {
        for j in 0..p {
            out.push(l[(i, j)]);
        }
    }
    Ok(out)
}

/// Draws `mean + L z` with `z` standard normal, appending to `out`.
pub(crate) fn sample_gaussian<R: Rng + ?Sized>(
    mean: &[f64],
    chol: &[f64],
    rng: &mut R,
    out: &mut Vec<f64>,
) {
    let p = mean.len();
    let mut z = [0.0f64; 16];
    let mut heap;
    let z: &mut [f64] = if p <= z.len() {
        &mut z[..p]
    } else {
        heap = alloc::vec![0.0; p];
        &mut heap
    };
    for zi in z.iter_mut() {
        *zi = rng.sample(StandardNormal);
    }
    for i in 0..p {
        let row = &chol[i * p..i * p + i + 1];
        let dot: f64 = row.iter().zip(z.iter()).map(|(a, b)| a * b).sum();
        out.push(mean[i] + dot);
    }
}

/// Covariance of the given rows with the `1/(n−1)` denominator (zero when a
/// single row is given), row-major `p × p`.
pub(crate) fn covariance<'a, I>(rows: I, p: usize) -> Vec<f64>
where
    I: Iterator<Item = &'a [f64]> + Clone,
{
    let mut mean = alloc::vec![0.0; p];
    let mut n = 0usize;
    for r in rows.clone() {
        n += 1;
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v;
        }
    }
    let mut cov = alloc::vec![0.0; p * p];
    if n < 2 {
        return cov;
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    for r in rows {
        for i in 0..p {
            let di = r[i] - mean[i];
            for j in 0..=i {
                cov[i * p + j] += di * (r[j] - mean[j]);
            }
        }
    }
    let denom = (n - 1) as f64;
    for i in 0..p {
        for j in 0..=i {
            let v = cov[i * p + j] / denom;
            cov[i * p + j] = v;
            cov[j * p + i] = v;
        }
    }
    cov
}

pub(crate) fn trace(m: &[f64], p: usize) -> f64 {
    (0..p).map(|i| m[i * p + i]).sum()
}
