//! Gaussian-mixture prior elicited from a hard clustering.
//!
//! Component `j` gets weight `n_j / n`, the clustering's centroid as its mean
//! and `s` times the (regularized) empirical covariance of its members as its
//! covariance. Larger `s` spreads the prior mass and blurs the cluster
//! structure it encodes.

use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::kmeans::ClusteringResult;
use crate::linalg;
use crate::{DataMatrix, Error, Result};

/// Ridge added to every multi-point cluster covariance, relative to the
/// average per-feature variance of the full data.
pub const RIDGE: f64 = 1e-6;
/// Isotropic covariance used for single-point clusters, relative to the
/// average per-feature variance of the full data.
pub const SINGLETON_SCALE: f64 = 1e-2;

/// Deserialization goes through [`GaussianMixturePrior::new`], so a loaded
/// prior is validated and ready to sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PriorParams", into = "PriorParams")]
pub struct GaussianMixturePrior {
    pub weights: Vec<f64>,
    /// `k × p`.
    pub means: DataMatrix,
    /// One row-major `p × p` matrix per component, already scaled by `scale`.
    pub covariances: Vec<Vec<f64>>,
    pub scale: f64,
    cholesky: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct PriorParams {
    weights: Vec<f64>,
    means: DataMatrix,
    covariances: Vec<Vec<f64>>,
    scale: f64,
}

impl TryFrom<PriorParams> for GaussianMixturePrior {
    type Error = Error;

    fn try_from(p: PriorParams) -> Result<Self> {
        Self::new(p.weights, p.means, p.covariances, p.scale)
    }
}

impl From<GaussianMixturePrior> for PriorParams {
    fn from(p: GaussianMixturePrior) -> Self {
        Self {
            weights: p.weights,
            means: p.means,
            covariances: p.covariances,
            scale: p.scale,
        }
    }
}

impl GaussianMixturePrior {
    /// Assembles a prior from explicit parameters, checking that weights form
    /// a probability vector and every covariance is SPD.
    pub fn new(
        weights: Vec<f64>,
        means: DataMatrix,
        covariances: Vec<Vec<f64>>,
        scale: f64,
    ) -> Result<Self> {
        let k = weights.len();
        let p = means.cols();
        if means.rows() != k || covariances.len() != k {
            return Err(Error::Shape(alloc::format!(
                "{k} weights, {} means, {} covariances",
                means.rows(),
                covariances.len()
            )));
        }
        if weights.iter().any(|w| !(0.0..=1.0).contains(w))
            || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-12
        {
            return Err(Error::InvalidProbabilityVector(
                "mixture weights must lie in [0, 1] and sum to 1".into(),
            ));
        }
        let mut cholesky = Vec::with_capacity(k);
        for cov in &covariances {
            if cov.len() != p * p {
                return Err(Error::Shape(alloc::format!("covariance must have {} entries", p * p)));
            }
            linalg::check_spd(cov, p)?;
            cholesky.push(linalg::cholesky(cov, p)?);
        }
        Ok(Self {
            weights,
            means,
            covariances,
            scale,
            cholesky,
        })
    }

    pub fn k(&self) -> usize {
        self.weights.len()
    }

    pub fn dimension(&self) -> usize {
        self.means.cols()
    }

    /// Component index drawn from the mixture weights.
    pub fn sample_component<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut last = 0;
        for (j, &w) in self.weights.iter().enumerate() {
            if w > 0.0 {
                acc += w;
                last = j;
                if u < acc {
                    return j;
                }
            }
        }
        last
    }

    /// Appends one draw to `out` and returns its component.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut Vec<f64>) -> usize {
        let j = self.sample_component(rng);
        linalg::sample_gaussian(self.means.row(j), &self.cholesky[j], rng, out);
        j
    }
}

pub fn elicit_prior(
    data: &DataMatrix,
    result: &ClusteringResult,
    scale: f64,
) -> Result<GaussianMixturePrior> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidParameter("prior scale s must be positive".into()));
    }
    if result.labels.len() != data.rows() {
        return Err(Error::Shape(alloc::format!(
            "{} labels for {} rows",
            result.labels.len(),
            data.rows()
        )));
    }
    let k = result.k();
    let p = data.cols();
    if result.centroids.cols() != p {
        return Err(Error::Shape("centroid dimension differs from data".into()));
    }
    let sizes = result.cluster_sizes();
    if let Some(j) = sizes.iter().position(|&s| s == 0) {
        return Err(Error::EmptyCluster(j));
    }

    let data_cov = linalg::covariance(data.iter_rows(), p);
    let avg_var = linalg::trace(&data_cov, p) / p as f64;
    // Constant data has no spread to borrow a scale from.
    let base = if avg_var > 0.0 { avg_var } else { 1.0 };

    let n = data.rows() as f64;
    let weights: Vec<f64> = sizes.iter().map(|&s| s as f64 / n).collect();
    let mut covariances = Vec::with_capacity(k);
    for (j, &size) in sizes.iter().enumerate() {
        let mut cov = if size == 1 {
            let mut c = alloc::vec![0.0; p * p];
            for d in 0..p {
                c[d * p + d] = base * SINGLETON_SCALE;
            }
            c
        } else {
            let members = data
                .iter_rows()
                .zip(&result.labels)
                .filter(move |(_, &l)| l == j)
                .map(|(r, _)| r);
            let mut c = linalg::covariance(members, p);
            for d in 0..p {
                c[d * p + d] += RIDGE * base;
            }
            c
        };
        cov.iter_mut().for_each(|v| *v *= scale);
        covariances.push(cov);
    }
    GaussianMixturePrior::new(weights, result.centroids.clone(), covariances, scale)
}

/// `count` independent draws from the mixture.
pub fn sample_prior<R: Rng + ?Sized>(
    prior: &GaussianMixturePrior,
    count: usize,
    rng: &mut R,
) -> DataMatrix {
    let p = prior.dimension();
    if count == 0 {
        return DataMatrix::empty(p);
    }
    let mut values = Vec::with_capacity(count * p);
    for _ in 0..count {
        prior.sample_into(rng, &mut values);
    }
    DataMatrix::new(count, p, values).expect("finite prior draws")
}
