//! Resampling schemes: Efron's multinomial bootstrap, Rubin's Bayesian
//! bootstrap and the proper Bayesian bootstrap.
//!
//! The proper Bayesian bootstrap draws each replica point from
//! `G_n = (k F₀ + n F_n) / (k + n)`, a mixture of the prior guess `F₀` and
//! the empirical distribution `F_n`, and attaches Dirichlet weights with
//! concentration `(n + k) / m` per point. The prior's confidence is exposed
//! as `ω = k / (k + n)`, so `ω = 0` recovers Rubin's scheme and `ω → 1`
//! ignores the data.

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::prior::GaussianMixturePrior;
use crate::{DataMatrix, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Efron,
    Rubin,
    Proper,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    /// Number of replicas `B`.
    pub replicas: usize,
    /// Replica size `m`; the data size when `None`.
    pub resample_size: Option<usize>,
    /// Confidence `ω ∈ [0, 1)` in the prior.
    pub omega: f64,
    pub scheme: Scheme,
}

impl BootstrapConfig {
    pub fn proper(replicas: usize, omega: f64) -> Self {
        Self {
            replicas,
            resample_size: None,
            omega,
            scheme: Scheme::Proper,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicas == 0 {
            return Err(Error::InvalidParameter("at least one replica is required".into()));
        }
        if self.resample_size == Some(0) {
            return Err(Error::InvalidParameter("resample size must be at least 1".into()));
        }
        check_omega(self.omega)
    }
}

pub(crate) fn check_omega(omega: f64) -> Result<()> {
    if !(0.0..1.0).contains(&omega) {
        return Err(Error::InvalidParameter(alloc::format!(
            "omega must lie in [0, 1), got {omega}"
        )));
    }
    Ok(())
}

/// Prior confidence `k` corresponding to `ω` for `n` observations.
pub fn omega_to_k(omega: f64, n: usize) -> f64 {
    omega * n as f64 / (1.0 - omega)
}

/// Per-coordinate Dirichlet concentration `(n + k) / m`.
pub fn concentration(omega: f64, n: usize, m: usize) -> f64 {
    (n as f64 + omega_to_k(omega, n)) / m as f64
}

/// Multinomial counts: `n` picks with replacement among `n` rows.
pub fn efron_counts<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<u32> {
    let mut counts = alloc::vec![0u32; n];
    for _ in 0..n {
        counts[rng.random_range(0..n)] += 1;
    }
    counts
}

/// Efron weights `counts / n`.
pub fn efron_weights<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let nf = n as f64;
    efron_counts(n, rng).into_iter().map(|c| c as f64 / nf).collect()
}

/// Flat Dirichlet weights.
pub fn rubin_weights<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    dirichlet_symmetric(1.0, n, rng)
}

/// Symmetric Dirichlet draw of length `len`, normalized from Gamma variates.
///
/// For `alpha < 1` the variates are formed in log space as
/// `ln Γ(α + 1) + ln(U) / α`, which keeps every coordinate strictly positive
/// even when ordinary Gamma draws would underflow. Coordinates that still
/// round to zero after normalization are raised to `f64::MIN_POSITIVE`.
pub fn dirichlet_symmetric<R: Rng + ?Sized>(alpha: f64, len: usize, rng: &mut R) -> Vec<f64> {
    assert!(alpha > 0.0 && alpha.is_finite(), "Dirichlet concentration must be positive");
    if len == 1 {
        return alloc::vec![1.0];
    }
    let mut logs: Vec<f64> = if alpha >= 1.0 {
        let gamma = Gamma::new(alpha, 1.0).expect("valid gamma parameters");
        (0..len).map(|_| libm::log(gamma.sample(rng))).collect()
    } else {
        let gamma = Gamma::new(alpha + 1.0, 1.0).expect("valid gamma parameters");
        (0..len)
            .map(|_| {
                let g = gamma.sample(rng);
                let u: f64 = rng.random::<f64>();
                // u ∈ [0, 1); keep ln(u) finite
                libm::log(g) + libm::log(u.max(f64::MIN_POSITIVE)) / alpha
            })
            .collect()
    };
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for l in logs.iter_mut() {
        *l = libm::exp(*l - max);
        total += *l;
    }
    logs.iter_mut().for_each(|w| *w = (*w / total).max(f64::MIN_POSITIVE));
    logs
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// A copy of the data row with this id.
    Original(usize),
    /// A draw from the prior.
    Synthetic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Replica {
    pub points: DataMatrix,
    pub provenance: Vec<Provenance>,
    pub weights: Vec<f64>,
}

impl Replica {
    pub fn len(&self) -> usize {
        self.provenance.len()
    }

    pub fn is_empty(&self) -> bool {
        self.provenance.is_empty()
    }

    pub fn synthetic_count(&self) -> usize {
        self.provenance
            .iter()
            .filter(|p| matches!(p, Provenance::Synthetic))
            .count()
    }
}

/// One proper Bayesian bootstrap replica of size `m`.
///
/// Each point independently comes from the prior with probability `ω` and is
/// otherwise a uniformly chosen data row. Repeated rows are separate atoms
/// with their own weights.
pub fn proper_bayesian_replica<R: Rng + ?Sized>(
    data: &DataMatrix,
    prior: &GaussianMixturePrior,
    omega: f64,
    m: usize,
    rng: &mut R,
) -> Result<Replica> {
    check_omega(omega)?;
    if m == 0 {
        return Err(Error::InvalidParameter("resample size must be at least 1".into()));
    }
    if prior.dimension() != data.cols() {
        return Err(Error::Shape(alloc::format!(
            "prior has dimension {}, data has {}",
            prior.dimension(),
            data.cols()
        )));
    }
    let n = data.rows();
    let mut values = Vec::with_capacity(m * data.cols());
    let mut provenance = Vec::with_capacity(m);
    for _ in 0..m {
        if omega > 0.0 && rng.random::<f64>() < omega {
            prior.sample_into(rng, &mut values);
            provenance.push(Provenance::Synthetic);
        } else {
            let i = rng.random_range(0..n);
            values.extend_from_slice(data.row(i));
            provenance.push(Provenance::Original(data.row_id(i)));
        }
    }
    let weights = dirichlet_symmetric(concentration(omega, n, m), m, rng);
    Ok(Replica {
        points: DataMatrix::new(m, data.cols(), values)?,
        provenance,
        weights,
    })
}
