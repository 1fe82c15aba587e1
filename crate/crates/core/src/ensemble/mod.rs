//! Bagged clustering: many clusterings of resampled data, aligned to a
//! reference clustering and aggregated into fuzzy memberships.
//!
//! Two procedures share the machinery:
//!
//! * [`bagclust1`] resamples with Efron's bootstrap;
//! * [`bbc`] resamples with the proper Bayesian bootstrap around a
//!   Gaussian-mixture prior elicited from the reference k-means run, and
//!   clusters each replica with its Dirichlet weights as point masses.
//!
//! Membership `u_k(x_i)` is the fraction of replicas containing row `i` in
//! which it received (aligned) label `k`. A row repeated within one replica
//! still casts a single vote.

mod align;

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub use align::{align_labels, co_occurrence, LabelAlignment};

use crate::bootstrap::{self, proper_bayesian_replica, Provenance, Replica};
use crate::kmeans::{kmeans, ClusteringResult, KMeansConfig};
use crate::prior::{elicit_prior, GaussianMixturePrior};
use crate::rng::{Purpose, SeededRng};
use crate::{DataMatrix, Error, Executor, Result};

/// Fuzzy memberships, `n × k`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MembershipMatrix {
    pub k: usize,
    pub u: Vec<f64>,
    /// Number of replicas that contained each row.
    pub support_counts: Vec<usize>,
    /// Argmax of each row, lowest index on ties.
    pub final_labels: Vec<usize>,
    /// Rows whose maximum membership is shared by several clusters.
    pub ties: Vec<bool>,
}

impl MembershipMatrix {
    /// Builds memberships from explicit rows; each row must be a probability
    /// vector (or all zeros for an unsupported row, in which case its
    /// support count is zero).
    pub fn from_rows(k: usize, u: Vec<f64>, support_counts: Vec<usize>) -> Result<Self> {
        if k == 0 || u.len() % k != 0 || u.len() / k != support_counts.len() {
            return Err(Error::Shape(alloc::format!(
                "{} membership values for k = {k} and {} support counts",
                u.len(),
                support_counts.len()
            )));
        }
        for (i, row) in u.chunks_exact(k).enumerate() {
            let sum: f64 = row.iter().sum();
            let bad_entry = row.iter().any(|v| !(0.0..=1.0).contains(v));
            let bad_sum = if support_counts[i] > 0 {
                (sum - 1.0).abs() > 1e-9
            } else {
                sum != 0.0
            };
            if bad_entry || bad_sum {
                return Err(Error::InvalidProbabilityVector(alloc::format!(
                    "membership row {i}"
                )));
            }
        }
        let (final_labels, ties) = u.chunks_exact(k).map(argmax).unzip();
        Ok(Self {
            k,
            u,
            support_counts,
            final_labels,
            ties,
        })
    }

    pub fn rows(&self) -> usize {
        self.support_counts.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.u[i * self.k..(i + 1) * self.k]
    }

    pub fn is_supported(&self, i: usize) -> bool {
        self.support_counts[i] > 0
    }

    /// Same memberships with rows rearranged: row `i` of the result is row
    /// `order[i]` of `self`.
    pub fn reorder(&self, order: &[usize]) -> Self {
        let mut u = Vec::with_capacity(self.u.len());
        for &i in order {
            u.extend_from_slice(self.row(i));
        }
        Self {
            k: self.k,
            u,
            support_counts: order.iter().map(|&i| self.support_counts[i]).collect(),
            final_labels: order.iter().map(|&i| self.final_labels[i]).collect(),
            ties: order.iter().map(|&i| self.ties[i]).collect(),
        }
    }
}

fn argmax(row: &[f64]) -> (usize, bool) {
    let mut best = 0;
    for (j, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = j;
        }
    }
    let ties = row.iter().filter(|&&v| v == row[best]).count() > 1;
    (best, ties)
}

/// Per-row vote counts. Merging tallies is addition, so the order in which
/// replicas are folded in does not matter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VoteTally {
    k: usize,
    votes: Vec<u32>,
    support: Vec<u32>,
}

impl VoteTally {
    pub fn new(n: usize, k: usize) -> Self {
        Self {
            k,
            votes: alloc::vec![0; n * k],
            support: alloc::vec![0; n],
        }
    }

    /// One vote for `label` on `row`.
    pub fn record(&mut self, row: usize, label: usize) {
        self.votes[row * self.k + label] += 1;
        self.support[row] += 1;
    }

    pub fn merge(&mut self, other: &VoteTally) {
        for (a, b) in self.votes.iter_mut().zip(&other.votes) {
            *a += b;
        }
        for (a, b) in self.support.iter_mut().zip(&other.support) {
            *a += b;
        }
    }

    pub fn into_membership(self) -> MembershipMatrix {
        let k = self.k;
        let mut u = Vec::with_capacity(self.votes.len());
        for (row, &s) in self.votes.chunks_exact(k).zip(&self.support) {
            if s == 0 {
                u.extend(core::iter::repeat(0.0).take(k));
            } else {
                u.extend(row.iter().map(|&v| v as f64 / s as f64));
            }
        }
        let (final_labels, ties) = u.chunks_exact(k).map(argmax).unzip();
        MembershipMatrix {
            k,
            u,
            support_counts: self.support.into_iter().map(|s| s as usize).collect(),
            final_labels,
            ties,
        }
    }
}

/// Per-replica bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicaDiagnostic {
    pub index: usize,
    /// Distinct data rows present in the replica.
    pub original_rows: usize,
    pub synthetic_points: usize,
    /// Agreement with the reference after alignment, over `original_rows`.
    pub overlap: usize,
    pub skipped: Option<SkipReason>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkipReason {
    NoOriginalPoints,
    /// The replica could not be clustered, e.g. too few distinct points.
    Clustering(alloc::string::String),
}

/// Votes of one replica: aligned labels for the distinct rows it contains.
fn replica_votes(
    reference: &[usize],
    rows: &[usize],
    labels: &[usize],
    k: usize,
) -> Result<(Vec<(usize, usize)>, usize)> {
    let ref_labels: Vec<usize> = rows.iter().map(|&r| reference[r]).collect();
    let alignment = align_labels(&ref_labels, labels, k)?;
    let votes = rows
        .iter()
        .zip(labels)
        .map(|(&r, &l)| (r, alignment.apply(l)))
        .collect();
    Ok((votes, alignment.overlap))
}

/// Distinct rows of a replica with their label. Duplicates of a row share
/// one label because they are identical points.
fn distinct_row_labels(
    atoms: impl Iterator<Item = (usize, usize)>,
    n: usize,
) -> (Vec<usize>, Vec<usize>) {
    let mut label_of = alloc::vec![usize::MAX; n];
    let mut rows = Vec::new();
    for (row, label) in atoms {
        if label_of[row] == usize::MAX {
            rows.push(row);
        }
        label_of[row] = label;
    }
    rows.sort_unstable();
    let labels = rows.iter().map(|&r| label_of[r]).collect();
    (rows, labels)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BagClustResult {
    pub membership: MembershipMatrix,
    pub reference: ClusteringResult,
    pub diagnostics: Vec<ReplicaDiagnostic>,
}

/// BagClust1 with Efron resamples of size `n`.
///
/// Replica `b` is a multinomial count vector over the rows; clustering it
/// with the counts as masses is the same as clustering the resample with
/// its duplicates.
pub fn bagclust1<E: Executor>(
    data: &DataMatrix,
    replicas: usize,
    kmeans_cfg: &KMeansConfig,
    rng: SeededRng,
    exec: &E,
) -> Result<BagClustResult> {
    if replicas == 0 {
        return Err(Error::InvalidParameter("at least one replica is required".into()));
    }
    let reference = kmeans(data, None, kmeans_cfg, rng.derive(Purpose::Reference, 0))?;
    let n = data.rows();
    let counts: Vec<Vec<u32>> = (0..replicas)
        .map(|b| {
            let mut stream = rng.derive(Purpose::Replica, b as u64).stream();
            bootstrap::efron_counts(n, &mut stream)
        })
        .collect();
    bagclust1_with_counts(data, reference, &counts, kmeans_cfg, rng, exec)
}

/// BagClust1 over caller-supplied resamples, given as per-row counts.
pub fn bagclust1_with_counts<E: Executor>(
    data: &DataMatrix,
    reference: ClusteringResult,
    counts: &[Vec<u32>],
    kmeans_cfg: &KMeansConfig,
    rng: SeededRng,
    exec: &E,
) -> Result<BagClustResult> {
    let n = data.rows();
    let k = kmeans_cfg.k;
    if reference.labels.len() != n || reference.k() != k {
        return Err(Error::Shape("reference clustering does not match data and k".into()));
    }
    if let Some(c) = counts.iter().find(|c| c.len() != n) {
        return Err(Error::Shape(alloc::format!("{} counts for {n} rows", c.len())));
    }
    let outcomes = exec.map(counts.len(), |b| -> Result<_> {
        let weights: Vec<f64> = counts[b].iter().map(|&c| c as f64).collect();
        let fit = kmeans(
            data,
            Some(&weights),
            kmeans_cfg,
            rng.derive(Purpose::ReplicaClustering, b as u64),
        );
        let present = (0..n).filter(|&i| counts[b][i] > 0);
        let mut diag = ReplicaDiagnostic {
            index: b,
            original_rows: present.clone().count(),
            synthetic_points: 0,
            overlap: 0,
            skipped: None,
        };
        let fit = match fit {
            Ok(fit) => fit,
            Err(e @ (Error::TooManyClusters { .. } | Error::ZeroWeights)) => {
                diag.skipped = Some(SkipReason::Clustering(alloc::format!("{e}")));
                return Ok((Vec::new(), diag));
            }
            Err(e) => return Err(e),
        };
        let (rows, labels) = distinct_row_labels(present.map(|i| (i, fit.labels[i])), n);
        let (votes, overlap) = replica_votes(&reference.labels, &rows, &labels, k)?;
        diag.overlap = overlap;
        Ok((votes, diag))
    });
    let (membership, diagnostics) = fold_votes(outcomes, n, k)?;
    Ok(BagClustResult {
        membership,
        reference,
        diagnostics,
    })
}

fn fold_votes(
    outcomes: Vec<Result<(Vec<(usize, usize)>, ReplicaDiagnostic)>>,
    n: usize,
    k: usize,
) -> Result<(MembershipMatrix, Vec<ReplicaDiagnostic>)> {
    let mut tally = VoteTally::new(n, k);
    let mut diagnostics = Vec::with_capacity(outcomes.len());
    for outcome in outcomes {
        let (votes, diag) = outcome?;
        for (row, label) in votes {
            tally.record(row, label);
        }
        diagnostics.push(diag);
    }
    Ok((tally.into_membership(), diagnostics))
}

/// How replica points are weighted when a replica is clustered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReplicaWeighting {
    /// Dirichlet weights act as point masses.
    Dirichlet,
    /// Weights are drawn but ignored.
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BbcConfig {
    /// k-means settings for the reference run and every replica; `k` is the
    /// number of clusters.
    pub kmeans: KMeansConfig,
    /// Prior covariance scale `s`.
    pub scale: f64,
    /// Prior confidence `ω`.
    pub omega: f64,
    pub replicas: usize,
    pub weighting: ReplicaWeighting,
}

impl BbcConfig {
    pub fn new(k: usize) -> Self {
        Self {
            kmeans: KMeansConfig::new(k),
            scale: 1.0,
            omega: 0.5,
            replicas: 100,
            weighting: ReplicaWeighting::Dirichlet,
        }
    }

    pub fn k(&self) -> usize {
        self.kmeans.k
    }

    pub fn validate(&self) -> Result<()> {
        self.kmeans.validate()?;
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::InvalidParameter("prior scale s must be positive".into()));
        }
        if self.replicas == 0 {
            return Err(Error::InvalidParameter("at least one replica is required".into()));
        }
        bootstrap::check_omega(self.omega)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BbcResult {
    pub membership: MembershipMatrix,
    pub prior: GaussianMixturePrior,
    pub reference: ClusteringResult,
    pub diagnostics: Vec<ReplicaDiagnostic>,
}

impl BbcResult {
    pub fn synthetic_points(&self) -> usize {
        self.diagnostics.iter().map(|d| d.synthetic_points).sum()
    }

    pub fn skipped_replicas(&self) -> usize {
        self.diagnostics.iter().filter(|d| d.skipped.is_some()).count()
    }
}

/// The pieces of a BBC run that every replica shares. Data are held in
/// canonical row-id order so that results do not depend on row arrangement.
#[derive(Debug, Clone)]
pub struct BbcPlan {
    data: DataMatrix,
    order: Option<Vec<usize>>,
    cfg: BbcConfig,
    rng: SeededRng,
    reference: ClusteringResult,
    prior: GaussianMixturePrior,
}

impl BbcPlan {
    /// Runs the reference clustering and elicits the prior.
    pub fn new(data: &DataMatrix, cfg: &BbcConfig, rng: SeededRng) -> Result<Self> {
        cfg.validate()?;
        let order = data.canonical_order();
        let canonical = match &order {
            Some(order) => data.select_rows(order),
            None => data.clone(),
        };
        let reference = kmeans(&canonical, None, &cfg.kmeans, rng.derive(Purpose::Reference, 0))?;
        let prior = elicit_prior(&canonical, &reference, cfg.scale)?;
        Ok(Self {
            data: canonical,
            order,
            cfg: cfg.clone(),
            rng,
            reference,
            prior,
        })
    }

    pub fn prior(&self) -> &GaussianMixturePrior {
        &self.prior
    }

    /// Replica `b`; a pure function of the plan and `b`.
    pub fn replica(&self, b: usize) -> Result<Replica> {
        let mut stream = self.rng.derive(Purpose::Replica, b as u64).stream();
        let n = self.data.rows();
        proper_bayesian_replica(&self.data, &self.prior, self.cfg.omega, n, &mut stream)
    }

    fn replica_outcome(&self, b: usize) -> Result<(Vec<(usize, usize)>, ReplicaDiagnostic)> {
        let replica = self.replica(b)?;
        let n = self.data.rows();
        let k = self.cfg.k();
        let originals = replica.provenance.iter().enumerate().filter_map(|(i, p)| match p {
            Provenance::Original(row) => Some((i, *row)),
            Provenance::Synthetic => None,
        });
        let mut diag = ReplicaDiagnostic {
            index: b,
            original_rows: 0,
            synthetic_points: replica.synthetic_count(),
            overlap: 0,
            skipped: None,
        };
        if originals.clone().next().is_none() {
            diag.skipped = Some(SkipReason::NoOriginalPoints);
            return Ok((Vec::new(), diag));
        }
        let weights = match self.cfg.weighting {
            ReplicaWeighting::Dirichlet => Some(replica.weights.as_slice()),
            ReplicaWeighting::Uniform => None,
        };
        let fit = match kmeans(
            &replica.points,
            weights,
            &self.cfg.kmeans,
            self.rng.derive(Purpose::ReplicaClustering, b as u64),
        ) {
            Ok(fit) => fit,
            Err(e @ Error::TooManyClusters { .. }) => {
                diag.skipped = Some(SkipReason::Clustering(alloc::format!("{e}")));
                return Ok((Vec::new(), diag));
            }
            Err(e) => return Err(e),
        };
        let (rows, labels) =
            distinct_row_labels(originals.map(|(atom, row)| (row, fit.labels[atom])), n);
        diag.original_rows = rows.len();
        let (votes, overlap) = replica_votes(&self.reference.labels, &rows, &labels, k)?;
        diag.overlap = overlap;
        Ok((votes, diag))
    }

    /// Runs replicas `0..count` and aggregates their votes.
    pub fn run<E: Executor>(&self, count: usize, exec: &E) -> Result<BbcResult> {
        let outcomes = exec.map(count, |b| self.replica_outcome(b));
        let (membership, diagnostics) = fold_votes(outcomes, self.data.rows(), self.cfg.k())?;
        let mut reference = self.reference.clone();
        let membership = match &self.order {
            // Position `pos` holds row id `ids[pos]`, which sits at index
            // `ids[pos]` in canonical order.
            Some(order) => {
                let mut back = alloc::vec![0; order.len()];
                for (id, &pos) in order.iter().enumerate() {
                    back[pos] = id;
                }
                reference.labels = back.iter().map(|&id| reference.labels[id]).collect();
                membership.reorder(&back)
            }
            None => membership,
        };
        Ok(BbcResult {
            membership,
            prior: self.prior.clone(),
            reference,
            diagnostics,
        })
    }
}

/// The BBC procedure: reference k-means, prior elicitation, `B` proper
/// Bayesian bootstrap replicas clustered with weighted k-means, alignment on
/// original rows and vote aggregation.
pub fn bbc<E: Executor>(
    data: &DataMatrix,
    cfg: &BbcConfig,
    rng: SeededRng,
    exec: &E,
) -> Result<BbcResult> {
    BbcPlan::new(data, cfg, rng)?.run(cfg.replicas, exec)
}

#[cfg(test)]
mod tests;
