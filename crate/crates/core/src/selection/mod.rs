//! Choosing the number of clusters.
//!
//! The BBC procedure is run over a grid of (K, s) cells. Crisper memberships
//! mean the ensemble disambiguates clusters more easily, so the chosen K
//! minimizes either the mean membership entropy or the worst mean pairwise
//! entropy, read off at a reference prior scale. Silhouette and gap curves
//! are computed alongside for comparison.

mod baselines;
mod entropy;

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub use baselines::{
    gap_statistic, gap_with_references, silhouette, silhouette_curve, uniform_reference, Curve,
    GapCurve,
};
pub use entropy::{entropy_report, pairwise_entropy, shannon_entropy, EntropyReport, WorstPair};

use crate::ensemble::{bbc, BbcConfig, ReplicaWeighting};
use crate::exec::Executor;
use crate::kmeans::KMeansConfig;
use crate::rng::{Purpose, SeededRng};
use crate::{DataMatrix, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectKConfig {
    pub k_values: Vec<usize>,
    pub s_values: Vec<f64>,
    /// Scale whose cells decide the chosen K.
    pub reference_s: f64,
    pub omega: f64,
    pub replicas: usize,
    /// k-means settings shared by every run; `k` is overridden per cell.
    pub kmeans: KMeansConfig,
    pub weighting: ReplicaWeighting,
    /// Also compute silhouette and gap curves.
    pub baselines: bool,
    pub gap_references: usize,
}

impl Default for SelectKConfig {
    fn default() -> Self {
        Self {
            k_values: (2..=6).collect(),
            s_values: alloc::vec![1.0],
            reference_s: 1.0,
            omega: 0.5,
            replicas: 100,
            kmeans: KMeansConfig::new(2),
            weighting: ReplicaWeighting::Dirichlet,
            baselines: true,
            gap_references: 50,
        }
    }
}

impl SelectKConfig {
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.k_values.is_empty() {
            return Err(Error::InvalidParameter("empty K range".into()));
        }
        if let Some(&k) = self.k_values.iter().find(|&&k| k < 2 || k > n) {
            return Err(Error::InvalidParameter(alloc::format!("K = {k} outside 2..={n}")));
        }
        if self.s_values.is_empty() {
            return Err(Error::InvalidParameter("at least one s value is required".into()));
        }
        if !self.s_values.contains(&self.reference_s) {
            return Err(Error::InvalidParameter(alloc::format!(
                "reference s = {} is not among the scanned values",
                self.reference_s
            )));
        }
        if self.baselines && self.gap_references == 0 {
            return Err(Error::InvalidParameter("gap statistic needs reference sets".into()));
        }
        Ok(())
    }

    fn cell_config(&self, k: usize, s: f64) -> BbcConfig {
        BbcConfig {
            kmeans: KMeansConfig { k, ..self.kmeans.clone() },
            scale: s,
            omega: self.omega,
            replicas: self.replicas,
            weighting: self.weighting,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub k: usize,
    pub s: f64,
    pub report: EntropyReport,
    pub skipped_replicas: usize,
}

/// Argmins for one prior scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleChoice {
    pub s: f64,
    pub k_by_mean_entropy: usize,
    pub k_by_worst_pair: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KSelectionReport {
    pub grid: Vec<GridCell>,
    pub reference_s: f64,
    pub k_by_mean_entropy: usize,
    pub k_by_worst_pair: usize,
    /// Argmins at every scanned scale, for judging robustness to `s`.
    pub per_scale: Vec<ScaleChoice>,
    /// Whether every scale agrees with the reference choice on both criteria.
    pub scales_agree: bool,
    pub silhouette: Option<Curve>,
    pub gap: Option<GapCurve>,
}

impl KSelectionReport {
    pub fn cell(&self, k: usize, s: f64) -> Option<&GridCell> {
        self.grid.iter().find(|c| c.k == k && c.s == s)
    }

    /// `(K, S̄)` at the given scale, in K order.
    pub fn mean_entropy_curve(&self, s: f64) -> Vec<(usize, f64)> {
        self.grid
            .iter()
            .filter(|c| c.s == s)
            .map(|c| (c.k, c.report.mean_entropy))
            .collect()
    }

    /// `(K, max pairwise S̄)` at the given scale, in K order.
    pub fn worst_pair_curve(&self, s: f64) -> Vec<(usize, f64)> {
        self.grid
            .iter()
            .filter(|c| c.s == s)
            .map(|c| (c.k, c.report.worst_pair_value()))
            .collect()
    }
}

/// K with the smallest value; smallest K on ties.
fn argmin(points: &[(usize, f64)]) -> usize {
    let mut best = points[0];
    for &p in &points[1..] {
        if p.1 < best.1 || (p.1 == best.1 && p.0 < best.0) {
            best = p;
        }
    }
    best.0
}

/// Substream for grid cell (K, s).
pub fn cell_rng(rng: SeededRng, k: usize, s: f64) -> SeededRng {
    rng.derive(Purpose::GridCell, k as u64)
        .derive(Purpose::GridCell, s.to_bits())
}

pub fn select_k<E: Executor>(
    data: &DataMatrix,
    cfg: &SelectKConfig,
    rng: SeededRng,
    exec: &E,
) -> Result<KSelectionReport> {
    cfg.validate(data.rows())?;
    let mut ks = cfg.k_values.clone();
    ks.sort_unstable();
    ks.dedup();
    let cells: Vec<(usize, f64)> = cfg
        .s_values
        .iter()
        .flat_map(|&s| ks.iter().map(move |&k| (k, s)))
        .collect();
    let grid = exec.map(cells.len(), |i| -> Result<GridCell> {
        let (k, s) = cells[i];
        let res = bbc(data, &cfg.cell_config(k, s), cell_rng(rng, k, s), exec)?;
        Ok(GridCell {
            k,
            s,
            report: entropy_report(&res.membership),
            skipped_replicas: res.skipped_replicas(),
        })
    });
    let grid: Vec<GridCell> = grid.into_iter().collect::<Result<_>>()?;

    let mut report = KSelectionReport {
        grid,
        reference_s: cfg.reference_s,
        k_by_mean_entropy: 0,
        k_by_worst_pair: 0,
        per_scale: Vec::new(),
        scales_agree: true,
        silhouette: None,
        gap: None,
    };
    for &s in &cfg.s_values {
        if report.per_scale.iter().any(|c| c.s == s) {
            continue;
        }
        report.per_scale.push(ScaleChoice {
            s,
            k_by_mean_entropy: argmin(&report.mean_entropy_curve(s)),
            k_by_worst_pair: argmin(&report.worst_pair_curve(s)),
        });
    }
    let chosen = report
        .per_scale
        .iter()
        .find(|c| c.s == cfg.reference_s)
        .expect("reference scale validated")
        .clone();
    report.k_by_mean_entropy = chosen.k_by_mean_entropy;
    report.k_by_worst_pair = chosen.k_by_worst_pair;
    report.scales_agree = report.per_scale.iter().all(|c| {
        c.k_by_mean_entropy == chosen.k_by_mean_entropy && c.k_by_worst_pair == chosen.k_by_worst_pair
    });

    if cfg.baselines {
        let base = rng.derive(Purpose::Baseline, 0);
        report.silhouette = Some(silhouette_curve(data, &ks, &cfg.kmeans, base, exec)?);
        report.gap = Some(gap_statistic(data, &ks, cfg.gap_references, &cfg.kmeans, base, exec)?);
    }
    Ok(report)
}
