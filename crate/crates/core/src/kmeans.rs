//! Weighted k-means (Lloyd iteration) with restarts.
//!
//! Every observation carries a nonnegative mass. Assignment sends each point
//! to its nearest centroid in squared Euclidean distance; the update step
//! moves each centroid to the mass-weighted mean of its points. With unit
//! masses this is ordinary k-means; integer masses behave exactly like
//! duplicated rows.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::matrix::squared_distance;
use crate::rng::{Purpose, SeededRng};
use crate::{DataMatrix, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    /// D²-weighted seeding.
    KMeansPlusPlus,
    /// `k` distinct rows drawn uniformly.
    RandomPoints,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansConfig {
    pub k: usize,
    pub n_restarts: usize,
    pub max_iter: usize,
    /// Relative change in WSS below which iteration stops.
    pub tol: f64,
    pub init: Init,
}

impl KMeansConfig {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            n_restarts: 10,
            max_iter: 100,
            tol: 1e-8,
            init: Init::KMeansPlusPlus,
        }
    }

    pub fn with_restarts(mut self, n_restarts: usize) -> Self {
        self.n_restarts = n_restarts;
        self
    }

    pub fn with_init(mut self, init: Init) -> Self {
        self.init = init;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        if self.n_restarts == 0 {
            return Err(Error::InvalidParameter("n_restarts must be at least 1".into()));
        }
        if !(self.tol >= 0.0) {
            return Err(Error::InvalidParameter("tol must be nonnegative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringResult {
    pub labels: Vec<usize>,
    /// `k × p`.
    pub centroids: DataMatrix,
    pub wss: f64,
    pub n_iter: usize,
    pub converged: bool,
}

impl ClusteringResult {
    pub fn k(&self) -> usize {
        self.centroids.rows()
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = alloc::vec![0; self.k()];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }
}

/// Best-of-`n_restarts` weighted k-means. Restart `r` draws from the
/// substream `rng.derive(Restart, r)`; ties in WSS go to the lower restart.
pub fn kmeans(
    data: &DataMatrix,
    weights: Option<&[f64]>,
    cfg: &KMeansConfig,
    rng: SeededRng,
) -> Result<ClusteringResult> {
    cfg.validate()?;
    if let Some(w) = weights {
        check_weights(w, data.rows())?;
    }
    let distinct = data.distinct_rows(weights);
    if cfg.k > distinct {
        return Err(Error::TooManyClusters { k: cfg.k, distinct });
    }
    let mut best: Option<ClusteringResult> = None;
    for r in 0..cfg.n_restarts {
        let mut stream = rng.derive(Purpose::Restart, r as u64).stream();
        let init = match cfg.init {
            Init::KMeansPlusPlus => kmeans_plus_plus(data, weights, cfg.k, &mut stream),
            Init::RandomPoints => random_points(data, weights, cfg.k, &mut stream),
        };
        let result = lloyd(data, weights, init, cfg);
        if best.as_ref().map_or(true, |b| result.wss < b.wss) {
            best = Some(result);
        }
    }
    Ok(best.expect("at least one restart"))
}

fn check_weights(w: &[f64], n: usize) -> Result<()> {
    if w.len() != n {
        return Err(Error::Shape(format!("{} weights for {n} rows", w.len())));
    }
    if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::InvalidParameter(
            "weights must be finite and nonnegative".into(),
        ));
    }
    if w.iter().sum::<f64>() <= 0.0 {
        return Err(Error::ZeroWeights);
    }
    Ok(())
}

#[inline]
fn weight(weights: Option<&[f64]>, i: usize) -> f64 {
    weights.map_or(1.0, |w| w[i])
}

/// Picks an index with probability proportional to `mass`.
fn sample_proportional<R: Rng + ?Sized>(mass: &[f64], rng: &mut R) -> usize {
    let total: f64 = mass.iter().sum();
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &m) in mass.iter().enumerate() {
        if m > 0.0 {
            acc += m;
            last_positive = i;
            if target < acc {
                return i;
            }
        }
    }
    last_positive
}

fn kmeans_plus_plus<R: Rng + ?Sized>(
    data: &DataMatrix,
    weights: Option<&[f64]>,
    k: usize,
    rng: &mut R,
) -> DataMatrix {
    let n = data.rows();
    let p = data.cols();
    let mut centroids = Vec::with_capacity(k * p);
    let mut mass: Vec<f64> = (0..n).map(|i| weight(weights, i)).collect();
    let first = sample_proportional(&mass, rng);
    centroids.extend_from_slice(data.row(first));
    let mut nearest: Vec<f64> = (0..n)
        .map(|i| squared_distance(data.row(i), data.row(first)))
        .collect();
    for _ in 1..k {
        for i in 0..n {
            mass[i] = weight(weights, i) * nearest[i];
        }
        let next = sample_proportional(&mass, rng);
        let c = data.row(next);
        centroids.extend_from_slice(c);
        for (i, d) in nearest.iter_mut().enumerate() {
            *d = d.min(squared_distance(data.row(i), c));
        }
    }
    DataMatrix::with_shape(k, p, centroids).expect("finite centroids")
}

fn random_points<R: Rng + ?Sized>(
    data: &DataMatrix,
    weights: Option<&[f64]>,
    k: usize,
    rng: &mut R,
) -> DataMatrix {
    let eligible: Vec<usize> = (0..data.rows())
        .filter(|&i| weight(weights, i) > 0.0)
        .collect();
    let picks = rand::seq::index::sample(rng, eligible.len(), k);
    let rows: Vec<usize> = picks.into_iter().map(|i| eligible[i]).collect();
    data.select_rows(&rows)
}

/// Index of the nearest centroid for every row, ties to the lowest index.
pub fn assign_nearest(data: &DataMatrix, centroids: &DataMatrix) -> Vec<usize> {
    data.iter_rows().map(|x| nearest(x, centroids).0).collect()
}

fn nearest(x: &[f64], centroids: &DataMatrix) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.iter_rows().enumerate() {
        let d = squared_distance(x, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

/// Weighted within-cluster sum of squares.
pub fn wss(
    data: &DataMatrix,
    labels: &[usize],
    centroids: &DataMatrix,
    weights: Option<&[f64]>,
) -> Result<f64> {
    if labels.len() != data.rows() {
        return Err(Error::Shape(format!(
            "{} labels for {} rows",
            labels.len(),
            data.rows()
        )));
    }
    if let Some(w) = weights {
        if w.len() != data.rows() {
            return Err(Error::Shape(format!("{} weights for {} rows", w.len(), data.rows())));
        }
    }
    let k = centroids.rows();
    let mut total = 0.0;
    for (i, (&l, x)) in labels.iter().zip(data.iter_rows()).enumerate() {
        if l >= k {
            return Err(Error::LabelOutOfRange { index: i, label: l, k });
        }
        total += weight(weights, i) * squared_distance(x, centroids.row(l));
    }
    Ok(total)
}

fn wss_unchecked(
    data: &DataMatrix,
    labels: &[usize],
    centroids: &DataMatrix,
    weights: Option<&[f64]>,
) -> f64 {
    labels
        .iter()
        .zip(data.iter_rows())
        .enumerate()
        .map(|(i, (&l, x))| weight(weights, i) * squared_distance(x, centroids.row(l)))
        .sum()
}

/// Moves a centroid onto the farthest positive-mass point for every cluster
/// that holds no mass, then reassigns. Returns whether anything changed.
fn repair_empty(
    data: &DataMatrix,
    weights: Option<&[f64]>,
    centroids: &mut [f64],
    labels: &mut Vec<usize>,
    k: usize,
) -> bool {
    let p = data.cols();
    let mut repaired = false;
    // Each pass fills at least one empty cluster, so k passes suffice.
    for _ in 0..k {
        let mut mass = alloc::vec![0.0; k];
        for (i, &l) in labels.iter().enumerate() {
            mass[l] += weight(weights, i);
        }
        let Some(empty) = mass.iter().position(|&m| m <= 0.0) else {
            break;
        };
        let mut far = None;
        let mut far_d = 0.0;
        for (i, &l) in labels.iter().enumerate() {
            if weight(weights, i) <= 0.0 {
                continue;
            }
            let d = squared_distance(data.row(i), &centroids[l * p..(l + 1) * p]);
            if d > far_d {
                far_d = d;
                far = Some(i);
            }
        }
        let Some(far) = far else { break };
        centroids[empty * p..(empty + 1) * p].copy_from_slice(data.row(far));
        let cm = DataMatrix::with_shape(k, p, centroids.to_vec()).expect("finite centroids");
        *labels = assign_nearest(data, &cm);
        // The point now sits on the repaired centroid; make sure it lands
        // there even when another centroid coincides with it.
        labels[far] = empty;
        repaired = true;
    }
    repaired
}

fn update_centroids(
    data: &DataMatrix,
    weights: Option<&[f64]>,
    labels: &[usize],
    centroids: &mut [f64],
    k: usize,
) {
    let p = data.cols();
    let mut sums = alloc::vec![0.0; k * p];
    let mut mass = alloc::vec![0.0; k];
    for (i, (&l, x)) in labels.iter().zip(data.iter_rows()).enumerate() {
        let w = weight(weights, i);
        if w <= 0.0 {
            continue;
        }
        mass[l] += w;
        for (s, v) in sums[l * p..(l + 1) * p].iter_mut().zip(x) {
            *s += w * v;
        }
    }
    for j in 0..k {
        if mass[j] > 0.0 {
            for c in 0..p {
                centroids[j * p + c] = sums[j * p + c] / mass[j];
            }
        }
    }
}

/// Lloyd iteration from the given starting centroids.
pub(crate) fn lloyd(
    data: &DataMatrix,
    weights: Option<&[f64]>,
    init: DataMatrix,
    cfg: &KMeansConfig,
) -> ClusteringResult {
    let k = init.rows();
    let p = data.cols();
    let mut centroids = init.values().to_vec();
    let as_matrix = |c: &[f64]| DataMatrix::with_shape(k, p, c.to_vec()).expect("finite centroids");

    let mut labels = assign_nearest(data, &init);
    repair_empty(data, weights, &mut centroids, &mut labels, k);
    let mut current = wss_unchecked(data, &labels, &as_matrix(&centroids), weights);
    let mut n_iter = 0;
    let mut converged = false;
    while n_iter < cfg.max_iter {
        n_iter += 1;
        update_centroids(data, weights, &labels, &mut centroids, k);
        let cm = as_matrix(&centroids);
        let mut next_labels = assign_nearest(data, &cm);
        repair_empty(data, weights, &mut centroids, &mut next_labels, k);
        let next = wss_unchecked(data, &next_labels, &as_matrix(&centroids), weights);
        let unchanged = next_labels == labels;
        let small_change = current <= 0.0 || (current - next).abs() <= cfg.tol * current;
        labels = next_labels;
        current = next;
        if unchanged || small_change {
            converged = true;
            break;
        }
    }
    ClusteringResult {
        labels,
        centroids: as_matrix(&centroids),
        wss: current,
        n_iter,
        converged,
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use rand::Rng;
    use proptest::prelude::*;

    fn four_points() -> DataMatrix {
        DataMatrix::from_rows(&[[0.0, 0.0], [0.0, 0.1], [10.0, 10.0], [10.0, 10.1]]).unwrap()
    }

    #[test]
    fn two_obvious_pairs() {
        // The two bipartitions keeping the pairs together give WSS
        // 2·(0.05²·2) = 0.01; every other split is far worse.
        let r = kmeans(&four_points(), None, &KMeansConfig::new(2), SeededRng::new(1)).unwrap();
        assert_eq!(r.labels[0], r.labels[1]);
        assert_eq!(r.labels[2], r.labels[3]);
        assert_ne!(r.labels[0], r.labels[2]);
        assert!((r.wss - 0.01).abs() < 1e-12, "wss {}", r.wss);
        assert!(r.converged);
    }

    #[test]
    fn k_equals_n_is_exact() {
        let d = four_points();
        let r = kmeans(&d, None, &KMeansConfig::new(4), SeededRng::new(2)).unwrap();
        assert_eq!(r.wss, 0.0);
        let mut l = r.labels.clone();
        l.sort();
        assert_eq!(l, [0, 1, 2, 3]);
    }

    #[test]
    fn too_many_clusters() {
        let d = DataMatrix::from_rows(&[[1.0], [1.0], [2.0]]).unwrap();
        assert_eq!(
            kmeans(&d, None, &KMeansConfig::new(3), SeededRng::new(0)).unwrap_err(),
            Error::TooManyClusters { k: 3, distinct: 2 }
        );
    }

    #[test]
    fn zero_weights_rejected() {
        let d = four_points();
        assert_eq!(
            kmeans(&d, Some(&[0.0; 4]), &KMeansConfig::new(1), SeededRng::new(0)).unwrap_err(),
            Error::ZeroWeights
        );
    }

    #[test]
    fn wss_examples() {
        let single = DataMatrix::from_rows(&[[3.0, 4.0]]).unwrap();
        assert_eq!(wss(&single, &[0], &single, None).unwrap(), 0.0);

        let d = DataMatrix::from_rows(&[[0.0, 0.0], [2.0, 0.0]]).unwrap();
        let c = DataMatrix::from_rows(&[[1.0, 0.0]]).unwrap();
        assert_eq!(wss(&d, &[0, 0], &c, None).unwrap(), 2.0);
        assert_eq!(wss(&d, &[0, 0], &c, Some(&[2.0, 2.0])).unwrap(), 4.0);
        assert!(matches!(
            wss(&d, &[0, 1], &c, None),
            Err(Error::LabelOutOfRange { index: 1, label: 1, k: 1 })
        ));
    }

    #[test]
    fn assign_ties_and_exact_hits() {
        let c = DataMatrix::from_rows(&[[-1.0, 0.0], [1.0, 0.0], [5.0, 5.0]]).unwrap();
        let d = DataMatrix::from_rows(&[[5.0, 5.0], [0.0, 0.0]]).unwrap();
        assert_eq!(assign_nearest(&d, &c), [2, 0]);
    }

    #[test]
    fn repairs_empty_clusters() {
        // Both starting centroids sit on the left group; the right group must
        // end up with a centroid of its own.
        let d = DataMatrix::from_rows(&[[0.0], [0.1], [0.2], [9.0], [9.2]]).unwrap();
        let init = DataMatrix::from_rows(&[[0.0], [0.0]]).unwrap();
        let r = lloyd(&d, None, init, &KMeansConfig::new(2));
        assert_eq!(r.cluster_sizes().iter().filter(|&&s| s > 0).count(), 2);
        assert_eq!(r.labels[3], r.labels[4]);
        assert_ne!(r.labels[0], r.labels[3]);
    }

    /// Grid-valued data keeps every sum exact, so weighted and duplicated
    /// runs must agree bit for bit.
    pub(crate) fn grid_data(n: usize, seed: u64) -> DataMatrix {
        let mut r = SeededRng::new(seed).stream();
        let v: Vec<f64> = (0..n * 2).map(|_| r.random_range(-64..64) as f64 / 8.0).collect();
        DataMatrix::new(n, 2, v).unwrap()
    }

    #[test]
    fn integer_weights_match_duplication() {
        for case in 0..20u64 {
            let data = grid_data(30, case);
            let mut r = SeededRng::new(100 + case).stream();
            let counts: Vec<usize> = (0..30).map(|_| r.random_range(1..4)).collect();
            let weights: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
            let dup_idx: Vec<usize> = counts
                .iter()
                .enumerate()
                .flat_map(|(i, &c)| core::iter::repeat(i).take(c))
                .collect();
            let dup = data.select_rows(&dup_idx);
            let k = 2 + (case as usize % 4);
            let cfg = KMeansConfig::new(k).with_restarts(3);
            let a = kmeans(&data, Some(&weights), &cfg, SeededRng::new(case)).unwrap();
            let b = kmeans(&dup, None, &cfg, SeededRng::new(case)).unwrap();
            assert_eq!(a.centroids, b.centroids, "case {case}");
            let expanded: Vec<usize> = dup_idx.iter().map(|&i| a.labels[i]).collect();
            assert_eq!(expanded, b.labels, "case {case}");
        }
    }

    #[test]
    fn single_restart_is_deterministic() {
        let d = grid_data(40, 7);
        let cfg = KMeansConfig::new(3).with_restarts(1);
        let a = kmeans(&d, None, &cfg, SeededRng::new(5)).unwrap();
        let b = kmeans(&d, None, &cfg, SeededRng::new(5)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn random_points_init_works() {
        let d = four_points();
        let cfg = KMeansConfig::new(2).with_init(Init::RandomPoints);
        let r = kmeans(&d, None, &cfg, SeededRng::new(3)).unwrap();
        assert!((r.wss - 0.01).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn wss_never_increases(seed in 0u64..500, k in 1usize..5) {
            let d = grid_data(25, seed);
            let mut stream = SeededRng::new(seed).stream();
            let w: Vec<f64> = (0..25).map(|_| stream.random_range(0.1..2.0)).collect();
            let init = kmeans_plus_plus(&d, Some(&w), k, &mut stream);
            let mut cfg = KMeansConfig::new(k);
            cfg.tol = 0.0;
            let mut prev = f64::INFINITY;
            for iters in 0..12 {
                cfg.max_iter = iters;
                let r = lloyd(&d, Some(&w), init.clone(), &cfg);
                prop_assert!(r.wss <= prev + 1e-12);
                prev = r.wss;
            }
        }

        #[test]
        fn result_invariants(seed in 0u64..500, k in 1usize..6) {
            let d = grid_data(30, seed);
            let r = kmeans(&d, None, &KMeansConfig::new(k).with_restarts(2), SeededRng::new(seed)).unwrap();
            let sizes = r.cluster_sizes();
            prop_assert!(sizes.iter().all(|&s| s > 0));
            let again = wss(&d, &r.labels, &r.centroids, None).unwrap();
            prop_assert!((again - r.wss).abs() <= 1e-9 * r.wss.max(1e-300));
        }

        #[test]
        fn weight_scale_invariance(seed in 0u64..200, scale_pow in -3i32..4) {
            let d = grid_data(30, seed);
            let w: Vec<f64> = (0..30).map(|i| 1.0 + (i % 3) as f64).collect();
            let scale = libm::pow(2.0, scale_pow as f64);
            let ws: Vec<f64> = w.iter().map(|v| v * scale).collect();
            let cfg = KMeansConfig::new(3).with_restarts(2);
            let a = kmeans(&d, Some(&w), &cfg, SeededRng::new(seed)).unwrap();
            let b = kmeans(&d, Some(&ws), &cfg, SeededRng::new(seed)).unwrap();
            prop_assert_eq!(a.labels, b.labels);
            prop_assert_eq!(a.centroids, b.centroids);
        }

        #[test]
        fn assign_matches_brute_force(seed in 0u64..300) {
            let d = grid_data(50, seed);
            let c = grid_data(4, seed + 10_000);
            let labels = assign_nearest(&d, &c);
            for (i, x) in d.iter_rows().enumerate() {
                let dists: Vec<f64> = c.iter_rows().map(|m| (x[0]-m[0]).powi(2) + (x[1]-m[1]).powi(2)).collect();
                let min = dists.iter().cloned().fold(f64::INFINITY, f64::min);
                let first = dists.iter().position(|&v| v == min).unwrap();
                prop_assert_eq!(labels[i], first);
            }
        }
    }
}
