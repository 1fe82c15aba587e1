//! Classical validity indices for choosing K: the silhouette and the gap
//! statistic.

use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::exec::Executor;
use crate::kmeans::{kmeans, KMeansConfig};
use crate::rng::{Purpose, SeededRng};
use crate::{DataMatrix, Error, Result};

fn distance(a: &[f64], b: &[f64]) -> f64 {
    libm::sqrt(crate::matrix::squared_distance(a, b))
}

/// Mean silhouette width with Euclidean distances. Points in singleton
/// clusters score 0, as do points whose `a` and `b` both vanish.
pub fn silhouette(data: &DataMatrix, labels: &[usize]) -> Result<f64> {
    let n = data.rows();
    if labels.len() != n {
        return Err(Error::Shape(alloc::format!("{} labels for {n} rows", labels.len())));
    }
    let k = labels.iter().copied().max().map_or(0, |m| m + 1);
    if k < 2 {
        return Err(Error::InvalidParameter("silhouette needs at least two clusters".into()));
    }
    let mut sizes = alloc::vec![0usize; k];
    for &l in labels {
        sizes[l] += 1;
    }
    if let Some(j) = sizes.iter().position(|&s| s == 0) {
        return Err(Error::EmptyCluster(j));
    }
    let mut total = 0.0;
    let mut sums = alloc::vec![0.0; k];
    for i in 0..n {
        let own = labels[i];
        if sizes[own] == 1 {
            continue;
        }
        sums.iter_mut().for_each(|s| *s = 0.0);
        let xi = data.row(i);
        for j in 0..n {
            if j != i {
                sums[labels[j]] += distance(xi, data.row(j));
            }
        }
        let a = sums[own] / (sizes[own] - 1) as f64;
        let b = (0..k)
            .filter(|&c| c != own)
            .map(|c| sums[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        if denom > 0.0 {
            total += (b - a) / denom;
        }
    }
    Ok(total / n as f64)
}

/// A validity index evaluated over a range of K.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub ks: Vec<usize>,
    /// `None` where the index is undefined for that K.
    pub values: Vec<Option<f64>>,
    /// K with the largest value; smallest K on ties.
    pub best_k: Option<usize>,
}

impl Curve {
    fn new(ks: Vec<usize>, values: Vec<Option<f64>>) -> Self {
        let mut best: Option<(usize, f64)> = None;
        for (&k, v) in ks.iter().zip(&values) {
            if let Some(v) = *v {
                if best.map_or(true, |(_, b)| v > b) {
                    best = Some((k, v));
                }
            }
        }
        Self {
            ks,
            values,
            best_k: best.map(|(k, _)| k),
        }
    }

    pub fn value(&self, k: usize) -> Option<f64> {
        self.ks.iter().position(|&x| x == k).and_then(|i| self.values[i])
    }
}

fn check_range(ks: &[usize], n: usize) -> Result<()> {
    if ks.is_empty() {
        return Err(Error::InvalidParameter("empty K range".into()));
    }
    if let Some(&k) = ks.iter().find(|&&k| k < 1 || k > n) {
        return Err(Error::InvalidParameter(alloc::format!("K = {k} outside 1..={n}")));
    }
    Ok(())
}

/// Silhouette of best-of-restarts k-means for every K. K uses the substream
/// `rng.derive(Baseline, K)`.
pub fn silhouette_curve<E: Executor>(
    data: &DataMatrix,
    ks: &[usize],
    kmeans_cfg: &KMeansConfig,
    rng: SeededRng,
    exec: &E,
) -> Result<Curve> {
    check_range(ks, data.rows())?;
    let values = exec.map(ks.len(), |i| -> Result<Option<f64>> {
        let k = ks[i];
        if k < 2 {
            return Ok(None);
        }
        let cfg = KMeansConfig { k, ..kmeans_cfg.clone() };
        let fit = kmeans(data, None, &cfg, rng.derive(Purpose::Baseline, k as u64))?;
        Ok(Some(silhouette(data, &fit.labels)?))
    });
    Ok(Curve::new(ks.to_vec(), values.into_iter().collect::<Result<_>>()?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapCurve {
    pub curve: Curve,
    /// `log W_K` of the data.
    pub log_wss: Vec<Option<f64>>,
    /// Mean of `log W_K` over the reference sets.
    pub reference_log_wss: Vec<f64>,
    /// Standard deviation of the reference `log W_K`, scaled by
    /// `sqrt(1 + 1/B)`.
    pub reference_sd: Vec<f64>,
}

/// Uniform draws over the per-feature bounding box of `data`.
pub fn uniform_reference<R: Rng + ?Sized>(data: &DataMatrix, rng: &mut R) -> DataMatrix {
    let bounds = data.bounding_box();
    let mut values = Vec::with_capacity(data.rows() * data.cols());
    for _ in 0..data.rows() {
        for &(lo, hi) in &bounds {
            values.push(if hi > lo { rng.random_range(lo..hi) } else { lo });
        }
    }
    DataMatrix::new(data.rows(), data.cols(), values).expect("finite reference draws")
}

/// Gap statistic `E*[log W_K] − log W_K` with `b_ref` uniform bounding-box
/// references. K with zero WSS on the data is left undefined and cannot be
/// selected.
pub fn gap_statistic<E: Executor>(
    data: &DataMatrix,
    ks: &[usize],
    b_ref: usize,
    kmeans_cfg: &KMeansConfig,
    rng: SeededRng,
    exec: &E,
) -> Result<GapCurve> {
    if b_ref == 0 {
        return Err(Error::InvalidParameter("at least one reference set is required".into()));
    }
    let references: Vec<DataMatrix> = (0..b_ref)
        .map(|b| {
            let mut stream = rng.derive(Purpose::GapReference, b as u64).stream();
            uniform_reference(data, &mut stream)
        })
        .collect();
    gap_with_references(data, &references, ks, kmeans_cfg, rng, exec)
}

/// Gap statistic against caller-supplied reference sets.
pub fn gap_with_references<E: Executor>(
    data: &DataMatrix,
    references: &[DataMatrix],
    ks: &[usize],
    kmeans_cfg: &KMeansConfig,
    rng: SeededRng,
    exec: &E,
) -> Result<GapCurve> {
    check_range(ks, data.rows())?;
    if references.is_empty() {
        return Err(Error::InvalidParameter("at least one reference set is required".into()));
    }
    let sets = references.len() + 1;
    // Job (i, s): K = ks[i] on the data (s = 0) or on reference s − 1. Every
    // set uses the same k-means substream for a given K.
    let log_w = exec.map(ks.len() * sets, |job| -> Result<Option<f64>> {
        let (i, s) = (job / sets, job % sets);
        let set = if s == 0 { data } else { &references[s - 1] };
        let k = ks[i];
        let cfg = KMeansConfig { k, ..kmeans_cfg.clone() };
        match kmeans(set, None, &cfg, rng.derive(Purpose::Baseline, k as u64)) {
            Ok(fit) if fit.wss > 0.0 => Ok(Some(libm::log(fit.wss))),
            Ok(_) | Err(Error::TooManyClusters { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    });
    let log_w: Vec<Option<f64>> = log_w.into_iter().collect::<Result<_>>()?;

    let mut values = Vec::with_capacity(ks.len());
    let mut log_wss = Vec::with_capacity(ks.len());
    let mut reference_log_wss = Vec::with_capacity(ks.len());
    let mut reference_sd = Vec::with_capacity(ks.len());
    for i in 0..ks.len() {
        let row = &log_w[i * sets..(i + 1) * sets];
        let refs: Vec<f64> = row[1..].iter().flatten().copied().collect();
        let (mean, sd) = if refs.is_empty() {
            (f64::NAN, f64::NAN)
        } else {
            let b = refs.len() as f64;
            let mean = refs.iter().sum::<f64>() / b;
            let var = refs.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / b;
            (mean, libm::sqrt(var) * libm::sqrt(1.0 + 1.0 / b))
        };
        log_wss.push(row[0]);
        values.push(match row[0] {
            Some(lw) if mean.is_finite() => Some(mean - lw),
            _ => None,
        });
        reference_log_wss.push(mean);
        reference_sd.push(sd);
    }
    Ok(GapCurve {
        curve: Curve::new(ks.to_vec(), values),
        log_wss,
        reference_log_wss,
        reference_sd,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_dataset, Benchmark, DatasetSpec};
    use crate::Sequential;

    fn two_blobs() -> DataMatrix {
        let spec = DatasetSpec {
            dimension: 2,
            component_sizes: alloc::vec![20, 20],
            centroids: alloc::vec![alloc::vec![0.0, 0.0], alloc::vec![100.0, 0.0]],
            covariance: alloc::vec![0.01, 0.0, 0.0, 0.01],
        };
        generate_dataset(&spec, SeededRng::new(1)).unwrap().data
    }

    /// Direct transcription of the definition, O(n²) per point.
    fn silhouette_oracle(data: &DataMatrix, labels: &[usize]) -> f64 {
        let n = data.rows();
        let k = labels.iter().max().unwrap() + 1;
        let mut total = 0.0;
        for i in 0..n {
            let members = |c: usize| (0..n).filter(move |&j| labels[j] == c && j != i);
            if members(labels[i]).count() == 0 {
                continue;
            }
            let mean_to = |c: usize| {
                let d: Vec<f64> = members(c).map(|j| distance(data.row(i), data.row(j))).collect();
                d.iter().sum::<f64>() / d.len() as f64
            };
            let a = mean_to(labels[i]);
            let b = (0..k).filter(|&c| c != labels[i]).map(mean_to).fold(f64::INFINITY, f64::min);
            if a.max(b) > 0.0 {
                total += (b - a) / a.max(b);
            }
        }
        total / n as f64
    }

    #[test]
    fn separated_blobs_score_high() {
        let data = two_blobs();
        let labels: Vec<usize> = (0..40).map(|i| i / 20).collect();
        let s = silhouette(&data, &labels).unwrap();
        assert!(s > 0.9, "{s}");
    }

    #[test]
    fn identical_points_score_zero() {
        let data = DataMatrix::new(6, 2, alloc::vec![1.0; 12]).unwrap();
        assert_eq!(silhouette(&data, &[0, 0, 0, 1, 1, 1]).unwrap(), 0.0);
    }

    #[test]
    fn silhouette_errors() {
        let data = two_blobs();
        assert!(silhouette(&data, &alloc::vec![0; 40]).is_err());
        let mut labels = alloc::vec![0; 40];
        labels[0] = 2;
        assert_eq!(silhouette(&data, &labels), Err(Error::EmptyCluster(1)));
    }

    #[test]
    fn silhouette_matches_oracle() {
        let data = generate_dataset(&Benchmark::Ds3.spec(), SeededRng::new(3)).unwrap().data;
        for k in 2..6 {
            let fit = kmeans(&data, None, &KMeansConfig::new(k), SeededRng::new(k as u64)).unwrap();
            let mut labels = fit.labels.clone();
            // force a singleton cluster
            if k == 5 {
                labels = labels.iter().map(|&l| l.min(3)).collect();
                labels[0] = 4;
            }
            let a = silhouette(&data, &labels).unwrap();
            let b = silhouette_oracle(&data, &labels);
            assert!((a - b).abs() < 1e-12, "k {k}: {a} vs {b}");
        }
    }

    #[test]
    fn gap_against_self_is_zero() {
        let data = generate_dataset(&Benchmark::Ds1.spec(), SeededRng::new(5)).unwrap().data;
        let ks: Vec<usize> = (1..=5).collect();
        let refs = alloc::vec![data.clone(), data.clone()];
        let gap = gap_with_references(
            &data,
            &refs,
            &ks,
            &KMeansConfig::new(1),
            SeededRng::new(2),
            &Sequential,
        )
        .unwrap();
        for v in &gap.curve.values {
            assert_eq!(v.unwrap(), 0.0);
        }
    }

    #[test]
    fn gap_excludes_zero_wss() {
        let data = DataMatrix::from_rows(&[[0.0], [1.0], [5.0]]).unwrap();
        let gap = gap_statistic(&data, &[1, 2, 3], 5, &KMeansConfig::new(1), SeededRng::new(0), &Sequential)
            .unwrap();
        assert_eq!(gap.curve.values[2], None);
        assert_ne!(gap.curve.best_k, Some(3));
    }

    #[test]
    fn curves_are_deterministic() {
        let data = generate_dataset(&Benchmark::Ds2.spec(), SeededRng::new(8)).unwrap().data;
        let ks = [2, 3, 4];
        let cfg = KMeansConfig::new(2).with_restarts(3);
        let a = silhouette_curve(&data, &ks, &cfg, SeededRng::new(1), &Sequential).unwrap();
        let b = silhouette_curve(&data, &ks, &cfg, SeededRng::new(1), &Sequential).unwrap();
        assert_eq!(a, b);
        let a = gap_statistic(&data, &ks, 4, &cfg, SeededRng::new(1), &Sequential).unwrap();
        let b = gap_statistic(&data, &ks, 4, &cfg, SeededRng::new(1), &Sequential).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn gap_rejects_no_references() {
        let data = two_blobs();
        assert!(gap_statistic(&data, &[2], 0, &KMeansConfig::new(2), SeededRng::new(0), &Sequential).is_err());
    }
}
