//! Entropy of membership vectors, in bits.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::ensemble::MembershipMatrix;
use crate::{Error, Result};

const SUM_TOL: f64 = 1e-6;

fn plogp(p: f64) -> f64 {
    if p > 0.0 {
        -p * libm::log2(p)
    } else {
        0.0
    }
}

/// `−Σ u_k log₂ u_k`, with `0 · log 0 = 0`.
pub fn shannon_entropy(u: &[f64]) -> Result<f64> {
    if let Some(v) = u.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(Error::InvalidProbabilityVector(alloc::format!(
            "entry {v} is not a nonnegative number"
        )));
    }
    let sum: f64 = u.iter().sum();
    if (sum - 1.0).abs() > SUM_TOL {
        return Err(Error::InvalidProbabilityVector(alloc::format!(
            "entries sum to {sum}"
        )));
    }
    Ok(u.iter().map(|&p| plogp(p)).sum())
}

/// Binary entropy of `u_l / (u_l + u_m)`: how undecided a point is between
/// clusters `l` and `m` alone. Zero when both memberships vanish.
pub fn pairwise_entropy(u: &[f64], l: usize, m: usize) -> Result<f64> {
    if l == m {
        return Err(Error::InvalidParameter("pairwise entropy needs two distinct clusters".into()));
    }
    if l >= u.len() || m >= u.len() {
        return Err(Error::InvalidParameter(alloc::format!(
            "cluster pair ({l}, {m}) outside 0..{}",
            u.len()
        )));
    }
    Ok(pair_unchecked(u[l], u[m]))
}

fn pair_unchecked(a: f64, b: f64) -> f64 {
    // ordered so the value is exactly symmetric in its arguments
    let (a, b) = if a <= b { (a, b) } else { (b, a) };
    let total = a + b;
    if total <= 0.0 {
        return 0.0;
    }
    let q = a / total;
    plogp(q) + plogp(1.0 - q)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorstPair {
    pub l: usize,
    pub m: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    pub k: usize,
    /// `None` for rows that no replica contained.
    pub per_point: Vec<Option<f64>>,
    /// Mean entropy over supported rows.
    pub mean_entropy: f64,
    /// `k × k` symmetric, row-major, zero diagonal: mean pairwise entropy.
    pub pairwise_mean: Vec<f64>,
    /// Largest off-diagonal entry of `pairwise_mean`; `None` when `k = 1`.
    pub worst_pair: Option<WorstPair>,
    /// Rows excluded from the averages.
    pub unsupported: Vec<usize>,
}

impl EntropyReport {
    pub fn worst_pair_value(&self) -> f64 {
        self.worst_pair.map_or(0.0, |w| w.value)
    }

    pub fn pairwise(&self, l: usize, m: usize) -> f64 {
        self.pairwise_mean[l * self.k + m]
    }
}

pub fn entropy_report(membership: &MembershipMatrix) -> EntropyReport {
    let k = membership.k;
    let mut per_point = Vec::with_capacity(membership.rows());
    let mut unsupported = Vec::new();
    let mut total = 0.0;
    let mut pair_total = alloc::vec![0.0; k * k];
    let mut supported = 0usize;
    for i in 0..membership.rows() {
        if !membership.is_supported(i) {
            per_point.push(None);
            unsupported.push(i);
            continue;
        }
        let u = membership.row(i);
        let s: f64 = u.iter().map(|&p| plogp(p)).sum();
        per_point.push(Some(s));
        total += s;
        supported += 1;
        for l in 0..k {
            for m in l + 1..k {
                pair_total[l * k + m] += pair_unchecked(u[l], u[m]);
            }
        }
    }
    let denom = supported.max(1) as f64;
    let mut pairwise_mean = alloc::vec![0.0; k * k];
    let mut worst_pair: Option<WorstPair> = None;
    for l in 0..k {
        for m in l + 1..k {
            let v = pair_total[l * k + m] / denom;
            pairwise_mean[l * k + m] = v;
            pairwise_mean[m * k + l] = v;
            if worst_pair.map_or(true, |w| v > w.value) {
                worst_pair = Some(WorstPair { l, m, value: v });
            }
        }
    }
    EntropyReport {
        k,
        per_point,
        mean_entropy: total / denom,
        pairwise_mean,
        worst_pair,
        unsupported,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::SeededRng;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn entropy_examples() {
        assert_eq!(shannon_entropy(&[0.0, 1.0, 0.0]).unwrap(), 0.0);
        assert!((shannon_entropy(&[0.25; 4]).unwrap() - 2.0).abs() < 1e-15);
        assert!((shannon_entropy(&[0.5, 0.25, 0.25]).unwrap() - 1.5).abs() < 1e-15);
        assert!(shannon_entropy(&[-0.1, 1.1]).is_err());
        assert!(shannon_entropy(&[0.3, 0.3]).is_err());
    }

    #[test]
    fn pairwise_examples() {
        assert!((pairwise_entropy(&[0.2, 0.2, 0.6], 0, 1).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(pairwise_entropy(&[0.7, 0.0, 0.3], 0, 1).unwrap(), 0.0);
        assert_eq!(pairwise_entropy(&[0.0, 0.0, 1.0], 0, 1).unwrap(), 0.0);
        // −0.75 log₂ 0.75 − 0.25 log₂ 0.25
        let expected = 0.811_278_124_459_132_8;
        assert!((pairwise_entropy(&[0.75, 0.25], 0, 1).unwrap() - expected).abs() < 1e-12);
        assert!(pairwise_entropy(&[0.5, 0.5], 1, 1).is_err());
    }

    #[test]
    fn report_examples() {
        let one_hot =
            MembershipMatrix::from_rows(3, alloc::vec![1.0, 0.0, 0.0, 0.0, 0.0, 1.0], alloc::vec![1, 1])
                .unwrap();
        let r = entropy_report(&one_hot);
        assert_eq!(r.mean_entropy, 0.0);
        assert!(r.pairwise_mean.iter().all(|&v| v == 0.0));

        let uniform = MembershipMatrix::from_rows(4, alloc::vec![0.25; 8], alloc::vec![3, 3]).unwrap();
        let r = entropy_report(&uniform);
        assert!((r.mean_entropy - 2.0).abs() < 1e-15);
        for l in 0..4 {
            for m in 0..4 {
                let expected = if l == m { 0.0 } else { 1.0 };
                assert!((r.pairwise(l, m) - expected).abs() < 1e-15);
            }
        }

        // rows (1,0,0) and (0,.5,.5): entropies 0 and 1; pair (1,2) gives 0 and 1.
        let mixed =
            MembershipMatrix::from_rows(3, alloc::vec![1.0, 0.0, 0.0, 0.0, 0.5, 0.5], alloc::vec![1, 2])
                .unwrap();
        let r = entropy_report(&mixed);
        assert!((r.mean_entropy - 0.5).abs() < 1e-15);
        let w = r.worst_pair.unwrap();
        assert_eq!((w.l, w.m), (1, 2));
        assert!((w.value - 0.5).abs() < 1e-15);
        assert_eq!(r.pairwise(0, 1), 0.0);
    }

    #[test]
    fn unsupported_rows_are_excluded() {
        let m = MembershipMatrix::from_rows(2, alloc::vec![0.5, 0.5, 0.0, 0.0], alloc::vec![4, 0]).unwrap();
        let r = entropy_report(&m);
        assert_eq!(r.unsupported, [1]);
        assert_eq!(r.per_point, [Some(1.0), None]);
        assert_eq!(r.mean_entropy, 1.0);
    }

    fn random_simplex(seed: u64, k: usize) -> Vec<f64> {
        let mut r = SeededRng::new(seed).stream();
        // sparse vectors exercise the 0·log 0 convention
        let mut v: Vec<f64> = (0..k)
            .map(|_| if r.random_bool(0.3) { 0.0 } else { r.random::<f64>() })
            .collect();
        if v.iter().all(|&x| x == 0.0) {
            v[0] = 1.0;
        }
        let s: f64 = v.iter().sum();
        v.iter_mut().for_each(|x| *x /= s);
        v
    }

    #[test]
    fn bounds_on_random_vectors() {
        for seed in 0..10_000u64 {
            let k = 2 + (seed % 7) as usize;
            let u = random_simplex(seed, k);
            let s = shannon_entropy(&u).unwrap();
            assert!(s >= 0.0 && s <= libm::log2(k as f64) + 1e-12);
            for l in 0..k {
                for m in 0..k {
                    if l != m {
                        let p = pairwise_entropy(&u, l, m).unwrap();
                        assert!((0.0..=1.0 + 1e-12).contains(&p));
                    }
                }
            }
        }
    }

    proptest! {
        #[test]
        fn permutation_invariant(seed: u64, k in 2usize..8, shift in 0usize..8) {
            let u = random_simplex(seed, k);
            let mut rotated = u.clone();
            rotated.rotate_left(shift % k);
            let a = shannon_entropy(&u).unwrap();
            let b = shannon_entropy(&rotated).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
        }

        #[test]
        fn pairwise_symmetric(seed: u64, k in 2usize..8) {
            let u = random_simplex(seed, k);
            for l in 0..k {
                for m in 0..k {
                    if l != m {
                        prop_assert_eq!(pairwise_entropy(&u, l, m).unwrap(), pairwise_entropy(&u, m, l).unwrap());
                    }
                }
            }
        }

        #[test]
        fn two_clusters_pairwise_equals_total(seed: u64) {
            let u = random_simplex(seed, 2);
            let s = shannon_entropy(&u).unwrap();
            let p = pairwise_entropy(&u, 0, 1).unwrap();
            prop_assert!((s - p).abs() < 1e-12);
        }

        #[test]
        fn mean_is_mean_of_points(seed: u64, n in 1usize..30, k in 2usize..6) {
            let mut u = Vec::new();
            for i in 0..n {
                u.extend(random_simplex(seed.wrapping_add(i as u64), k));
            }
            let m = MembershipMatrix::from_rows(k, u, alloc::vec![1; n]).unwrap();
            let r = entropy_report(&m);
            let mean = r.per_point.iter().map(|v| v.unwrap()).sum::<f64>() / n as f64;
            prop_assert!((mean - r.mean_entropy).abs() < 1e-12);
            let w = r.worst_pair.unwrap();
            for l in 0..k {
                for m2 in l + 1..k {
                    prop_assert!(r.pairwise(l, m2) <= w.value);
                    prop_assert!((0.0..=1.0).contains(&r.pairwise(l, m2)));
                }
            }
        }
    }
}
