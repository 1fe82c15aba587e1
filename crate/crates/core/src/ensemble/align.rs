use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A relabelling `new label a ↦ permutation[a]` and the number of points
/// whose relabelled value matches the reference.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelAlignment {
    pub permutation: Vec<usize>,
    pub overlap: usize,
}

impl LabelAlignment {
    pub fn apply(&self, label: usize) -> usize {
        self.permutation[label]
    }
}

/// `counts[a][b]` = number of points with new label `a` and reference label `b`.
pub fn co_occurrence(reference: &[usize], labels: &[usize], k: usize) -> Result<Vec<Vec<u64>>> {
    if reference.len() != labels.len() {
        return Err(Error::Shape(alloc::format!(
            "{} reference labels vs {} labels",
            reference.len(),
            labels.len()
        )));
    }
    let mut counts = alloc::vec![alloc::vec![0u64; k]; k];
    for (i, (&r, &l)) in reference.iter().zip(labels).enumerate() {
        if r >= k {
            return Err(Error::LabelOutOfRange { index: i, label: r, k });
        }
        if l >= k {
            return Err(Error::LabelOutOfRange { index: i, label: l, k });
        }
        counts[l][r] += 1;
    }
    Ok(counts)
}

/// Permutation of `labels` with maximum agreement with `reference`.
///
/// Solved as a maximum-weight assignment on the co-occurrence matrix. Among
/// optimal permutations the lexicographically smallest one is returned.
pub fn align_labels(reference: &[usize], labels: &[usize], k: usize) -> Result<LabelAlignment> {
    let counts = co_occurrence(reference, labels, k)?;
    Ok(align_counts(&counts))
}

pub(crate) fn align_counts(counts: &[Vec<u64>]) -> LabelAlignment {
    let k = counts.len();
    if k == 0 {
        return LabelAlignment {
            permutation: Vec::new(),
            overlap: 0,
        };
    }
    let rows: Vec<usize> = (0..k).collect();
    let cols: Vec<usize> = (0..k).collect();
    let best = max_assignment(counts, &rows, &cols);

    // Fix rows one at a time to the smallest column that still admits an
    // optimal completion.
    let mut permutation = alloc::vec![usize::MAX; k];
    let mut fixed = 0u64;
    let mut free_cols = cols;
    for row in 0..k {
        let rest: Vec<usize> = (row + 1..k).collect();
        for (pos, &col) in free_cols.iter().enumerate() {
            let remaining: Vec<usize> = free_cols
                .iter()
                .enumerate()
                .filter(|&(p, _)| p != pos)
                .map(|(_, &c)| c)
                .collect();
            let value = fixed + counts[row][col] + max_assignment(counts, &rest, &remaining);
            if value == best {
                permutation[row] = col;
                fixed += counts[row][col];
                free_cols.remove(pos);
                break;
            }
        }
    }
    LabelAlignment {
        permutation,
        overlap: best as usize,
    }
}

/// Maximum total weight of a perfect matching between `rows` and `cols`
/// (equal lengths), by the Hungarian method on `max − weight` costs.
fn max_assignment(weights: &[Vec<u64>], rows: &[usize], cols: &[usize]) -> u64 {
    let n = rows.len();
    if n == 0 {
        return 0;
    }
    let top = rows
        .iter()
        .flat_map(|&r| cols.iter().map(move |&c| weights[r][c]))
        .max()
        .unwrap_or(0) as i64;
    let cost = |i: usize, j: usize| top - weights[rows[i - 1]][cols[j - 1]] as i64;

    // Potentials and matching are 1-based with a sentinel column 0.
    let inf = i64::MAX / 4;
    let mut u = alloc::vec![0i64; n + 1];
    let mut v = alloc::vec![0i64; n + 1];
    let mut matched = alloc::vec![0usize; n + 1];
    let mut way = alloc::vec![0usize; n + 1];
    for i in 1..=n {
        matched[0] = i;
        let mut j0 = 0;
        let mut min_v = alloc::vec![inf; n + 1];
        let mut used = alloc::vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = matched[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost(i0, j) - u[i0] - v[j];
                if cur < min_v[j] {
                    min_v[j] = cur;
                    way[j] = j0;
                }
                if min_v[j] < delta {
                    delta = min_v[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[matched[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_v[j] -= delta;
                }
            }
            j0 = j1;
            if matched[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            matched[j0] = matched[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    (1..=n)
        .map(|j| weights[rows[matched[j] - 1]][cols[j - 1]])
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::SeededRng;
    use rand::Rng;

    /// Exhaustive search over permutations in lexicographic order, keeping
    /// the first maximum.
    fn brute_force(reference: &[usize], labels: &[usize], k: usize) -> (Vec<usize>, usize) {
        fn rec(
            prefix: &mut Vec<usize>,
            k: usize,
            score: &dyn Fn(&[usize]) -> usize,
            best: &mut Option<(Vec<usize>, usize)>,
        ) {
            if prefix.len() == k {
                let s = score(prefix);
                if best.as_ref().map_or(true, |b| s > b.1) {
                    *best = Some((prefix.clone(), s));
                }
                return;
            }
            for c in 0..k {
                if !prefix.contains(&c) {
                    prefix.push(c);
                    rec(prefix, k, score, best);
                    prefix.pop();
                }
            }
        }
        let score = |perm: &[usize]| {
            reference
                .iter()
                .zip(labels)
                .filter(|(&r, &l)| perm[l] == r)
                .count()
        };
        let mut best = None;
        rec(&mut Vec::new(), k, &score, &mut best);
        best.unwrap()
    }

    #[test]
    fn identity_and_swap() {
        let r = [0, 0, 1, 1, 1];
        let a = align_labels(&r, &r, 2).unwrap();
        assert_eq!(a.permutation, [0, 1]);
        assert_eq!(a.overlap, 5);
        let swapped = [1, 1, 0, 0, 0];
        let a = align_labels(&r, &swapped, 2).unwrap();
        assert_eq!(a.permutation, [1, 0]);
        assert_eq!(a.overlap, 5);
    }

    #[test]
    fn missing_labels_still_give_bijection() {
        let a = align_labels(&[0, 1, 2, 2], &[1, 1, 1, 1], 3).unwrap();
        let mut p = a.permutation.clone();
        p.sort();
        assert_eq!(p, [0, 1, 2]);
        assert_eq!(a.overlap, 2);
        assert_eq!(a.permutation[1], 2);
    }

    #[test]
    fn length_mismatch() {
        assert!(matches!(align_labels(&[0, 1], &[0], 2), Err(Error::Shape(_))));
    }

    #[test]
    fn matches_exhaustive_search() {
        let mut rng = SeededRng::new(2024).stream();
        for case in 0..200 {
            let k = 2 + case % 4;
            let n = rng.random_range(1..40);
            let reference: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
            let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
            let got = align_labels(&reference, &labels, k).unwrap();
            let (perm, overlap) = brute_force(&reference, &labels, k);
            assert_eq!(got.overlap, overlap, "case {case}");
            assert_eq!(got.permutation, perm, "case {case}");
        }
    }
}
