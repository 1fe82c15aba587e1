use super::*;
use crate::dataset::{generate_dataset, DatasetSpec};
use crate::Sequential;
use proptest::prelude::*;

fn blobs(per_blob: usize, seed: u64) -> (DataMatrix, Vec<usize>) {
    let spec = DatasetSpec {
        dimension: 2,
        component_sizes: alloc::vec![per_blob, per_blob],
        centroids: alloc::vec![alloc::vec![0.0, 0.0], alloc::vec![50.0, 50.0]],
        covariance: alloc::vec![0.01, 0.0, 0.0, 0.01],
    };
    let d = generate_dataset(&spec, SeededRng::new(seed)).unwrap();
    (d.data, d.labels)
}

fn assert_probability_rows(m: &MembershipMatrix) {
    for i in 0..m.rows() {
        if m.is_supported(i) {
            let row = m.row(i);
            assert!(row.iter().all(|v| (0.0..=1.0).contains(v)));
            assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        }
    }
}

#[test]
fn bagclust1_full_resample_is_one_hot() {
    let (data, _) = blobs(10, 1);
    let cfg = KMeansConfig::new(2);
    let reference = kmeans(&data, None, &cfg, SeededRng::new(0)).unwrap();
    let counts = alloc::vec![alloc::vec![1u32; data.rows()]];
    let res =
        bagclust1_with_counts(&data, reference.clone(), &counts, &cfg, SeededRng::new(3), &Sequential)
            .unwrap();
    assert_eq!(res.membership.final_labels, reference.labels);
    for i in 0..data.rows() {
        let row = res.membership.row(i);
        assert_eq!(row.iter().filter(|&&v| v == 1.0).count(), 1);
        assert_eq!(res.membership.support_counts[i], 1);
    }
}

#[test]
fn bagclust1_separated_blobs() {
    let (data, truth) = blobs(25, 2);
    let res = bagclust1(&data, 50, &KMeansConfig::new(2), SeededRng::new(4), &Sequential).unwrap();
    assert_probability_rows(&res.membership);
    let m = &res.membership;
    for i in 0..data.rows() {
        assert!(m.support_counts[i] > 0);
        let own = m.final_labels[i];
        assert!(m.row(i)[own] >= 0.99);
        // same blob, same label
        let partner = if truth[i] == 0 { 0 } else { 25 };
        assert_eq!(own, m.final_labels[partner]);
    }
}

#[test]
fn bbc_omega_zero_has_no_synthetic_points() {
    let (data, _) = blobs(20, 5);
    let mut cfg = BbcConfig::new(2);
    cfg.omega = 0.0;
    cfg.scale = 37.0;
    cfg.replicas = 30;
    let res = bbc(&data, &cfg, SeededRng::new(6), &Sequential).unwrap();
    assert_eq!(res.synthetic_points(), 0);
    assert_eq!(res.skipped_replicas(), 0);
    assert_probability_rows(&res.membership);
}

#[test]
fn bbc_identical_points_single_cluster() {
    let data = DataMatrix::new(12, 2, alloc::vec![3.0; 24]).unwrap();
    let mut cfg = BbcConfig::new(1);
    cfg.replicas = 20;
    let res = bbc(&data, &cfg, SeededRng::new(1), &Sequential).unwrap();
    for i in 0..12 {
        if res.membership.is_supported(i) {
            assert_eq!(res.membership.row(i), [1.0]);
        }
    }
}

#[test]
fn bbc_separated_blobs_are_crisp() {
    let (data, _) = blobs(20, 8);
    let mut cfg = BbcConfig::new(2);
    cfg.replicas = 40;
    let res = bbc(&data, &cfg, SeededRng::new(2), &Sequential).unwrap();
    assert_probability_rows(&res.membership);
    assert_eq!(res.membership.final_labels, res.reference.labels);
    for i in 0..data.rows() {
        if res.membership.is_supported(i) {
            assert_eq!(res.membership.row(i)[res.membership.final_labels[i]], 1.0);
        }
    }
}

#[test]
fn bbc_prefix_of_replicas_reproduces_shorter_run() {
    let (data, _) = blobs(15, 3);
    let mut cfg = BbcConfig::new(3);
    cfg.replicas = 25;
    let long = BbcPlan::new(&data, &cfg, SeededRng::new(9)).unwrap();
    let short = long.run(10, &Sequential).unwrap();
    cfg.replicas = 10;
    let direct = bbc(&data, &cfg, SeededRng::new(9), &Sequential).unwrap();
    assert_eq!(short.membership, direct.membership);
    assert_eq!(short.diagnostics, direct.diagnostics);
}

#[test]
fn bbc_rejects_bad_parameters() {
    let (data, _) = blobs(5, 3);
    let mut cfg = BbcConfig::new(2);
    cfg.omega = 1.0;
    assert!(bbc(&data, &cfg, SeededRng::new(0), &Sequential).is_err());
    cfg.omega = 0.5;
    cfg.scale = 0.0;
    assert!(bbc(&data, &cfg, SeededRng::new(0), &Sequential).is_err());
    let cfg = BbcConfig::new(11);
    assert!(bbc(&data, &cfg, SeededRng::new(0), &Sequential).is_err());
}

#[test]
fn uniform_weighting_runs() {
    let (data, _) = blobs(10, 4);
    let mut cfg = BbcConfig::new(2);
    cfg.replicas = 10;
    cfg.weighting = ReplicaWeighting::Uniform;
    let res = bbc(&data, &cfg, SeededRng::new(0), &Sequential).unwrap();
    assert_probability_rows(&res.membership);
}

#[test]
fn tally_merge_is_order_independent() {
    let mut a = VoteTally::new(3, 2);
    a.record(0, 1);
    a.record(2, 0);
    let mut b = VoteTally::new(3, 2);
    b.record(0, 0);
    let mut ab = a.clone();
    ab.merge(&b);
    let mut ba = b.clone();
    ba.merge(&a);
    assert_eq!(ab, ba);
    let m = ab.into_membership();
    assert_eq!(m.row(0), [0.5, 0.5]);
    assert!(m.ties[0]);
    assert_eq!(m.final_labels[0], 0);
    assert_eq!(m.support_counts, [2, 0, 1]);
}

#[test]
fn membership_from_rows_validates() {
    assert!(MembershipMatrix::from_rows(2, alloc::vec![0.5, 0.5, 0.2, 0.2], alloc::vec![1, 1]).is_err());
    assert!(MembershipMatrix::from_rows(2, alloc::vec![0.5, 0.5, 0.0, 0.0], alloc::vec![1, 0]).is_ok());
}

fn shuffled(data: &DataMatrix, seed: u64) -> (DataMatrix, Vec<usize>) {
    use rand::seq::SliceRandom;
    let mut perm: Vec<usize> = (0..data.rows()).collect();
    perm.shuffle(&mut SeededRng::new(seed).stream());
    let d = data.select_rows(&perm).with_row_ids(perm.clone()).unwrap();
    (d, perm)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn bbc_is_row_order_invariant(seed in 0u64..1000) {
        let spec = crate::dataset::Benchmark::Ds3.spec();
        let data = generate_dataset(&spec, SeededRng::new(seed)).unwrap().data;
        let mut cfg = BbcConfig::new(3);
        cfg.replicas = 8;
        cfg.kmeans.n_restarts = 3;
        let base = bbc(&data, &cfg, SeededRng::new(seed), &Sequential).unwrap();
        let (shuffled_data, perm) = shuffled(&data, seed + 1);
        let moved = bbc(&shuffled_data, &cfg, SeededRng::new(seed), &Sequential).unwrap();
        // position `pos` of the shuffled data holds original row `perm[pos]`
        prop_assert_eq!(moved.membership.clone(), base.membership.reorder(&perm));
        let expected: Vec<usize> = perm.iter().map(|&i| base.reference.labels[i]).collect();
        prop_assert_eq!(moved.reference.labels, expected);
    }

    #[test]
    fn alignment_never_loses_overlap(seed: u64, k in 2usize..6) {
        use rand::Rng;
        let mut r = SeededRng::new(seed).stream();
        let reference: Vec<usize> = (0..60).map(|_| r.random_range(0..k)).collect();
        let labels: Vec<usize> = (0..60).map(|_| r.random_range(0..k)).collect();
        let raw = reference.iter().zip(&labels).filter(|(a, b)| a == b).count();
        let aligned = align_labels(&reference, &labels, k).unwrap();
        prop_assert!(aligned.overlap >= raw);
    }
}
