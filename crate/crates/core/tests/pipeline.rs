use std::sync::Mutex;

use bbc_core::dataset::{generate_dataset, Benchmark};
use bbc_core::ensemble::{bagclust1, bbc, BbcConfig};
use bbc_core::kmeans::KMeansConfig;
use bbc_core::metrics::aligned_contingency;
use bbc_core::selection::{select_k, SelectKConfig};
use bbc_core::{Executor, SeededRng, Sequential};

/// Runs jobs back to front, then restores index order.
struct Reversed;

impl Executor for Reversed {
    fn map<T, F>(&self, count: usize, job: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        let out = Mutex::new(Vec::with_capacity(count));
        for i in (0..count).rev() {
            let v = job(i);
            out.lock().unwrap().push((i, v));
        }
        let mut out = out.into_inner().unwrap();
        out.sort_by_key(|(i, _)| *i);
        out.into_iter().map(|(_, v)| v).collect()
    }
}

#[test]
fn schedule_does_not_change_results() {
    let data = generate_dataset(&Benchmark::Ds2.spec(), SeededRng::new(1)).unwrap().data;
    let cfg = BbcConfig { replicas: 20, ..BbcConfig::new(3) };
    let a = bbc(&data, &cfg, SeededRng::new(2), &Sequential).unwrap();
    let b = bbc(&data, &cfg, SeededRng::new(2), &Reversed).unwrap();
    assert_eq!(a, b);

    let sk = SelectKConfig { k_values: vec![2, 3, 4], s_values: vec![1.0, 10.0], replicas: 10, gap_references: 5, ..Default::default() };
    let a = select_k(&data, &sk, SeededRng::new(3), &Sequential).unwrap();
    let b = select_k(&data, &sk, SeededRng::new(3), &Reversed).unwrap();
    assert_eq!(a, b);
}

#[test]
fn benchmarks_have_declared_shapes() {
    for (bench, n, p, k) in [
        (Benchmark::Ds1, 99, 2, 3),
        (Benchmark::Ds5, 330, 2, 5),
        (Benchmark::Ds6, 264, 3, 4),
    ] {
        let spec = bench.spec();
        let g = generate_dataset(&spec, SeededRng::new(0)).unwrap();
        assert_eq!((g.data.rows(), g.data.cols()), (n, p));
        for (j, size) in spec.component_sizes.iter().enumerate() {
            assert_eq!(g.labels.iter().filter(|&&l| l == j).count(), *size);
        }
        assert_eq!(spec.n_clusters(), k);
    }
}

#[test]
fn benchmark_clusters_are_mostly_recovered() {
    let g = generate_dataset(&Benchmark::Ds4.spec(), SeededRng::new(6)).unwrap();
    let k = Benchmark::Ds4.spec().n_clusters();
    let bag = bagclust1(&g.data, 30, &KMeansConfig::new(k), SeededRng::new(7), &Sequential).unwrap();
    let c = aligned_contingency(&g.labels, &bag.membership.final_labels, k).unwrap();
    assert!(c.misassigned() * 5 < g.data.rows(), "{c:?}");

    let res = bbc(&g.data, &BbcConfig { replicas: 30, ..BbcConfig::new(k) }, SeededRng::new(8), &Sequential).unwrap();
    assert_eq!(res.skipped_replicas(), 0);
    assert!(res.synthetic_points() > 0);
}
