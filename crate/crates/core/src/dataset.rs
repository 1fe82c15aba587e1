//! Synthetic Gaussian benchmark datasets.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::linalg;
use crate::rng::{Purpose, SeededRng};
use crate::{DataMatrix, Error, Result};

/// Recipe for a Gaussian blob dataset with one covariance shared by every
/// component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub dimension: usize,
    pub component_sizes: Vec<usize>,
    /// One row per component, `dimension` entries each.
    pub centroids: Vec<Vec<f64>>,
    /// Row-major `dimension × dimension`.
    pub covariance: Vec<f64>,
}

impl DatasetSpec {
    pub fn n_clusters(&self) -> usize {
        self.component_sizes.len()
    }

    pub fn total_size(&self) -> usize {
        self.component_sizes.iter().sum()
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.dimension;
        if p == 0 {
            return Err(Error::InvalidParameter("dimension must be at least 1".into()));
        }
        if self.component_sizes.is_empty() {
            return Err(Error::InvalidParameter("at least one component is required".into()));
        }
        if let Some(j) = self.component_sizes.iter().position(|&s| s == 0) {
            return Err(Error::InvalidParameter(format!("component {j} has size 0")));
        }
        if self.centroids.len() != self.component_sizes.len() {
            return Err(Error::Shape(format!(
                "{} centroids for {} components",
                self.centroids.len(),
                self.component_sizes.len()
            )));
        }
        if let Some(j) = self.centroids.iter().position(|c| c.len() != p) {
            return Err(Error::Shape(format!("centroid {j} does not have {p} coordinates")));
        }
        if self.covariance.len() != p * p {
            return Err(Error::Shape(format!("covariance must have {} entries", p * p)));
        }
        if self
            .centroids
            .iter()
            .flatten()
            .chain(&self.covariance)
            .any(|v| !v.is_finite())
        {
            return Err(Error::InvalidParameter("non-finite parameter".into()));
        }
        linalg::check_spd(&self.covariance, p)
    }
}

/// The six benchmark recipes: three-cluster planar variants (balanced,
/// unbalanced, overlapping, correlated), five planar clusters with a central
/// one, and four clusters on alternate cube corners in three dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Benchmark {
    Ds1,
    Ds2,
    Ds3,
    Ds4,
    Ds5,
    Ds6,
}

impl Benchmark {
    pub const ALL: [Benchmark; 6] = [
        Benchmark::Ds1,
        Benchmark::Ds2,
        Benchmark::Ds3,
        Benchmark::Ds4,
        Benchmark::Ds5,
        Benchmark::Ds6,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Benchmark::Ds1 => "ds1",
            Benchmark::Ds2 => "ds2",
            Benchmark::Ds3 => "ds3",
            Benchmark::Ds4 => "ds4",
            Benchmark::Ds5 => "ds5",
            Benchmark::Ds6 => "ds6",
        }
    }

    pub fn spec(self) -> DatasetSpec {
        let h = 3.0 * libm::sqrt(3.0) / 2.0;
        let triangle = alloc::vec![
            alloc::vec![1.5, 0.0],
            alloc::vec![-1.5, 0.0],
            alloc::vec![0.0, h]
        ];
        let identity2 = alloc::vec![1.0, 0.0, 0.0, 1.0];
        match self {
            Benchmark::Ds1 => DatasetSpec {
                dimension: 2,
                component_sizes: alloc::vec![33, 33, 33],
                centroids: triangle,
                covariance: identity2,
            },
            Benchmark::Ds2 => DatasetSpec {
                dimension: 2,
                component_sizes: alloc::vec![99, 66, 33],
                centroids: triangle,
                covariance: identity2,
            },
            Benchmark::Ds3 => DatasetSpec {
                dimension: 2,
                component_sizes: alloc::vec![33, 33, 33],
                centroids: alloc::vec![
                    alloc::vec![1.0, 0.0],
                    alloc::vec![-1.0, 0.0],
                    alloc::vec![0.0, libm::sqrt(3.0)]
                ],
                covariance: identity2,
            },
            Benchmark::Ds4 => DatasetSpec {
                dimension: 2,
                component_sizes: alloc::vec![33, 33, 33],
                centroids: triangle,
                covariance: alloc::vec![1.0, 0.25, 0.25, 1.0],
            },
            Benchmark::Ds5 => DatasetSpec {
                dimension: 2,
                component_sizes: alloc::vec![66; 5],
                centroids: alloc::vec![
                    alloc::vec![3.0, 0.0],
                    alloc::vec![0.0, 3.0],
                    alloc::vec![-3.0, 0.0],
                    alloc::vec![0.0, -3.0],
                    alloc::vec![0.0, 0.0],
                ],
                covariance: alloc::vec![0.75, 0.0, 0.0, 0.75],
            },
            Benchmark::Ds6 => DatasetSpec {
                dimension: 3,
                component_sizes: alloc::vec![66; 4],
                centroids: alloc::vec![
                    alloc::vec![1.0, 1.0, 1.0],
                    alloc::vec![1.0, -1.0, -1.0],
                    alloc::vec![-1.0, 1.0, -1.0],
                    alloc::vec![-1.0, -1.0, 1.0],
                ],
                covariance: alloc::vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0],
            },
        }
    }
}

impl FromStr for Benchmark {
    type Err = String;

    fn from_str(s: &str) -> core::result::Result<Self, Self::Err> {
        Benchmark::ALL
            .into_iter()
            .find(|b| b.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown dataset '{s}', expected one of ds1..ds6"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledData {
    pub data: DataMatrix,
    pub labels: Vec<usize>,
}

/// Draws every component in order: the first `sizes[0]` rows come from
/// component 0 and so on. Component `j` uses its own substream, so adding
/// points to one component leaves the others untouched.
pub fn generate_dataset(spec: &DatasetSpec, rng: SeededRng) -> Result<LabeledData> {
    spec.validate()?;
    let p = spec.dimension;
    let chol = linalg::cholesky(&spec.covariance, p)?;
    let n = spec.total_size();
    let mut values = Vec::with_capacity(n * p);
    let mut labels = Vec::with_capacity(n);
    for (j, (&size, centroid)) in spec.component_sizes.iter().zip(&spec.centroids).enumerate() {
        let mut stream = rng.derive(Purpose::Generate, j as u64).stream();
        for _ in 0..size {
            linalg::sample_gaussian(centroid, &chol, &mut stream, &mut values);
            labels.push(j);
        }
    }
    Ok(LabeledData {
        data: DataMatrix::new(n, p, values)?,
        labels,
    })
}
