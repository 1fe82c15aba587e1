//! Bayesian bagged clustering.
//!
//! The crate builds fuzzy cluster memberships by clustering many resampled
//! copies of a dataset and aggregating the aligned labels. Resampling uses the
//! proper Bayesian bootstrap: each replica mixes original rows with synthetic
//! points drawn from a Gaussian-mixture prior that is elicited from an initial
//! k-means run. Entropy of the resulting memberships drives the choice of the
//! number of clusters.
//!
//! Everything here is pure computation over in-memory data and works without
//! `std` (only `alloc` is needed). File formats, the command-line front end and
//! thread-pool execution live in the companion `bbc` crate.
//!
//! Module map:
//!
//! * [`matrix`], [`rng`], [`dataset`]: observation tables, seeded random
//!   substreams and the synthetic benchmark generators.
//! * [`kmeans`]: weighted Lloyd iteration with restarts.
//! * [`prior`]: Gaussian-mixture prior elicitation and sampling.
//! * [`bootstrap`]: Efron, Rubin and proper Bayesian resampling.
//! * [`ensemble`]: label alignment, BagClust1 and the BBC procedure.
//! * [`selection`]: entropy measures, K selection, silhouette and gap baselines.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod bootstrap;
pub mod dataset;
pub mod ensemble;
mod error;
pub mod exec;
pub mod kmeans;
mod linalg;
pub mod matrix;
pub mod metrics;
pub mod prior;
pub mod rng;
pub mod selection;

pub use error::{Error, Result};
pub use exec::{Executor, Sequential};
pub use matrix::DataMatrix;
pub use rng::SeededRng;
