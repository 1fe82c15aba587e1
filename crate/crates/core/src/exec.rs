//! Pluggable execution of independent, index-addressed jobs.
//!
//! Replica pipelines, grid cells and gap references are all pure functions of
//! their index and a derived RNG substream, so any executor that returns the
//! results in index order yields identical output.

use alloc::vec::Vec;

pub trait Executor: Sync {
    /// Evaluates `job(0)..job(count)` and returns the results in index order.
    fn map<T, F>(&self, count: usize, job: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;
}

/// Runs every job on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map<T, F>(&self, count: usize, job: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..count).map(job).collect()
    }
}
