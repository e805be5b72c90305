//! Data-parallel execution with a sequential fallback.
//!
//! With the `parallel` feature (default) [`Execution::Parallel`] runs on the
//! rayon global pool. Without it both variants run sequentially. The
//! reductions here are partitioned into fixed-size chunks combined in index
//! order, so sequential and parallel runs produce bit-identical results.

use crate::error::Result;
use crate::stats::Moments;

/// Trials per reduction chunk. Fixed so the summation tree never depends
/// on the worker count.
pub const CHUNK: u64 = 4096;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// Whether this build can actually run work in parallel.
    pub fn parallel_available() -> bool {
        cfg!(feature = "parallel")
    }

    /// Ordered map over `0..n`.
    pub fn map<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => {
                use rayon::prelude::*;
                (0..n).into_par_iter().map(f).collect()
            }
            _ => (0..n).map(f).collect(),
        }
    }

    /// Ordered fallible map over `0..n`; returns the first error by index.
    pub fn try_map<T, F>(self, n: usize, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(usize) -> Result<T> + Sync + Send,
    {
        self.map(n, f).into_iter().collect()
    }

    /// Mean and variance of `sample(i)` over trials `0..trials`.
    pub fn moments<F>(self, trials: u64, sample: F) -> Result<Moments>
    where
        F: Fn(u64) -> Result<f64> + Sync + Send,
    {
        let chunks = trials.div_ceil(CHUNK) as usize;
        let partial = self.try_map(chunks, |c| {
            let start = c as u64 * CHUNK;
            let end = (start + CHUNK).min(trials);
            let mut m = Moments::default();
            for i in start..end {
                m.push(sample(i)?);
            }
            Ok(m)
        })?;
        Ok(partial
            .into_iter()
            .fold(Moments::default(), |acc, m| acc.merge(&m)))
    }
}
