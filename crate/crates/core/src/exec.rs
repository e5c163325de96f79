//! Execution strategy for the data-parallel inner loops (per-scenario
//! evaluation, oracle sweeps).
//!
//! With the `parallel` feature enabled, [`Execution::Parallel`] dispatches to
//! rayon. Without it, every strategy runs on the calling thread. Results are
//! always collected in input order, so downstream reductions see the same
//! sequence regardless of the strategy.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Execution {
    Sequential,
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

impl Execution {
    /// Whether this strategy actually fans out in the current build.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }

    /// Maps `f` over `items`, returning results in input order.
    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        {
            if self == Execution::Parallel {
                return items.par_iter().map(f).collect();
            }
        }
        items.iter().map(f).collect()
    }

    /// Maps `f` over the index range `0..n`, returning results in index order.
    pub fn map_range<R, F>(self, n: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        {
            if self == Execution::Parallel {
                return (0..n).into_par_iter().map(f).collect();
            }
        }
        (0..n).map(f).collect()
    }
}
