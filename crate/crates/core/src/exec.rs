//! Execution strategy for the data-parallel inner loops.
//!
//! Every parallel loop in the crate goes through [`Exec::map`], which always
//! returns results in index order. Reductions are then performed sequentially
//! over that ordered output, so results are bit-identical for any worker
//! count and for either strategy.
//!
//! With the `parallel` feature disabled, [`Exec::Parallel`] degrades to the
//! sequential path.

/// How to run an index-parallel map.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    Parallel,
}

impl Default for Exec {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Exec::Parallel
        } else {
            Exec::Sequential
        }
    }
}

impl Exec {
    /// Maps `f` over `0..len`, returning the results in index order.
    pub fn map<T, F>(self, len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            Exec::Sequential => (0..len).map(f).collect(),
            #[cfg(feature = "parallel")]
            Exec::Parallel => {
                use rayon::prelude::*;
                (0..len).into_par_iter().map(f).collect()
            }
            #[cfg(not(feature = "parallel"))]
            Exec::Parallel => (0..len).map(f).collect(),
        }
    }

    /// Fallible variant of [`Exec::map`]; the first error in index order wins.
    pub fn try_map<T, E, F>(self, len: usize, f: F) -> Result<Vec<T>, E>
    where
        T: Send,
        E: Send,
        F: Fn(usize) -> Result<T, E> + Sync + Send,
    {
        self.map(len, f).into_iter().collect()
    }

    /// Uses the sequential path for loops too short to amortize scheduling.
    pub fn for_len(self, len: usize, threshold: usize) -> Exec {
        if len < threshold {
            Exec::Sequential
        } else {
            self
        }
    }
}

/// Configures the global worker pool. Returns the effective worker count.
///
/// Without the `parallel` feature this is a no-op that reports one worker.
pub fn init_workers(workers: Option<usize>) -> usize {
    #[cfg(feature = "parallel")]
    {
        if let Some(k) = workers {
            // The pool can only be built once per process; later calls keep the first.
            let _ = rayon::ThreadPoolBuilder::new().num_threads(k.max(1)).build_global();
        }
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = workers;
        1
    }
}
