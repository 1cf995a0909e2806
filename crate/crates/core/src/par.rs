//! Index-parallel map with an ordered result.
//!
//! Work is partitioned by realization index only. Results always come back in
//! index order, so reductions are deterministic whichever path runs. Without the
//! `parallel` feature everything runs on the calling thread.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
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

pub fn map_indices<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    map_indices_with(Execution::default(), n, f)
}

pub fn map_indices_with<R, F>(exec: Execution, n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    match exec {
        Execution::Sequential => (0..n).map(f).collect(),
        Execution::Parallel => parallel::map(n, f),
    }
}

#[cfg(feature = "parallel")]
mod parallel {
    use rayon::prelude::*;

    pub fn map<R, F>(n: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        (0..n).into_par_iter().map(f).collect()
    }
}

#[cfg(not(feature = "parallel"))]
mod parallel {
    pub fn map<R, F>(n: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        (0..n).map(f).collect()
    }
}

/// Collects a `Vec<Result<T, E>>` keeping the first error in index order.
pub fn collect_ordered<T, E>(items: Vec<Result<T, E>>) -> Result<Vec<T>, E> {
    items.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_paths_agree_and_keep_order() {
        let f = |i: usize| (i * i) as u64;
        let a = map_indices_with(Execution::Sequential, 1000, f);
        let b = map_indices_with(Execution::Parallel, 1000, f);
        assert_eq!(a, b);
        assert_eq!(a[31], 961);
    }
}
