//! Execution strategy for the data-parallel parts of the simulator.
//!
//! With the `parallel` feature (default) work items are spread over a rayon
//! pool; without it every strategy runs sequentially. Results never depend
//! on the strategy: each work item owns its random stream and outputs are
//! collected in index order.

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Rayon pool; `threads: None` uses the global pool.
    Parallel {
        threads: Option<usize>,
    },
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel { threads: None }
        } else {
            Execution::Sequential
        }
    }
}

impl Execution {
    /// `workers == 1` is sequential, anything else a pool of that size
    /// (0 meaning the default pool).
    pub fn with_workers(workers: usize) -> Self {
        match workers {
            1 => Execution::Sequential,
            0 => Execution::Parallel { threads: None },
            n => Execution::Parallel { threads: Some(n) },
        }
    }
}

/// Evaluates `f(0..n)` and returns the results in index order.
pub fn map_indexed<T, F>(exec: Execution, n: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    match exec {
        Execution::Sequential => Ok((0..n).map(f).collect()),
        Execution::Parallel { threads } => par_map(threads, n, f),
    }
}

#[cfg(feature = "parallel")]
fn par_map<T, F>(threads: Option<usize>, n: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    use rayon::prelude::*;

    match threads {
        None => Ok((0..n).into_par_iter().map(f).collect()),
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .map_err(|e| crate::error::Error::Config(format!("cannot build a {k}-thread pool: {e}")))?;
            Ok(pool.install(|| (0..n).into_par_iter().map(f).collect()))
        }
    }
}

#[cfg(not(feature = "parallel"))]
fn par_map<T, F>(_threads: Option<usize>, n: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    log::debug!("built without the `parallel` feature; running sequentially");
    Ok((0..n).map(f).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strategies_agree() {
        let f = |i: u64| i * i + 1;
        let seq = map_indexed(Execution::Sequential, 1000, f).unwrap();
        for exec in [
            Execution::Parallel { threads: None },
            Execution::Parallel { threads: Some(3) },
            Execution::with_workers(4),
        ] {
            assert_eq!(map_indexed(exec, 1000, f).unwrap(), seq);
        }
    }

    #[test]
    fn worker_mapping() {
        assert_eq!(Execution::with_workers(1), Execution::Sequential);
        assert_eq!(Execution::with_workers(0), Execution::Parallel { threads: None });
        assert_eq!(Execution::with_workers(8), Execution::Parallel { threads: Some(8) });
    }
}
