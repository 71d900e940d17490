//! Data-parallel evaluation of independent sample points.
//!
//! With the `parallel` feature the work is spread over a rayon pool whose
//! size can be capped by `LATTICE_THREADS`. Without it, or in
//! [`ExecMode::Sequential`], the same closure runs in a plain loop. Results
//! always come back in input order.

use serde::{Deserialize, Serialize};

use crate::error::{LatticeError, Result};

pub const THREADS_ENV: &str = "LATTICE_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExecMode {
    Sequential,
    #[default]
    Parallel,
}

/// Parses a thread cap; `None` when unset.
pub fn parse_thread_cap(value: Option<&str>) -> Result<Option<usize>> {
    match value {
        None => Ok(None),
        Some(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(LatticeError::Invalid(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))),
        },
    }
}

pub fn thread_cap_from_env() -> Result<Option<usize>> {
    parse_thread_cap(std::env::var(THREADS_ENV).ok().as_deref())
}

#[derive(Debug)]
pub struct Executor {
    mode: ExecMode,
    #[cfg(feature = "parallel")]
    pool: Option<rayon::ThreadPool>,
}

impl Executor {
    pub fn sequential() -> Self {
        Self {
            mode: ExecMode::Sequential,
            #[cfg(feature = "parallel")]
            pool: None,
        }
    }

    /// An executor honouring `threads` (or the global pool when `None`).
    pub fn new(mode: ExecMode, threads: Option<usize>) -> Result<Self> {
        #[cfg(feature = "parallel")]
        {
            let pool = match (mode, threads) {
                (ExecMode::Parallel, Some(n)) => Some(
                    rayon::ThreadPoolBuilder::new()
                        .num_threads(n)
                        .build()
                        .map_err(|e| LatticeError::Invalid(format!("thread pool: {e}")))?,
                ),
                _ => None,
            };
            Ok(Self { mode, pool })
        }
        #[cfg(not(feature = "parallel"))]
        {
            let _ = threads;
            Ok(Self { mode })
        }
    }

    pub fn from_env(mode: ExecMode) -> Result<Self> {
        Self::new(mode, thread_cap_from_env()?)
    }

    /// The mode actually in effect; always sequential without the feature.
    pub fn mode(&self) -> ExecMode {
        if cfg!(feature = "parallel") {
            self.mode
        } else {
            ExecMode::Sequential
        }
    }

    pub fn map<T, R, F>(&self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.mode == ExecMode::Parallel {
            use rayon::prelude::*;
            let run = || items.par_iter().map(&f).collect();
            return match &self.pool {
                Some(pool) => pool.install(run),
                None => run(),
            };
        }
        items.iter().map(f).collect()
    }
}
