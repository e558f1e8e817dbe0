//! Rayon-backed [`Executor`]. Results are collected in index order, so any
//! reduction over them is the same for every worker count.

use ada_core::exec::Executor;
use rayon::prelude::*;

pub struct Pool {
    pool: Option<rayon::ThreadPool>,
}

impl Pool {
    /// `workers <= 1` runs inline on the calling thread.
    pub fn new(workers: usize) -> Result<Self, rayon::ThreadPoolBuildError> {
        let pool = if workers > 1 {
            Some(rayon::ThreadPoolBuilder::new().num_threads(workers).build()?)
        } else {
            None
        };
        Ok(Self { pool })
    }

    pub fn workers(&self) -> usize {
        self.pool.as_ref().map_or(1, |p| p.current_num_threads())
    }
}

impl Executor for Pool {
    fn map<R, F>(&self, n: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        match &self.pool {
            None => (0..n).map(f).collect(),
            Some(p) => p.install(|| (0..n).into_par_iter().map(f).collect()),
        }
    }
}
