//! Thread-pool implementation of the core `TaskRunner`.

use rayon::prelude::*;
use rayon::ThreadPool;
use wavespeed_core::runner::TaskRunner;

pub struct PoolRunner {
    pool: ThreadPool,
}

impl PoolRunner {
    /// `threads = 0` lets rayon pick the number of threads.
    pub fn new(threads: usize) -> anyhow::Result<Self> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build()?;
        Ok(PoolRunner { pool })
    }
}

impl TaskRunner for PoolRunner {
    fn map<T, R, F>(&self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync,
    {
        let f = &f;
        self.pool.install(|| items.par_iter().map(f).collect())
    }
}
