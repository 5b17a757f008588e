//! Thread-pool executor for certifier subtrees.

use rayon::prelude::*;
use woodsbound_core::certify::{Executor, Sequential, SubtreeOutcome};

/// Runs subtrees on a rayon pool of fixed size.
pub struct Parallel {
    pool: rayon::ThreadPool,
}

impl Parallel {
    pub fn new(threads: usize) -> Result<Self, rayon::ThreadPoolBuildError> {
        Ok(Self {
            pool: rayon::ThreadPoolBuilder::new()
                .num_threads(threads.max(1))
                .build()?,
        })
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl Executor for Parallel {
    fn run(
        &self,
        count: usize,
        job: &(dyn Fn(usize) -> SubtreeOutcome + Sync),
    ) -> Vec<SubtreeOutcome> {
        self.pool
            .install(|| (0..count).into_par_iter().map(job).collect())
    }
}

/// Sequential for one job, a pool otherwise.
pub fn executor(jobs: usize) -> Result<Box<dyn Executor>, rayon::ThreadPoolBuildError> {
    if jobs <= 1 {
        Ok(Box::new(Sequential))
    } else {
        Ok(Box::new(Parallel::new(jobs)?))
    }
}
