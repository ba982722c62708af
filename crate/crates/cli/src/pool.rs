use confine_core::WorkPool;
use rayon::prelude::*;

/// Worker pool backed by a dedicated rayon thread pool.
pub struct RayonPool {
    pool: rayon::ThreadPool,
}

impl RayonPool {
    /// `threads == 0` lets rayon pick the machine's parallelism.
    pub fn new(threads: usize) -> Result<Self, rayon::ThreadPoolBuildError> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build()?;
        Ok(Self { pool })
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl WorkPool for RayonPool {
    fn map<R, F>(&self, n: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        self.pool.install(|| (0..n).into_par_iter().map(f).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use confine_core::Sequential;

    #[test]
    fn order_matches_sequential() {
        let pool = RayonPool::new(4).unwrap();
        let f = |i: usize| (i * i) as f64 / 7.0;
        assert_eq!(pool.map(100, f), Sequential.map(100, f));
    }
}
