//! Order-preserving execution of independent jobs.

/// Runs a batch of independent jobs and returns their results in input order.
///
/// With the `parallel` feature and more than one thread the jobs run on a
/// dedicated rayon pool; otherwise they run in sequence on the calling thread.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Executor {
    threads: usize,
}

impl Default for Executor {
    fn default() -> Self {
        Executor::with_threads(
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1),
        )
    }
}

impl Executor {
    pub fn sequential() -> Self {
        Executor { threads: 1 }
    }

    /// `n = 0` is treated as 1.
    pub fn with_threads(n: usize) -> Self {
        Executor { threads: n.max(1) }
    }

    pub fn threads(&self) -> usize {
        self.threads
    }

    pub fn map<T, U, F>(&self, items: Vec<T>, f: F) -> Vec<U>
    where
        T: Send,
        U: Send,
        F: Fn(T) -> U + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.threads > 1 {
            use rayon::prelude::*;
            if let Ok(pool) = rayon::ThreadPoolBuilder::new()
                .num_threads(self.threads)
                .build()
            {
                return pool.install(|| items.into_par_iter().map(&f).collect());
            }
        }
        items.into_iter().map(f).collect()
    }
}
