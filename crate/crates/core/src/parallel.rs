//! The thread pool handle passed into parallel operations.
//!
//! The caller (normally the CLI) owns the pool; library code runs inside it
//! and must not spawn unmanaged workers. Every parallel kernel partitions its
//! work deterministically and reduces in a fixed order, so results are
//! bit-identical at any thread count.

pub struct Parallelism {
    pool: rayon::ThreadPool,
    threads: usize,
}

impl Parallelism {
    /// Build a pool with exactly `threads` workers; `0` means one per core.
    pub fn new(threads: usize) -> Self {
        let threads = if threads == 0 {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        } else {
            threads
        };
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .expect("thread pool construction");
        Parallelism { pool, threads }
    }

    pub fn auto() -> Self {
        Self::new(0)
    }

    pub fn threads(&self) -> usize {
        self.threads
    }

    pub fn install<R: Send>(&self, f: impl FnOnce() -> R + Send) -> R {
        self.pool.install(f)
    }
}

impl Default for Parallelism {
    fn default() -> Self {
        Self::auto()
    }
}

impl std::fmt::Debug for Parallelism {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Parallelism")
            .field("threads", &self.threads)
            .finish()
    }
}
