use std::num::NonZeroUsize;
use std::thread;

use optpredict_core::stochastic::SampleExecutor;

/// Environment variable that caps the number of worker threads.
pub const THREADS_ENV: &str = "OPTPREDICT_THREADS";

/// Splits the index range into contiguous chunks, one per scoped thread,
/// and concatenates the chunk results in index order.
#[derive(Debug, Clone, Copy)]
pub struct ThreadExecutor {
    threads: NonZeroUsize,
}

impl ThreadExecutor {
    pub fn new(threads: NonZeroUsize) -> Self {
        Self { threads }
    }

    /// Reads `OPTPREDICT_THREADS`, falling back to the available parallelism.
    /// Unparsable or zero values fall back as well.
    pub fn from_env() -> Self {
        let requested = std::env::var(THREADS_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .and_then(NonZeroUsize::new);
        let threads = requested
            .or_else(|| thread::available_parallelism().ok())
            .unwrap_or(NonZeroUsize::MIN);
        Self { threads }
    }

    pub fn threads(&self) -> usize {
        self.threads.get()
    }
}

impl SampleExecutor for ThreadExecutor {
    fn map_indexed<T, F>(&self, count: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync,
    {
        let workers = self.threads.get().min(count);
        if workers <= 1 {
            return (0..count).map(f).collect();
        }
        let chunk = count.div_ceil(workers);
        let f = &f;
        thread::scope(|scope| {
            let handles: Vec<_> = (0..workers)
                .map(|w| {
                    let range = (w * chunk)..((w + 1) * chunk).min(count);
                    scope.spawn(move || range.map(f).collect::<Vec<T>>())
                })
                .collect();
            handles
                .into_iter()
                .flat_map(|h| h.join().expect("sample worker panicked"))
                .collect()
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        for threads in [1, 2, 3, 7, 64] {
            let exec = ThreadExecutor::new(NonZeroUsize::new(threads).unwrap());
            let out = exec.map_indexed(23, |i| i * 10);
            assert_eq!(out, (0..23).map(|i| i * 10).collect::<Vec<_>>());
        }
        let exec = ThreadExecutor::new(NonZeroUsize::new(4).unwrap());
        assert!(exec.map_indexed(0, |i| i).is_empty());
    }
}
