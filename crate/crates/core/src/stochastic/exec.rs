use alloc::vec::Vec;

/// Runs a per-sample closure over `0..count` and returns results in index
/// order.
///
/// Implementations may evaluate in any order or in parallel, but the output
/// must be ordered by index so that downstream reductions are reproducible.
pub trait SampleExecutor {
    fn map_indexed<T, F>(&self, count: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync;
}

/// Evaluates samples one after another on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl SampleExecutor for Sequential {
    fn map_indexed<T, F>(&self, count: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync,
    {
        (0..count).map(f).collect()
    }
}

/// Pairwise (cascade) summation in a fixed tree shape.
pub fn pairwise_sum(x: &[f64]) -> f64 {
    const LEAF: usize = 8;
    if x.len() <= LEAF {
        return x.iter().sum();
    }
    let (lo, hi) = x.split_at(x.len() / 2);
    pairwise_sum(lo) + pairwise_sum(hi)
}

/// Sample mean and its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanEstimate {
    pub mean: f64,
    pub stderr: f64,
}

impl MeanEstimate {
    pub fn from_samples(x: &[f64]) -> Self {
        let n = x.len();
        if n == 0 {
            return Self {
                mean: f64::NAN,
                stderr: f64::NAN,
            };
        }
        let mean = pairwise_sum(x) / n as f64;
        if n == 1 {
            return Self { mean, stderr: 0.0 };
        }
        let dev: Vec<f64> = x.iter().map(|v| (v - mean) * (v - mean)).collect();
        let var = pairwise_sum(&dev) / (n - 1) as f64;
        Self {
            mean,
            stderr: libm::sqrt(var / n as f64),
        }
    }

    /// Fraction of `hits` among `n` trials with the binomial standard error.
    pub fn proportion(hits: usize, n: usize) -> Self {
        let p = hits as f64 / n as f64;
        Self {
            mean: p,
            stderr: libm::sqrt(p * (1.0 - p) / n as f64),
        }
    }
}
