//! Execution policy for the embarrassingly parallel loops (chains,
//! replicates, grid cells).
//!
//! With the `parallel` feature the work is spread over the current rayon
//! pool; without it, or with [`Execution::Sequential`], the same closure runs
//! in a plain loop. Results always come back in index order, so output does
//! not depend on the policy or the thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// Whether this policy actually runs in parallel in this build.
    pub fn is_parallel(&self) -> bool {
        cfg!(feature = "parallel") && *self == Execution::Parallel
    }
}

/// `(0..len).map(f).collect()`, possibly in parallel.
pub fn map_indexed<T, F>(policy: Execution, len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if policy.is_parallel() {
            return (0..len).into_par_iter().map(f).collect();
        }
    }
    let _ = policy;
    (0..len).map(f).collect()
}

/// SplitMix64 finaliser; used to derive independent stream seeds from a
/// base seed and a counter.
pub fn mix_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
