use rayon::ThreadPool;

use crate::error::{Error, Result};

pub const THREADS_ENV: &str = "MINIMAX_STAB_THREADS";

/// Worker count from `MINIMAX_STAB_THREADS`; `0` or unset means one per core.
pub fn configured_threads() -> Result<usize> {
    match std::env::var(THREADS_ENV) {
        Ok(s) => s
            .trim()
            .parse::<usize>()
            .map_err(|_| Error::config(THREADS_ENV, format!("expected a nonnegative integer, got '{s}'"))),
        Err(_) => Ok(0),
    }
}

/// Pool sized by [`configured_threads`]. Results never depend on the size.
pub fn pool() -> Result<ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(configured_threads()?)
        .build()
        .map_err(|e| Error::Internal(format!("cannot start worker pool: {e}")))
}

/// Seed for job `k` derived from a base seed by one splitmix64 round, so
/// neighbouring jobs get unrelated streams.
pub fn derive_seed(base: u64, k: u64) -> u64 {
    let mut z = base.wrapping_add(k.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
