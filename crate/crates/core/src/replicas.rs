//! Replica fan-out. Each replica gets its own [`RngStream`]; results come
//! back in replica order so reductions are reproducible regardless of the
//! number of worker threads.

use rayon::prelude::*;

use crate::model::RngStream;

pub fn run<T, F>(replicas: usize, base: RngStream, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, RngStream) -> T + Sync + Send,
{
    (0..replicas)
        .into_par_iter()
        .map(|i| f(i, base.replica(i as u64)))
        .collect()
}

/// Thread cap from `FV_LAB_THREADS`, if set to a positive integer.
pub fn thread_cap_from_env() -> Option<usize> {
    std::env::var("FV_LAB_THREADS")
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}
