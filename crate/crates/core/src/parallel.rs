//! Worker-pool selection.

use rayon::ThreadPoolBuilder;

/// Environment variable overriding the worker count (`0` = all cores).
pub const THREADS_ENV: &str = "RANDR_THREADS";

/// Worker count requested through [`THREADS_ENV`], if set and numeric.
pub fn workers_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok()
}

pub fn available_cores() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

/// Runs `f` on a dedicated rayon pool with `workers` threads (`0` = all
/// cores). Every parallel stage in this crate uses the ambient rayon pool,
/// so this bounds the whole pipeline.
pub fn with_workers<R, F>(workers: usize, f: F) -> R
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    let n = if workers == 0 { available_cores() } else { workers };
    let pool = ThreadPoolBuilder::new()
        .num_threads(n)
        .thread_name(|i| format!("randr-worker-{i}"))
        .build()
        .expect("failed to spawn worker pool");
    pool.install(f)
}
