//! Shared worker pool.
//!
//! All parallel sections (per-sample analysis, multi-start steering,
//! reachable-set sampling) run on one cached rayon pool whose size is
//! controlled by the `LIEREACH_THREADS` environment variable; unset or
//! unparsable values fall back to rayon's default. Work items are indexed
//! and collected in order, so results never depend on the thread count.

use std::sync::OnceLock;

/// Environment variable that caps the worker count.
pub const THREADS_ENV: &str = "LIEREACH_THREADS";

static POOL: OnceLock<rayon::ThreadPool> = OnceLock::new();

/// Worker count requested via the environment, if any.
pub fn configured_threads() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n >= 1)
}

/// The shared pool, built on first use.
pub fn pool() -> &'static rayon::ThreadPool {
    POOL.get_or_init(|| {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(n) = configured_threads() {
            builder = builder.num_threads(n);
        }
        builder
            .thread_name(|i| format!("liereach-worker-{i}"))
            .build()
            .expect("worker pool construction cannot fail with a valid size")
    })
}
