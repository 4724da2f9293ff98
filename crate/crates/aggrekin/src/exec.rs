//! Fan-out helper for the embarrassingly parallel batch drivers.
//!
//! With the default `parallel` feature the work items run on a rayon pool
//! and results are merged by index, so output ordering never depends on
//! scheduling. Without the feature everything degrades to plain sequential
//! iteration. `AGGREKIN_THREADS` caps the pool size at runtime.

/// Worker cap from the `AGGREKIN_THREADS` environment variable, if set to a
/// positive integer.
pub fn thread_cap() -> Option<usize> {
    std::env::var("AGGREKIN_THREADS").ok().and_then(|v| v.parse::<usize>().ok()).filter(|&n| n > 0)
}

/// Run `f` on a pool with exactly `threads` workers (0 = library default).
#[cfg(feature = "parallel")]
pub fn with_threads<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> R {
    if threads == 0 {
        return f();
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("rayon pool construction cannot fail for positive thread counts")
        .install(f)
}

#[cfg(not(feature = "parallel"))]
pub fn with_threads<R: Send>(_threads: usize, f: impl FnOnce() -> R + Send) -> R {
    f()
}

/// Run `f` under the `AGGREKIN_THREADS` cap (or the default pool).
pub fn run<R: Send>(f: impl FnOnce() -> R + Send) -> R {
    with_threads(thread_cap().unwrap_or(0), f)
}

/// Map `f` over `items`, in parallel when available, preserving order.
#[cfg(feature = "parallel")]
pub fn map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    items.iter().map(f).collect()
}
