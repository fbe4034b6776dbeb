//! Fan-out width for embarrassingly parallel scans. Results must never
//! depend on the width; callers reduce with order-insensitive operations
//! or in a fixed order.

pub const THREADS_ENV: &str = "GREEDY_OPT_THREADS";

pub fn thread_cap() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
                .min(8)
        })
}
