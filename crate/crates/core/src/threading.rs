//! Worker-pool sizing from the NEMVIS_THREADS environment variable.

/// Initialize the global worker pool from NEMVIS_THREADS (0 or unset means
/// automatic sizing). Safe to call repeatedly; only the first call takes
/// effect.
pub fn init_from_env() {
    let threads = std::env::var("NEMVIS_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .unwrap_or(0);
    if threads > 0 {
        // an AlreadyInitialized error means a pool exists; keep it
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
}
