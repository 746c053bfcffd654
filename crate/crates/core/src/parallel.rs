//! Thread-count control. Every parallel kernel in the crate produces
//! bit-identical output regardless of how many threads run it.

use rayon::ThreadPoolBuilder;

/// Environment variable capping worker threads.
pub const THREADS_ENV: &str = "HOGKIT_THREADS";

/// Reads `HOGKIT_THREADS`; unset, empty, zero or unparsable means no cap.
pub fn threads_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

/// Runs `f` inside a dedicated pool of `threads` workers, or on the global
/// pool when `threads` is `None`.
pub fn with_threads<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    match threads {
        Some(n) => match ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        },
        None => f(),
    }
}
