//! Batch runner for the `mixfrac-core` library.
//!
//! A run reads a JSON [`config::RunConfig`], executes its tasks in order and
//! writes CSV tables, JSON summaries and (optionally) SVG plots into one
//! output directory. See [`run::run`].

pub mod config;
pub mod error;
pub mod output;
pub mod plot;
pub mod run;

pub use error::CliError;
pub use run::{run, RunOptions, RunSummary};

/// Environment variable capping the worker-thread count.
pub const THREADS_ENV: &str = "MIXFRAC_THREADS";

/// Sizes the global rayon pool from [`THREADS_ENV`], if set.
pub fn init_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Threads(format!("expected a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Threads(e.to_string()))
}
