//! Batch front end: JSON run configurations in, report bundles
//! (`report.json`, CSV tables, `summary.txt`) out.

pub mod config;
pub mod run;

pub use run::{execute, Bundle, Command, Invocation};

/// Sizes the global rayon pool from `HD_THREADS`, if set.
pub fn init_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("HD_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| anyhow::anyhow!("HD_THREADS must be a positive integer, got {v:?}"))?;
        if n == 0 {
            anyhow::bail!("HD_THREADS must be a positive integer, got 0");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}
