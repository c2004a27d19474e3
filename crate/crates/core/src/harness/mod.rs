//! Configuration, Monte Carlo orchestration and CSV/report output.
//!
//! Each experiment is a pure function of the configuration and its master
//! seed: trials draw from per-trial RNG streams and are reduced in trial
//! order, so the worker count never changes a table.

mod config;
mod experiments;
mod report;

pub use config::{parse_config, ScenarioConfig};
pub use experiments::{
    convergence_step, encounter, fig6_table, fig7_table, fig8_table, run_all, run_fig6, run_fig7,
    run_fig8, run_full_encounter, EncounterOutcome, Fig6Row, Fig6Table, Fig7Row, Fig7Table,
    Fig8Row, CONVERGENCE_BAND, MAX_DIVERGENCE_RATE,
};
pub use report::ExperimentReport;

use crate::error::{Error, Result};

/// Runs `f` on a dedicated pool of `workers` threads, or on the global pool
/// when `workers` is `None`.
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(0) => Err(Error::config("workers", "must be at least 1")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map(|pool| pool.install(f))
            .map_err(|e| Error::Domain(format!("cannot start worker pool: {e}"))),
    }
}
