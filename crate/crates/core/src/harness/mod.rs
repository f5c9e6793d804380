//! Experiment harness: JSON grid configs, seeded trials, a resumable CSV
//! results table, summaries, sample-size planning and the bound
//! verification suite.

mod config;
mod grid;
mod plan;
mod summary;
mod trial;
mod verify;

pub use config::{Cell, ExperimentConfig, OneOrMany, Param, Scheme};
pub use grid::{read_results, run_grid, write_results, GridOutcome, RESULTS_HEADER};
pub use plan::{plan, PlanReport};
pub use summary::{summarize, write_summary, CellSummary};
pub use trial::{run_trial, trial_seed, TrialResult};
pub use verify::verification_suite;

/// Environment variable that overrides the `--threads` flag.
pub const THREADS_ENV: &str = "SPARSE_DIST_LAB_THREADS";

/// Default Monte-Carlo trials per grid cell.
pub const DEFAULT_TRIALS: usize = 20;
