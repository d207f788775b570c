//! Experiment harness: dataset ingestion, seeded trial sweeps, summaries and
//! result files.

pub mod data;
pub mod emit;
pub mod summary;
pub mod trials;

pub use data::{load_dataset, DataSource, DEFAULT_DOMAIN_SIZE};
pub use emit::{emit, emit_plots, emit_summaries, read_trials, TRIALS_HEADER};
pub use summary::{format_table, summarize, CellSummary};
pub use trials::{run_sweep, run_trials, trial_seed, SweepSpec, TrialRecord, DEFAULT_EPS_GRID, TECHNIQUE};
