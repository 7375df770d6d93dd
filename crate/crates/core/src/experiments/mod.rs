//! End-to-end experiments driven by TOML configuration files.

mod chaos_run;
mod common;
mod config;
mod group_sync;
mod memory;
mod output;
mod sync;

use std::path::PathBuf;

use crate::astrocyte::build_sic_table;
use crate::error::Result;

pub use chaos_run::{load_drive, run_chaos};
pub use common::{burst_after, burst_amplitude_hz, burst_window_ms, fraction_active};
pub use config::{
    ChaosConfig, ExperimentConfig, ExperimentKind, GroupSyncConfig, MemoryConfig, PatternSet, PatternSetConfig,
    SyncConfig, SHIPPED_CHAOS, SHIPPED_GROUP_SYNC, SHIPPED_MEMORY, SHIPPED_SYNC,
};
pub use group_sync::{bin_activity, coincidence_scores, cosine, run_group_sync, GroupScore};
pub use memory::{run_memory, runs_bit_identical, simulate_memory, MemoryMode, MemoryRun};
pub use output::{
    bars_svg, emit_outputs, raster_svg, read_spikes_csv, spikes_csv, weights_csv, weights_svg, Provenance,
    RunOutput, RunRecord, SummaryReport, WeightSample,
};
pub use sync::{run_sync, synchrony, Synchrony};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Cap on worker threads for table generation.
    pub threads: Option<usize>,
    /// Recorded drive replacing the Ising stream (chaos only).
    pub replay: Option<PathBuf>,
}

/// Build the SIC table for `cfg` and run the configured experiment.
pub fn run_experiment(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunOutput> {
    cfg.validate()?;
    let table = build_sic_table(&cfg.sic_ranges(), opts.threads)?;
    match cfg.experiment {
        ExperimentKind::Sync => run_sync(cfg, &table),
        ExperimentKind::GroupSync => run_group_sync(cfg, &table),
        ExperimentKind::Memory => run_memory(cfg, &table),
        ExperimentKind::Chaos => run_chaos(cfg, &table, opts.replay.as_deref()),
    }
}
