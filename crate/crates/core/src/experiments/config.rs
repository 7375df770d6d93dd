use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::astrocyte::{AstrocytePrototype, SicSearchRanges};
use crate::chaos::ChaosMonitorConfig;
use crate::error::{Error, Result};
use crate::ising::{CouplingSpec, SweepSchedule};
use crate::plasticity::{HsdParams, StdpParams};
use crate::substrate::{CompartmentConfig, TraceParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Sync,
    GroupSync,
    Memory,
    Chaos,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Sync => "sync",
            ExperimentKind::GroupSync => "group-sync",
            ExperimentKind::Memory => "memory",
            ExperimentKind::Chaos => "chaos",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub seed: u64,
    pub dt_ms: f64,
    /// Steps between weight snapshots.
    #[serde(default = "default_log_interval")]
    pub weight_log_interval: u64,
    /// Disconnect the astrocyte (see each experiment for what that means).
    #[serde(default)]
    pub ablate_astrocyte: bool,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub sic_table: Option<SicSearchRanges>,
    #[serde(default)]
    pub sync: Option<SyncConfig>,
    #[serde(default)]
    pub group_sync: Option<GroupSyncConfig>,
    #[serde(default)]
    pub memory: Option<MemoryConfig>,
    #[serde(default)]
    pub chaos: Option<ChaosConfig>,
}

fn default_log_interval() -> u64 {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyncConfig {
    pub duration_s: f64,
    pub n_sources: usize,
    pub source_rate_hz: f64,
    pub n_post: usize,
    /// Probability of each source -> post synapse.
    pub ff_prob: f64,
    pub ff_weight: f64,
    pub post_neuron: CompartmentConfig,
    pub astro_input_weight: f64,
    pub astro_output_weight: f64,
    #[serde(default = "one")]
    pub astro_output_delay: u32,
    pub astrocyte: AstrocytePrototype,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupSyncConfig {
    pub duration_s: f64,
    pub n_inputs: usize,
    pub n_outputs: usize,
    pub input_rate_hz: f64,
    pub connect_prob: f64,
    pub connect_weight: f64,
    pub output_neuron: CompartmentConfig,
    pub astro_input_weight: f64,
    pub astro_output_weight: f64,
    pub bin_ms: f64,
    pub prototypes: Vec<AstrocytePrototype>,
    /// Astrocyte index listening to each input neuron.
    pub input_groups: Vec<usize>,
    /// Astrocyte index driving each output neuron.
    pub output_groups: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatternSetConfig {
    /// Active block indices (row-major in the 3x3 grid) of each pattern.
    pub patterns: Vec<Vec<usize>>,
    pub baseline_rate_hz: f64,
    pub active_rate_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MemoryConfig {
    pub train_s: f64,
    pub retrieval_s: f64,
    /// Index of the pattern presented during training.
    pub learned_pattern: usize,
    pub pattern_set: PatternSetConfig,
    pub stdp: StdpParams,
    pub hsd: HsdParams,
    /// Pre/post trace impulse and time constant.
    pub traces: TraceParams,
    pub reward_trace: TraceParams,
    pub initial_weight: f64,
    pub weight_exp: i32,
    pub w_min: f64,
    pub w_max: f64,
    pub memory_neuron: CompartmentConfig,
    pub astro_input_weight: f64,
    pub astro_output_weight: f64,
    #[serde(default = "one")]
    pub astro_output_delay: u32,
    pub astrocyte: AstrocytePrototype,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChaosConfig {
    pub monitor: ChaosMonitorConfig,
    pub ising: CouplingSpec,
    /// Temperature grid for classification.
    pub temperatures: Vec<f64>,
    pub classification: SweepSchedule,
    /// Skip classification and use these temperatures.
    #[serde(default)]
    pub t_ordered: Option<f64>,
    #[serde(default)]
    pub t_chaotic: Option<f64>,
    #[serde(default = "default_tick")]
    pub tick_ms: f64,
    #[serde(default = "one_usize")]
    pub sweeps_per_tick: usize,
    #[serde(default)]
    pub warmup_sweeps: usize,
    pub astrocyte: AstrocytePrototype,
    pub weight_exp: i32,
    pub initial_weight: f64,
    #[serde(default = "default_queue")]
    pub queue_capacity: usize,
    #[serde(default)]
    pub record_drive: bool,
    /// Ticks between spin snapshots written as PGM; 0 disables them.
    #[serde(default)]
    pub snapshot_interval: usize,
}

fn one() -> u32 {
    1
}
fn one_usize() -> usize {
    1
}
fn default_tick() -> f64 {
    5.0
}
fn default_queue() -> usize {
    64
}

fn positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be positive, got {x}")))
    }
}

fn probability(name: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must lie in [0, 1], got {p}")))
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    /// One of the configurations shipped with the crate.
    pub fn shipped(kind: ExperimentKind) -> Self {
        let text = match kind {
            ExperimentKind::Sync => SHIPPED_SYNC,
            ExperimentKind::GroupSync => SHIPPED_GROUP_SYNC,
            ExperimentKind::Memory => SHIPPED_MEMORY,
            ExperimentKind::Chaos => SHIPPED_CHAOS,
        };
        Self::from_toml(text).expect("shipped configs are valid")
    }

    /// SHA-256 of the canonical JSON form of the configuration.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        let digest = Sha256::digest(&json);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn sic_ranges(&self) -> SicSearchRanges {
        let mut r = self.sic_table.clone().unwrap_or_default();
        r.dt_ms = self.dt_ms;
        r
    }

    pub fn validate(&self) -> Result<()> {
        positive("dt_ms", self.dt_ms)?;
        if self.weight_log_interval == 0 {
            return Err(Error::Config("weight_log_interval must be positive".into()));
        }
        if let Some(r) = &self.sic_table {
            r.validate()?;
        }
        let missing = |s: &str| Error::Config(format!("experiment {} needs a [{s}] section", self.experiment.name()));
        match self.experiment {
            ExperimentKind::Sync => self.sync.as_ref().ok_or_else(|| missing("sync"))?.validate(),
            ExperimentKind::GroupSync => self
                .group_sync
                .as_ref()
                .ok_or_else(|| missing("group_sync"))?
                .validate(),
            ExperimentKind::Memory => self.memory.as_ref().ok_or_else(|| missing("memory"))?.validate(),
            ExperimentKind::Chaos => self.chaos.as_ref().ok_or_else(|| missing("chaos"))?.validate(self.dt_ms),
        }
    }
}

impl SyncConfig {
    pub fn validate(&self) -> Result<()> {
        positive("duration_s", self.duration_s)?;
        positive("source_rate_hz", self.source_rate_hz)?;
        probability("ff_prob", self.ff_prob)?;
        if self.n_sources == 0 || self.n_post == 0 {
            return Err(Error::Config("sync needs sources and postsynaptic neurons".into()));
        }
        if self.astro_output_delay == 0 {
            return Err(Error::Config("astro_output_delay must be at least 1".into()));
        }
        self.post_neuron.validate()?;
        self.astrocyte.validate()
    }
}

impl GroupSyncConfig {
    pub fn validate(&self) -> Result<()> {
        positive("duration_s", self.duration_s)?;
        positive("bin_ms", self.bin_ms)?;
        positive("input_rate_hz", self.input_rate_hz)?;
        probability("connect_prob", self.connect_prob)?;
        self.output_neuron.validate()?;
        if self.prototypes.is_empty() {
            return Err(Error::Config("group-sync needs at least one astrocyte prototype".into()));
        }
        for p in &self.prototypes {
            p.validate()?;
        }
        let n = self.prototypes.len();
        if self.input_groups.len() != self.n_inputs || self.output_groups.len() != self.n_outputs {
            return Err(Error::Config("group vectors must match neuron counts".into()));
        }
        if self.input_groups.iter().chain(&self.output_groups).any(|&g| g >= n) {
            return Err(Error::Config("group index exceeds astrocyte count".into()));
        }
        Ok(())
    }
}

impl MemoryConfig {
    pub fn validate(&self) -> Result<()> {
        positive("train_s", self.train_s)?;
        positive("retrieval_s", self.retrieval_s)?;
        self.stdp.validate()?;
        self.hsd.validate()?;
        self.memory_neuron.validate()?;
        self.astrocyte.validate()?;
        if !(self.w_min < self.w_max) {
            return Err(Error::Config("w_min must be below w_max".into()));
        }
        if self.astro_output_delay == 0 {
            return Err(Error::Config("astro_output_delay must be at least 1".into()));
        }
        let set = PatternSet::from_config(&self.pattern_set)?;
        if self.learned_pattern >= set.patterns.len() {
            return Err(Error::Config("learned_pattern out of range".into()));
        }
        Ok(())
    }
}

impl ChaosConfig {
    pub fn validate(&self, dt_ms: f64) -> Result<()> {
        self.monitor.validate()?;
        self.ising.validate()?;
        positive("tick_ms", self.tick_ms)?;
        let ratio = self.tick_ms / dt_ms;
        if (ratio - ratio.round()).abs() > 1e-9 || ratio.round() < 1.0 {
            return Err(Error::Config("tick_ms must be a positive multiple of dt_ms".into()));
        }
        if self.ising.size < crate::ising::SHEET_SIDE {
            return Err(Error::Config("Ising lattice side must be at least 42".into()));
        }
        if self.monitor.n_inputs != crate::ising::SHEET_SIDE * crate::ising::SHEET_SIDE {
            return Err(Error::Config("chaos monitor must listen to 1764 inputs".into()));
        }
        if self.sweeps_per_tick == 0 || self.queue_capacity == 0 {
            return Err(Error::Config("sweeps_per_tick and queue_capacity must be positive".into()));
        }
        match (self.t_ordered, self.t_chaotic) {
            (Some(a), Some(b)) => {
                positive("t_ordered", a)?;
                positive("t_chaotic", b)?;
            }
            (None, None) => {
                if self.temperatures.len() < 3 {
                    return Err(Error::Config("temperature grid needs at least 3 points".into()));
                }
                if self.temperatures.iter().any(|&t| !(t > 0.0)) {
                    return Err(Error::Config("grid temperatures must be positive".into()));
                }
            }
            _ => return Err(Error::Config("set both t_ordered and t_chaotic or neither".into())),
        }
        self.astrocyte.validate()
    }

    pub fn steps_per_tick(&self, dt_ms: f64) -> usize {
        (self.tick_ms / dt_ms).round() as usize
    }

    /// Ticks in the training phase and in each test phase.
    pub fn phase_ticks(&self) -> (usize, usize) {
        let ticks = |s: f64| (s * 1000.0 / self.tick_ms).round() as usize;
        (ticks(self.monitor.train_duration_s), ticks(self.monitor.test_duration_s))
    }
}

/// Five (or more) binary 3x3 input grids.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternSet {
    pub patterns: Vec<[bool; 9]>,
    pub baseline_rate_hz: f64,
    pub active_rate_hz: f64,
}

impl PatternSet {
    /// Validate and build: every grid has exactly three active blocks and
    /// every pair of grids shares exactly one.
    pub fn from_config(c: &PatternSetConfig) -> Result<Self> {
        positive("active_rate_hz", c.active_rate_hz)?;
        if !(c.baseline_rate_hz >= 0.0 && c.baseline_rate_hz < c.active_rate_hz) {
            return Err(Error::Config("baseline rate must be non-negative and below the active rate".into()));
        }
        if c.patterns.len() != 5 {
            return Err(Error::Config(format!("expected 5 patterns, got {}", c.patterns.len())));
        }
        let mut grids = Vec::new();
        for (k, p) in c.patterns.iter().enumerate() {
            let mut g = [false; 9];
            for &b in p {
                if b >= 9 || g[b] {
                    return Err(Error::Config(format!("pattern {k} has an invalid or repeated block {b}")));
                }
                g[b] = true;
            }
            if p.len() != 3 {
                return Err(Error::Config(format!("pattern {k} has {} active blocks, expected 3", p.len())));
            }
            grids.push(g);
        }
        for i in 0..grids.len() {
            for j in i + 1..grids.len() {
                let overlap = (0..9).filter(|&b| grids[i][b] && grids[j][b]).count();
                if overlap != 1 {
                    return Err(Error::Config(format!(
                        "patterns {i} and {j} overlap in {overlap} blocks, expected 1"
                    )));
                }
            }
        }
        Ok(Self {
            patterns: grids,
            baseline_rate_hz: c.baseline_rate_hz,
            active_rate_hz: c.active_rate_hz,
        })
    }

    pub fn rates(&self, pattern: usize) -> [f64; 9] {
        let mut r = [self.baseline_rate_hz; 9];
        for (b, &on) in self.patterns[pattern].iter().enumerate() {
            if on {
                r[b] = self.active_rate_hz;
            }
        }
        r
    }
}

pub const SHIPPED_SYNC: &str = include_str!("../../configs/sync.toml");
pub const SHIPPED_GROUP_SYNC: &str = include_str!("../../configs/group-sync.toml");
pub const SHIPPED_MEMORY: &str = include_str!("../../configs/memory.toml");
pub const SHIPPED_CHAOS: &str = include_str!("../../configs/chaos.toml");
