//! Precomputed map from low-level SIC parameters to the burst they produce.
//!
//! The table is built by brute force: every (IP3->SIC weight, SIC current
//! decay, SG threshold) triple is simulated for a single IP3 spike and the
//! resulting SG burst is measured. Configurations that produce no SG spike
//! are dropped. Lookup returns the row whose measured (amplitude, window) is
//! closest to a target under squared Euclidean distance.

use std::cmp::Ordering;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::instance::{sg_compartment, sic_compartment, SicGenerator};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SicConfigRow {
    pub ip3_to_sic_weight: i32,
    pub sic_current_decay: i32,
    pub sg_threshold: i32,
    #[serde(rename = "measured_amplitude_hz")]
    pub measured_amplitude: f64,
    #[serde(rename = "measured_window_ms")]
    pub measured_window: f64,
}

impl SicConfigRow {
    pub fn triple(&self) -> (i32, i32, i32) {
        (self.ip3_to_sic_weight, self.sic_current_decay, self.sg_threshold)
    }

    pub fn cost(&self, target_amplitude: f64, target_window: f64) -> f64 {
        let da = target_amplitude - self.measured_amplitude;
        let dw = target_window - self.measured_window;
        da * da + dw * dw
    }
}

/// Parameter grid searched by [`build_sic_table`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SicSearchRanges {
    pub weights: Vec<i32>,
    pub decays: Vec<i32>,
    pub thresholds: Vec<i32>,
    #[serde(default = "default_dt")]
    pub dt_ms: f64,
}

fn default_dt() -> f64 {
    1.0
}

impl Default for SicSearchRanges {
    fn default() -> Self {
        Self {
            weights: (0..=10).map(|p| 1 << p).collect(),
            decays: (1..=64).map(|k| 64 * k).collect(),
            thresholds: (4..=10).map(|p| 1 << p).collect(),
            dt_ms: 1.0,
        }
    }
}

impl SicSearchRanges {
    pub fn validate(&self) -> Result<()> {
        if self.weights.is_empty() || self.decays.is_empty() || self.thresholds.is_empty() {
            return Err(Error::Config("SIC search ranges must be non-empty".into()));
        }
        if self.weights.iter().chain(&self.thresholds).any(|&x| x <= 0) {
            return Err(Error::Config("SIC weights and thresholds must be positive".into()));
        }
        if self.decays.iter().any(|&d| !(1..=4096).contains(&d)) {
            return Err(Error::Config("SIC decays must lie in [1, 4096]".into()));
        }
        if self.dt_ms <= 0.0 {
            return Err(Error::Config("dt_ms must be positive".into()));
        }
        Ok(())
    }

    fn grid(&self) -> Vec<(i32, i32, i32)> {
        let uniq = |v: &[i32]| {
            let mut v = v.to_vec();
            v.sort_unstable();
            v.dedup();
            v
        };
        let (ws, ds, ts) = (uniq(&self.weights), uniq(&self.decays), uniq(&self.thresholds));
        let mut out = Vec::with_capacity(ws.len() * ds.len() * ts.len());
        for &w in &ws {
            for &d in &ds {
                for &t in &ts {
                    out.push((w, d, t));
                }
            }
        }
        out
    }
}

/// Measured response of the SIC/SG pair to one IP3 spike.
#[derive(Debug, Clone, PartialEq)]
pub struct BurstResponse {
    /// Steps (relative to the IP3 spike) on which the SG fired.
    pub spike_steps: Vec<u64>,
}

impl BurstResponse {
    /// Peak instantaneous rate: `1000 / shortest ISI`. A lone spike is
    /// assigned the SG rate ceiling of one spike per step.
    pub fn amplitude_hz(&self, dt_ms: f64) -> Option<f64> {
        match self.spike_steps.len() {
            0 => None,
            1 => Some(1000.0 / dt_ms),
            _ => {
                let min_isi = self
                    .spike_steps
                    .windows(2)
                    .map(|w| w[1] - w[0])
                    .min()
                    .expect("at least one interval");
                Some(1000.0 / (min_isi as f64 * dt_ms))
            }
        }
    }

    pub fn window_ms(&self, dt_ms: f64) -> Option<f64> {
        let first = self.spike_steps.first()?;
        let last = self.spike_steps.last()?;
        Some((last - first) as f64 * dt_ms)
    }
}

/// Simulate a single IP3 spike into a fresh SIC/SG pair until the SIC
/// envelope has fully decayed.
pub fn simulate_ip3_spike(weight: i32, decay: i32, threshold: i32) -> BurstResponse {
    let mut gen = SicGenerator::new(sic_compartment(decay), sg_compartment(threshold), weight);
    let mut spike_steps = Vec::new();
    let mut t = 0u64;
    if gen.step(true) {
        spike_steps.push(t);
    }
    // decay >= 1 guarantees the envelope reaches zero; the cap guards misuse
    while !gen.quiescent() && t < 10_000_000 {
        t += 1;
        if gen.step(false) {
            spike_steps.push(t);
        }
    }
    BurstResponse { spike_steps }
}

fn measure(triple: (i32, i32, i32), dt_ms: f64) -> Option<SicConfigRow> {
    let (w, d, t) = triple;
    let resp = simulate_ip3_spike(w, d, t);
    Some(SicConfigRow {
        ip3_to_sic_weight: w,
        sic_current_decay: d,
        sg_threshold: t,
        measured_amplitude: resp.amplitude_hz(dt_ms)?,
        measured_window: resp.window_ms(dt_ms)?,
    })
}

fn row_order(a: &SicConfigRow, b: &SicConfigRow) -> Ordering {
    a.measured_amplitude
        .total_cmp(&b.measured_amplitude)
        .then(a.measured_window.total_cmp(&b.measured_window))
        .then(a.triple().cmp(&b.triple()))
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SicConfigTable {
    pub rows: Vec<SicConfigRow>,
}

impl SicConfigTable {
    pub fn from_rows(mut rows: Vec<SicConfigRow>) -> Result<Self> {
        rows.sort_by(row_order);
        let mut triples: Vec<_> = rows.iter().map(SicConfigRow::triple).collect();
        triples.sort_unstable();
        if triples.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("duplicate configuration in SIC table".into()));
        }
        Ok(Self { rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
        if self.rows.is_empty() {
            w.write_record([
                "ip3_to_sic_weight",
                "sic_current_decay",
                "sg_threshold",
                "measured_amplitude_hz",
                "measured_window_ms",
            ])
            .map_err(|e| Error::csv(path, e))?;
        }
        for row in &self.rows {
            w.serialize(row).map_err(|e| Error::csv(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
        let rows = r
            .deserialize()
            .collect::<std::result::Result<Vec<SicConfigRow>, _>>()
            .map_err(|e| Error::csv(path, e))?;
        Self::from_rows(rows)
    }
}

/// Brute-force table generation over `ranges`, optionally capped at
/// `threads` workers. The result does not depend on the worker count.
pub fn build_sic_table(ranges: &SicSearchRanges, threads: Option<usize>) -> Result<SicConfigTable> {
    ranges.validate()?;
    let grid = ranges.grid();
    let dt = ranges.dt_ms;
    let run = || -> Vec<SicConfigRow> {
        grid.par_iter().filter_map(|&triple| measure(triple, dt)).collect()
    };
    let rows = match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(run),
        None => run(),
    };
    SicConfigTable::from_rows(rows)
}

/// Closest row to the target under squared Euclidean distance, ties broken
/// by the smallest parameter triple.
///
/// Rows are sorted by amplitude, so the search starts at the target
/// amplitude and walks outward until the amplitude gap alone exceeds the
/// best cost found.
pub fn lookup_sic_config(
    table: &SicConfigTable,
    target_amplitude: f64,
    target_window: f64,
) -> Result<SicConfigRow> {
    let rows = &table.rows;
    if rows.is_empty() {
        return Err(Error::EmptyTable);
    }
    let start = rows.partition_point(|r| r.measured_amplitude < target_amplitude);
    let mut best: Option<(f64, usize)> = None;
    let consider = |i: usize, best: &mut Option<(f64, usize)>| {
        let c = rows[i].cost(target_amplitude, target_window);
        let better = match *best {
            None => true,
            Some((bc, bi)) => c < bc || (c == bc && rows[i].triple() < rows[bi].triple()),
        };
        if better {
            *best = Some((c, i));
        }
    };
    let gap = |i: usize| {
        let d = rows[i].measured_amplitude - target_amplitude;
        d * d
    };

    let mut lo = start;
    let mut hi = start;
    let (mut left_open, mut right_open) = (lo > 0, hi < rows.len());
    while left_open || right_open {
        if right_open {
            if best.is_some_and(|(bc, _)| gap(hi) > bc) {
                right_open = false;
            } else {
                consider(hi, &mut best);
                hi += 1;
                right_open = hi < rows.len();
            }
        }
        if left_open {
            if best.is_some_and(|(bc, _)| gap(lo - 1) > bc) {
                left_open = false;
            } else {
                consider(lo - 1, &mut best);
                lo -= 1;
                left_open = lo > 0;
            }
        }
    }
    Ok(rows[best.expect("non-empty table").1])
}
