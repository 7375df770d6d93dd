//! Order-to-chaos detection: an astrocyte learns BHP weights on an ordered
//! Ising drive and is then tested on ordered and near-critical drives.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::mpsc::sync_channel;

use serde_json::json;

use crate::astrocyte::SicConfigTable;
use crate::chaos::{
    f_astro_reference, f_astro_weighted, floor_long_term, measure_wave_frequency, spearman, ChaosMonitor,
    MonitorSettings, RateEstimates,
};
use crate::error::{Error, Result};
use crate::ising::{classify_states, downsample, init_lattice, spins_to_spikes, write_pgm_string, SHEET_SIDE};
use crate::substrate::SpikeEvent;

use super::config::{ChaosConfig, ExperimentConfig};
use super::output::{read_spikes_csv, RunOutput, RunRecord, SummaryReport};

const PHASES: [&str; 3] = ["train", "ordered", "chaotic"];

/// Per-tick active input lists from a recorded `step,unit_id` drive file,
/// where `step` counts ticks.
pub fn load_drive(path: &Path, ticks: usize, n_inputs: usize) -> Result<Vec<Vec<usize>>> {
    let mut drive = vec![Vec::new(); ticks];
    for e in read_spikes_csv(path)? {
        let (t, i) = (e.step as usize, e.unit_id.index());
        if t >= ticks || i >= n_inputs {
            return Err(Error::Config(format!(
                "{}: event (tick {t}, input {i}) outside {ticks} ticks x {n_inputs} inputs",
                path.display()
            )));
        }
        drive[t].push(i);
    }
    for d in &mut drive {
        d.sort_unstable();
        d.dedup();
    }
    Ok(drive)
}

struct PhaseStats {
    active_sum: u64,
    ticks: u64,
    ip3: usize,
    input_counts: Vec<u64>,
}

impl PhaseStats {
    fn new(n: usize) -> Self {
        Self {
            active_sum: 0,
            ticks: 0,
            ip3: 0,
            input_counts: vec![0; n],
        }
    }

    fn rates_hz(&self, tick_ms: f64) -> Vec<f64> {
        let secs = self.ticks as f64 * tick_ms / 1000.0;
        self.input_counts.iter().map(|&c| c as f64 / secs).collect()
    }
}

pub fn run_chaos(cfg: &ExperimentConfig, table: &SicConfigTable, replay: Option<&Path>) -> Result<RunOutput> {
    let cc = cfg.chaos.as_ref().expect("validated chaos section");
    let dt = cfg.dt_ms;
    let n = cc.monitor.n_inputs;
    let (n_train, n_test) = cc.phase_ticks();
    let total_ticks = n_train + 2 * n_test;
    let steps_per_tick = cc.steps_per_tick(dt);

    let settings = MonitorSettings {
        astrocyte: cc.astrocyte.resolve(table)?,
        bhp: cc.monitor.bhp,
        weight_exp: cc.weight_exp,
        initial_weight: cc.initial_weight,
        dt_ms: dt,
    };
    let mut monitor = ChaosMonitor::new(n, &settings)?;
    monitor.set_learning(!cfg.ablate_astrocyte);
    let astro_units = monitor.network().astrocyte(0).units;

    let mut report = SummaryReport::new(cfg);
    let mut record = RunRecord {
        unit_count: monitor.network().unit_count(),
        total_steps: (total_ticks * steps_per_tick) as u64,
        ..Default::default()
    };
    let mut stats: Vec<PhaseStats> = (0..3).map(|_| PhaseStats::new(n)).collect();
    let mut drive_csv = cc.record_drive.then(|| String::from("step,unit_id\n"));
    let mut learned = Vec::new();

    let mut consume = |tick: usize, active: &[usize]| -> Result<()> {
        let phase = if tick < n_train {
            0
        } else if tick < n_train + n_test {
            1
        } else {
            2
        };
        if tick == n_train {
            learned = monitor.weights();
            monitor.set_learning(false);
        }
        let st = &mut stats[phase];
        st.ticks += 1;
        st.active_sum += active.len() as u64;
        for &i in active {
            st.input_counts[i] += 1;
        }
        if let Some(s) = drive_csv.as_mut() {
            for &i in active {
                let _ = writeln!(s, "{tick},{i}");
            }
        }
        for k in 0..steps_per_tick {
            let step = monitor.network().current_step();
            if phase == 0 && step % cfg.weight_log_interval == 0 {
                let post = astro_units.sr;
                let w = monitor.weights();
                record.log_weights(
                    step,
                    w.into_iter()
                        .enumerate()
                        .map(|(i, x)| (crate::substrate::UnitId(i as u32), post, x)),
                );
            }
            let out = monitor.step(if k == 0 { active } else { &[] })?;
            for (fired, unit) in [
                (out.sr_spiked, astro_units.sr),
                (out.ip3_spiked, astro_units.ip3),
                (out.sg_spiked, astro_units.sg),
            ] {
                if fired {
                    record.spikes.push(SpikeEvent { step, unit_id: unit });
                }
            }
            if out.ip3_spiked {
                stats[phase].ip3 += 1;
            }
        }
        Ok(())
    };

    let mut snapshots: Vec<(usize, Vec<i8>)> = Vec::new();
    let mut temps = None;
    if let Some(path) = replay {
        for (tick, active) in load_drive(path, total_ticks, n)?.iter().enumerate() {
            consume(tick, active)?;
        }
    } else {
        let (t_ordered, t_chaotic, classification) = match (cc.t_ordered, cc.t_chaotic) {
            (Some(a), Some(b)) => (a, b, None),
            _ => {
                let c = classify_states(&cc.ising, &cc.temperatures, cfg.seed, cc.classification)?;
                (c.t_ordered, c.t_chaotic, Some(c))
            }
        };
        temps = Some((t_ordered, t_chaotic, classification));
        snapshots = drive_from_ising(cc, cfg.seed, t_ordered, t_chaotic, n_train + n_test, total_ticks, &mut consume)?;
    }
    drop(consume);
    if learned.is_empty() {
        learned = monitor.weights();
    }

    if let Some((t_o, t_c, classification)) = &temps {
        report.set_f64("t_ordered", *t_o);
        report.set_f64("t_chaotic", *t_c);
        if let Some(c) = classification {
            report.set("classification_temperatures", c.temperatures.clone());
            report.set("classification_chi", c.chi.clone());
        }
    }
    report.set("replayed", replay.is_some());

    let tick_ms = cc.tick_ms;
    let mut waves = Vec::new();
    for (name, st) in PHASES.iter().zip(&stats) {
        let window = st.ticks as f64 * tick_ms / 1000.0;
        let wave = measure_wave_frequency(st.ip3, window.max(f64::MIN_POSITIVE))?;
        let mean_active = st.active_sum as f64 / st.ticks.max(1) as f64;
        report.set_f64(&format!("{name}_events_per_second"), wave.events_per_second);
        report.set(&format!("{name}_ip3_count"), st.ip3);
        report.set_f64(&format!("{name}_mean_active"), mean_active);
        waves.push(json!({"phase": name, "events_per_second": wave.events_per_second, "window_s": wave.window_s}));
    }
    let (o, c) = (&stats[1], &stats[2]);
    let ratio = (o.ip3 > 0).then(|| c.ip3 as f64 / o.ip3 as f64);
    report.set_opt("frequency_ratio", ratio);
    let mo = o.active_sum as f64 / o.ticks.max(1) as f64;
    let mc = c.active_sum as f64 / c.ticks.max(1) as f64;
    report.set_opt("active_rel_diff", (mo > 0.0).then(|| (mc - mo).abs() / mo));

    let train_rates = stats[0].rates_hz(tick_ms);
    report.set_opt("weight_rate_spearman", spearman(&learned, &train_rates));
    let mut long_term = train_rates.clone();
    let train_window = stats[0].ticks as f64 * tick_ms / 1000.0;
    let floored = floor_long_term(&mut long_term, train_window.max(f64::MIN_POSITIVE));
    report.set("floored_inputs", floored.len());
    for (name, st) in PHASES.iter().zip(&stats).skip(1) {
        let short: Vec<f64> = st.rates_hz(tick_ms).iter().map(|r| r.min(cc.monitor.r_max)).collect();
        let lt: Vec<f64> = long_term.iter().map(|r| r.min(cc.monitor.r_max)).collect();
        let rates = RateEstimates {
            short_term: short,
            long_term: lt,
        };
        report.set_opt(&format!("{name}_f_astro"), f_astro_reference(&rates, &cc.monitor).ok());
        report.set_opt(&format!("{name}_f_astro_weighted"), f_astro_weighted(&rates, &cc.monitor).ok());
    }
    let wmin = learned.iter().copied().fold(f64::INFINITY, f64::min);
    let wmax = learned.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    report.set_f64("learned_weight_min", wmin);
    report.set_f64("learned_weight_max", wmax);

    let mut lw = String::from("input_id,weight,train_rate_hz\n");
    for (i, (w, r)) in learned.iter().zip(&train_rates).enumerate() {
        let _ = writeln!(lw, "{i},{w},{r}");
    }
    record.extra_files.push(("learned_weights.csv".into(), lw.into_bytes()));
    let mut waves_json = serde_json::to_string_pretty(&waves).expect("waves serialize");
    waves_json.push('\n');
    record.extra_files.push(("waves.json".into(), waves_json.into_bytes()));
    for (tick, spins) in &snapshots {
        record
            .extra_files
            .push((format!("spins_tick{tick:06}.pgm"), write_pgm_string(spins, SHEET_SIDE).into_bytes()));
    }
    if let Some(d) = drive_csv {
        record.extra_files.push(("drive.csv".into(), d.into_bytes()));
    }
    record.bars = PHASES[1..]
        .iter()
        .zip(&stats[1..])
        .map(|(name, st)| (name.to_string(), st.ip3 as f64 / (st.ticks as f64 * tick_ms / 1000.0)))
        .collect();
    Ok(RunOutput { report, record })
}

/// Run the lattice on a producer thread and feed each tick's active inputs
/// to `consume` through a bounded queue. Returns sampled spin snapshots.
fn drive_from_ising(
    cc: &ChaosConfig,
    seed: u64,
    t_ordered: f64,
    t_chaotic: f64,
    switch_tick: usize,
    total_ticks: usize,
    consume: &mut dyn FnMut(usize, &[usize]) -> Result<()>,
) -> Result<Vec<(usize, Vec<i8>)>> {
    let mut lat = init_lattice(&cc.ising, t_ordered, seed)?;
    let (tx, rx) = sync_channel::<Vec<usize>>(cc.queue_capacity);
    let sweeps = cc.sweeps_per_tick;
    let interval = cc.snapshot_interval;
    let warmup = cc.warmup_sweeps;
    std::thread::scope(|scope| {
        let producer = scope.spawn(move || {
            let mut snaps = Vec::new();
            for _ in 0..warmup {
                lat.sweep();
            }
            for tick in 0..total_ticks {
                if tick == switch_tick {
                    lat.set_temperature(t_chaotic);
                }
                for _ in 0..sweeps {
                    lat.sweep();
                }
                let sample = downsample(&lat);
                if interval > 0 && (tick % interval == 0 || tick + 1 == total_ticks) {
                    snaps.push((tick, sample.clone()));
                }
                if tx.send(spins_to_spikes(&sample)).is_err() {
                    break;
                }
            }
            snaps
        });
        let mut result = Ok(());
        for tick in 0..total_ticks {
            match rx.recv() {
                Ok(active) => {
                    if let Err(e) = consume(tick, &active) {
                        result = Err(e);
                        break;
                    }
                }
                Err(_) => {
                    result = Err(Error::Lattice("spin producer stopped early".into()));
                    break;
                }
            }
        }
        drop(rx);
        let snaps = producer.join().expect("spin producer panicked");
        result.map(|_| snaps)
    })
}
