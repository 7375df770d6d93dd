//! Single-shot pattern memory: nine sensory inputs, one memory neuron and an
//! astrocyte that gates heterosynaptic depression through a reward trace.

use crate::astrocyte::{connect_inputs, create_astrocyte, ConnectionMask, InputOptions, SicConfigTable};
use crate::error::Result;
use crate::plasticity::LearningRule;
use crate::substrate::{Network, SpikeEvent, Synapse, SynapseId, UnitId};

use super::common::*;
use super::config::{ExperimentConfig, MemoryConfig, PatternSet};
use super::output::{RunOutput, RunRecord, SummaryReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MemoryMode {
    /// Astrocyte monitors inputs, drives the memory neuron and the reward trace.
    Full,
    /// Astrocyte present but disconnected from the memory neuron and the reward trace.
    Ablated,
    /// No astrocyte; synapses follow plain STDP.
    PureStdp,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MemoryRun {
    pub spikes: Vec<SpikeEvent>,
    /// Plastic weights after every step.
    pub trajectory: Vec<Vec<f64>>,
    pub sensory: Vec<UnitId>,
    pub memory: UnitId,
    pub astro_units: Option<crate::astrocyte::AstrocyteUnits>,
    pub retrieval_counts: Vec<usize>,
    pub train_steps: u64,
    pub retrieval_steps: u64,
    pub unit_count: usize,
}

impl MemoryRun {
    pub fn final_weights(&self) -> &[f64] {
        self.trajectory.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

pub fn simulate_memory(
    seed: u64,
    dt_ms: f64,
    mc: &MemoryConfig,
    table: &SicConfigTable,
    mode: MemoryMode,
) -> Result<MemoryRun> {
    let patterns = PatternSet::from_config(&mc.pattern_set)?;
    let mut net = Network::new(dt_ms, seed);
    let train_rates = patterns.rates(mc.learned_pattern);
    let sensory: Vec<UnitId> = train_rates.iter().map(|&r| net.add_poisson(r)).collect();
    let memory = net.add_neuron(mc.memory_neuron)?;

    let rule = match mode {
        MemoryMode::PureStdp => LearningRule::stdp(mc.stdp, mc.traces),
        _ => LearningRule::stdp_hsd(mc.stdp, mc.hsd, mc.traces),
    }
    .with_bounds(mc.w_min, mc.w_max);
    let rule = net.add_rule(rule);
    let plastic: Vec<SynapseId> = sensory
        .iter()
        .map(|&s| {
            net.add_synapse(
                Synapse::new(s, memory, mc.initial_weight)
                    .with_weight_exp(mc.weight_exp)
                    .with_rule(rule),
            )
        })
        .collect::<Result<_>>()?;

    let mut astro_units = None;
    if mode != MemoryMode::PureStdp {
        let astro = create_astrocyte(&mut net, Some(&mc.astrocyte), table)?;
        connect_inputs(
            &mut net,
            &[astro],
            &sensory,
            &ConnectionMask::full(sensory.len(), 1, mc.astro_input_weight),
            InputOptions::default(),
        )?;
        let units = net.astrocyte(astro).units;
        if mode == MemoryMode::Full {
            net.add_synapse(
                Synapse::new(units.sg, memory, mc.astro_output_weight).with_delay(mc.astro_output_delay),
            )?;
            net.add_reward_channel(astro, mc.reward_trace, &plastic)?;
        }
        astro_units = Some(units);
    }

    let weights = |net: &Network| plastic.iter().map(|&s| net.synapse(s).weight).collect::<Vec<_>>();
    let mut spikes = Vec::new();
    let mut trajectory = Vec::new();
    let mut run = |net: &mut Network, steps: u64, spikes: &mut Vec<SpikeEvent>| -> Result<usize> {
        let mut fired = 0;
        for _ in 0..steps {
            let ev = net.step()?;
            fired += ev.iter().filter(|e| e.unit_id == memory).count();
            spikes.extend(ev);
            trajectory.push(weights(net));
        }
        Ok(fired)
    };

    let train_steps = steps_for(mc.train_s, dt_ms);
    let retrieval_steps = steps_for(mc.retrieval_s, dt_ms);
    run(&mut net, train_steps, &mut spikes)?;
    let mut retrieval_counts = Vec::with_capacity(patterns.patterns.len());
    for k in 0..patterns.patterns.len() {
        for (&s, &r) in sensory.iter().zip(patterns.rates(k).iter()) {
            net.set_rate(s, r)?;
        }
        retrieval_counts.push(run(&mut net, retrieval_steps, &mut spikes)?);
    }
    Ok(MemoryRun {
        spikes,
        trajectory,
        sensory,
        memory,
        astro_units,
        retrieval_counts,
        train_steps,
        retrieval_steps,
        unit_count: net.unit_count(),
    })
}

/// Bitwise equality of two weight trajectories and of the sensory and
/// memory spike trains.
pub fn runs_bit_identical(a: &MemoryRun, b: &MemoryRun) -> bool {
    let same_traj = a.trajectory.len() == b.trajectory.len()
        && a.trajectory.iter().zip(&b.trajectory).all(|(x, y)| {
            x.len() == y.len() && x.iter().zip(y).all(|(p, q)| p.to_bits() == q.to_bits())
        });
    let keep = |r: &MemoryRun| {
        r.spikes
            .iter()
            .filter(|e| e.unit_id == r.memory || r.sensory.contains(&e.unit_id))
            .copied()
            .collect::<Vec<_>>()
    };
    same_traj && keep(a) == keep(b)
}

fn strictly_max(counts: &[usize], k: usize) -> bool {
    counts.iter().enumerate().all(|(i, &c)| i == k || counts[k] > c)
}

pub fn run_memory(cfg: &ExperimentConfig, table: &SicConfigTable) -> Result<RunOutput> {
    let mc = cfg.memory.as_ref().expect("validated memory section");
    let dt = cfg.dt_ms;
    let mode = if cfg.ablate_astrocyte {
        MemoryMode::Ablated
    } else {
        MemoryMode::Full
    };
    let main = simulate_memory(cfg.seed, dt, mc, table, mode)?;
    let control = simulate_memory(cfg.seed, dt, mc, table, MemoryMode::Ablated)?;
    let stdp = simulate_memory(cfg.seed, dt, mc, table, MemoryMode::PureStdp)?;
    let learned = PatternSet::from_config(&mc.pattern_set)?.patterns[mc.learned_pattern];

    let mut report = SummaryReport::new(cfg);
    let w = main.final_weights();
    report.set("learned_pattern", mc.learned_pattern);
    report.set("retrieval_counts", main.retrieval_counts.clone());
    report.set("learned_is_strict_max", strictly_max(&main.retrieval_counts, mc.learned_pattern));
    report.set("final_weights", w.to_vec());
    let off: Vec<f64> = (0..9).filter(|&b| !learned[b]).map(|b| w[b]).collect();
    let on: Vec<f64> = (0..9).filter(|&b| learned[b]).map(|b| w[b]).collect();
    report.set("off_pattern_all_negative", off.iter().all(|&x| x < 0.0));
    report.set_f64("off_pattern_max_weight", off.iter().copied().fold(f64::NEG_INFINITY, f64::max));
    report.set_f64("on_pattern_min_weight", on.iter().copied().fold(f64::INFINITY, f64::min));
    if let Some(u) = main.astro_units {
        let ip3 = steps_of(&main.spikes, u.ip3);
        let sg = steps_of(&main.spikes, u.sg);
        report.set_opt("first_ip3_s", ip3.first().map(|&s| step_to_s(s, dt)));
        report.set("ip3_spike_count", ip3.len());
        report.set("sg_spike_count", sg.len());
        let burst = ip3.first().map(|&f| burst_after(&sg, &ip3, f)).unwrap_or_default();
        report.set_opt("burst_window_ms", burst_window_ms(&burst, dt));
        report.set_opt("burst_end_s", burst.last().map(|&s| step_to_s(s, dt)));
    }
    let control_min = control
        .trajectory
        .iter()
        .flatten()
        .copied()
        .fold(f64::INFINITY, f64::min);
    report.set("control_retrieval_counts", control.retrieval_counts.clone());
    report.set("control_final_weights", control.final_weights().to_vec());
    report.set_f64("control_min_weight", control_min);
    report.set("control_matches_stdp", runs_bit_identical(&control, &stdp));

    let mut record = RunRecord {
        unit_count: main.unit_count,
        total_steps: main.trajectory.len() as u64,
        spikes: main.spikes.clone(),
        ..Default::default()
    };
    let interval = cfg.weight_log_interval as usize;
    for (t, ws) in main.trajectory.iter().enumerate() {
        if t % interval == 0 || t + 1 == main.trajectory.len() {
            record.log_weights(
                t as u64,
                main.sensory.iter().zip(ws).map(|(&s, &x)| (s, main.memory, x)),
            );
        }
    }
    record.bars = main
        .retrieval_counts
        .iter()
        .enumerate()
        .map(|(k, &c)| (format!("pattern {}", k + 1), c as f64))
        .collect();
    Ok(RunOutput { report, record })
}
