//! Two (or more) astrocytes imposing separate synchronous groups on the
//! output layer of a random feedforward network.

use rand::Rng;

use crate::astrocyte::{
    connect_inputs, connect_outputs, AstrocyteGroup, ConnectionMask, InputOptions, SicConfigTable,
};
use crate::error::Result;
use crate::substrate::{Network, SpikeEvent, Synapse, UnitId};

use super::common::*;
use super::config::ExperimentConfig;
use super::output::{RunOutput, RunRecord, SummaryReport};

pub fn run_group_sync(cfg: &ExperimentConfig, table: &SicConfigTable) -> Result<RunOutput> {
    let gc = cfg.group_sync.as_ref().expect("validated group_sync section");
    let dt = cfg.dt_ms;
    let mut net = Network::new(dt, cfg.seed);
    let inputs: Vec<UnitId> = (0..gc.n_inputs).map(|_| net.add_poisson(gc.input_rate_hz)).collect();
    let outputs = (0..gc.n_outputs)
        .map(|_| net.add_neuron(gc.output_neuron))
        .collect::<Result<Vec<_>>>()?;
    let n_astro = gc.prototypes.len();
    let group = AstrocyteGroup::new(&mut net, gc.prototypes.clone(), n_astro, None, table)?;

    let mut rng = structure_rng(cfg.seed);
    for &i in &inputs {
        for &o in &outputs {
            if rng.gen::<f64>() < gc.connect_prob {
                net.add_synapse(Synapse::new(i, o, gc.connect_weight))?;
            }
        }
    }
    let mut in_mask = ConnectionMask::new(gc.n_inputs, n_astro);
    for (i, &g) in gc.input_groups.iter().enumerate() {
        in_mask.set(i, g, gc.astro_input_weight);
    }
    connect_inputs(&mut net, &group.members, &inputs, &in_mask, InputOptions::default())?;
    if !cfg.ablate_astrocyte {
        let mut out_mask = ConnectionMask::new(gc.n_outputs, n_astro);
        for (o, &g) in gc.output_groups.iter().enumerate() {
            out_mask.set(o, g, gc.astro_output_weight);
        }
        connect_outputs(&mut net, &group.members, &outputs, &out_mask)?;
    }

    let mut record = RunRecord {
        unit_count: net.unit_count(),
        ..Default::default()
    };
    record.log_weights(0, net.synapses().iter().map(|s| (s.pre, s.post, s.weight)));
    let total = steps_for(gc.duration_s, dt);
    run_steps(&mut net, total, &mut record.spikes)?;
    record.total_steps = total;

    let bin_steps = ((gc.bin_ms / dt).round() as u64).max(1);
    let binned = bin_activity(&record.spikes, &outputs, total, bin_steps);
    let scores = coincidence_scores(&binned, &gc.output_groups, n_astro);

    let mut report = SummaryReport::new(cfg);
    report.set("n_astrocytes", n_astro);
    let mut separated = true;
    for (g, s) in scores.iter().enumerate() {
        report.set_opt(&format!("group{g}_within"), s.within);
        report.set_opt(&format!("group{g}_across"), s.across);
        separated &= matches!((s.within, s.across), (Some(w), Some(a)) if w > a);
        record.bars.push((format!("g{g} within"), s.within.unwrap_or(0.0)));
        record.bars.push((format!("g{g} across"), s.across.unwrap_or(0.0)));
    }
    report.set("groups_separated", separated);
    for (g, &a) in group.members.iter().enumerate() {
        let units = net.astrocyte(a).units;
        let ip3 = steps_of(&record.spikes, units.ip3);
        let sg = steps_of(&record.spikes, units.sg);
        let times: Vec<f64> = ip3.iter().map(|&s| step_to_s(s, dt)).collect();
        report.set(&format!("astro{g}_ip3_s"), times);
        report.set(&format!("astro{g}_sg_spike_count"), sg.len());
    }
    Ok(RunOutput { report, record })
}

/// Per-unit spike counts in consecutive bins of `bin_steps`.
pub fn bin_activity(spikes: &[SpikeEvent], units: &[UnitId], total_steps: u64, bin_steps: u64) -> Vec<Vec<f64>> {
    let n_bins = total_steps.div_ceil(bin_steps) as usize;
    let mut out = vec![vec![0.0; n_bins]; units.len()];
    for e in spikes {
        if let Some(k) = units.iter().position(|&u| u == e.unit_id) {
            out[k][(e.step / bin_steps) as usize] += 1.0;
        }
    }
    out
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupScore {
    /// Mean pairwise coincidence inside the group.
    pub within: Option<f64>,
    /// Mean coincidence between group members and all other units.
    pub across: Option<f64>,
}

/// Burst coincidence per group from binned activity.
pub fn coincidence_scores(binned: &[Vec<f64>], groups: &[usize], n_groups: usize) -> Vec<GroupScore> {
    let n = binned.len();
    let mut within = vec![(0.0, 0usize); n_groups];
    let mut across = vec![(0.0, 0usize); n_groups];
    for i in 0..n {
        for j in i + 1..n {
            let c = cosine(&binned[i], &binned[j]);
            let (gi, gj) = (groups[i], groups[j]);
            if gi == gj {
                within[gi].0 += c;
                within[gi].1 += 1;
            } else {
                across[gi].0 += c;
                across[gi].1 += 1;
                across[gj].0 += c;
                across[gj].1 += 1;
            }
        }
    }
    let mean = |(s, k): (f64, usize)| (k > 0).then(|| s / k as f64);
    within
        .into_iter()
        .zip(across)
        .map(|(w, a)| GroupScore {
            within: mean(w),
            across: mean(a),
        })
        .collect()
}
