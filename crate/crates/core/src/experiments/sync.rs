//! Feedforward network whose postsynaptic layer is synchronized by one
//! astrocyte's burst.

use rand::Rng;

use crate::astrocyte::{connect_inputs, create_astrocyte, ConnectionMask, InputOptions, SicConfigTable};
use crate::error::Result;
use crate::substrate::{Network, Synapse, UnitId};

use super::common::*;
use super::config::ExperimentConfig;
use super::output::{RunOutput, RunRecord, SummaryReport};

pub fn run_sync(cfg: &ExperimentConfig, table: &SicConfigTable) -> Result<RunOutput> {
    let sc = cfg.sync.as_ref().expect("validated sync section");
    let dt = cfg.dt_ms;
    let mut net = Network::new(dt, cfg.seed);
    let sources: Vec<UnitId> = (0..sc.n_sources).map(|_| net.add_poisson(sc.source_rate_hz)).collect();
    let post = (0..sc.n_post)
        .map(|_| net.add_neuron(sc.post_neuron))
        .collect::<Result<Vec<_>>>()?;
    let astro = create_astrocyte(&mut net, Some(&sc.astrocyte), table)?;

    let mut rng = structure_rng(cfg.seed);
    for &s in &sources {
        for &p in &post {
            if rng.gen::<f64>() < sc.ff_prob {
                net.add_synapse(Synapse::new(s, p, sc.ff_weight))?;
            }
        }
    }
    connect_inputs(
        &mut net,
        &[astro],
        &sources,
        &ConnectionMask::full(sources.len(), 1, sc.astro_input_weight),
        InputOptions::default(),
    )?;
    let units = net.astrocyte(astro).units;
    if !cfg.ablate_astrocyte {
        for &p in &post {
            net.add_synapse(Synapse::new(units.sg, p, sc.astro_output_weight).with_delay(sc.astro_output_delay))?;
        }
    }

    let mut record = RunRecord {
        unit_count: net.unit_count(),
        ..Default::default()
    };
    record.log_weights(0, net.synapses().iter().map(|s| (s.pre, s.post, s.weight)));
    let total = steps_for(sc.duration_s, dt);
    run_steps(&mut net, total, &mut record.spikes)?;
    record.total_steps = total;

    let ip3 = steps_of(&record.spikes, units.ip3);
    let sg = steps_of(&record.spikes, units.sg);
    let mut report = SummaryReport::new(cfg);
    let astro_cfg = net.astrocyte(astro).config;
    report.set("ip3_to_sic_weight", astro_cfg.ip3_to_sic_weight);
    report.set("sic_current_decay", astro_cfg.sic.current_decay);
    report.set("sg_threshold", astro_cfg.sg.threshold);
    report.set("ip3_spike_count", ip3.len());
    report.set("sg_spike_count", sg.len());
    report.set("duration_s", sc.duration_s);

    let first = ip3.first().copied();
    report.set_opt("first_ip3_s", first.map(|s| step_to_s(s, dt)));
    let burst = first.map(|f| burst_after(&sg, &ip3, f)).unwrap_or_default();
    report.set("burst_spike_count", burst.len());
    report.set_opt("burst_window_ms", burst_window_ms(&burst, dt));
    report.set_opt("burst_amplitude_hz", burst_amplitude_hz(&burst, dt));
    report.set_opt("burst_start_s", burst.first().map(|&s| step_to_s(s, dt)));

    let sync = match (first, burst.first(), burst.last()) {
        (Some(f), Some(&b0), Some(&b1)) => Some(synchrony(&record.spikes, &post, f, b0, b1 + u64::from(sc.astro_output_delay) + 1)),
        _ => None,
    };
    report.set_opt("post_fraction_burst", sync.map(|s| s.burst));
    report.set_opt("post_fraction_baseline", sync.map(|s| s.baseline));
    report.set_opt("synchrony_index", sync.and_then(|s| s.index()));
    record.bars = vec![
        ("baseline".into(), sync.map_or(0.0, |s| s.baseline)),
        ("burst".into(), sync.map_or(0.0, |s| s.burst)),
    ];
    Ok(RunOutput { report, record })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Synchrony {
    pub burst: f64,
    pub baseline: f64,
}

impl Synchrony {
    pub fn index(&self) -> Option<f64> {
        (self.baseline > 0.0).then(|| self.burst / self.baseline)
    }
}

/// Fraction of `post` firing inside `[b0, b1)` against the mean fraction over
/// same-length windows tiling `[0, baseline_end)`.
pub fn synchrony(
    spikes: &[crate::substrate::SpikeEvent],
    post: &[UnitId],
    baseline_end: u64,
    b0: u64,
    b1: u64,
) -> Synchrony {
    let len = (b1 - b0).max(1);
    let burst = fraction_active(spikes, post, b0, b1);
    let n = baseline_end / len;
    let baseline = if n == 0 {
        0.0
    } else {
        (0..n)
            .map(|k| fraction_active(spikes, post, k * len, (k + 1) * len))
            .sum::<f64>()
            / n as f64
    };
    Synchrony { burst, baseline }
}
