//! Homeostatic astrocyte used as an order/chaos detector.
//!
//! The reference detector compares short-term rates `r_i` with long-term
//! rates `r̂_i`:
//!
//! `f = g((1/N) * sum_i (r_i / r_max) * ln(r_max / r̂_i))`
//!
//! On the substrate the log term becomes a learned weight (BHP) and the rate
//! ratio becomes the synaptic current seen by the astrocyte's spike receiver.

use serde::{Deserialize, Serialize};

use crate::astrocyte::{AstroStep, AstrocyteConfig};
use crate::error::{Error, Result};
use crate::plasticity::{BhpParams, LearningRule};
use crate::substrate::{Network, Synapse, SynapseId, UnitId};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Identity,
    Rectifier,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Identity => x,
            Activation::Rectifier => x.max(0.0),
        }
    }
}

/// BHP parameters used for chaos detection.
pub fn default_bhp() -> BhpParams {
    BhpParams {
        a: 2f64.powi(-6),
        b: 2f64.powi(-2),
        c: 2f64.powi(-3),
        w_max: 16.0,
        k: 4,
        t_max: 1024.0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChaosMonitorConfig {
    #[serde(default = "default_inputs")]
    pub n_inputs: usize,
    #[serde(default = "default_r_max")]
    pub r_max: f64,
    /// Defaults to `1 / n_inputs`.
    #[serde(default)]
    pub eta: Option<f64>,
    #[serde(default)]
    pub g: Activation,
    #[serde(default = "default_bhp")]
    pub bhp: BhpParams,
    #[serde(default = "default_duration")]
    pub train_duration_s: f64,
    #[serde(default = "default_duration")]
    pub test_duration_s: f64,
    /// Window behind the short-term rate `r_i`.
    #[serde(default = "default_rate_window")]
    pub rate_window_ms: f64,
}

fn default_inputs() -> usize {
    1764
}
fn default_r_max() -> f64 {
    200.0
}
fn default_duration() -> f64 {
    25.0
}
fn default_rate_window() -> f64 {
    100.0
}

impl Default for ChaosMonitorConfig {
    fn default() -> Self {
        Self {
            n_inputs: default_inputs(),
            r_max: default_r_max(),
            eta: None,
            g: Activation::Identity,
            bhp: default_bhp(),
            train_duration_s: default_duration(),
            test_duration_s: default_duration(),
            rate_window_ms: default_rate_window(),
        }
    }
}

impl ChaosMonitorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_inputs == 0 || !(self.r_max > 0.0) {
            return Err(Error::Config("n_inputs and r_max must be positive".into()));
        }
        if matches!(self.eta, Some(e) if !(e > 0.0)) {
            return Err(Error::Config("eta must be positive".into()));
        }
        if !(self.train_duration_s > 0.0 && self.test_duration_s > 0.0 && self.rate_window_ms > 0.0) {
            return Err(Error::Config("durations and rate window must be positive".into()));
        }
        self.bhp.validate()
    }

    pub fn eta(&self) -> f64 {
        self.eta.unwrap_or(1.0 / self.n_inputs as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateEstimates {
    pub short_term: Vec<f64>,
    pub long_term: Vec<f64>,
}

impl RateEstimates {
    fn check(&self, r_max: f64) -> Result<()> {
        if self.short_term.len() != self.long_term.len() || self.short_term.is_empty() {
            return Err(Error::Config("rate vectors must be non-empty and equal in length".into()));
        }
        let in_range = |r: &f64| (0.0..=r_max).contains(r);
        if !self.short_term.iter().all(in_range) || !self.long_term.iter().all(in_range) {
            return Err(Error::Config(format!("rates must lie in [0, {r_max}]")));
        }
        match self.long_term.iter().position(|&r| r == 0.0) {
            Some(i) => Err(Error::ZeroLongTermRate(i)),
            None => Ok(()),
        }
    }
}

/// Direct evaluation of the detector.
pub fn f_astro_reference(rates: &RateEstimates, cfg: &ChaosMonitorConfig) -> Result<f64> {
    rates.check(cfg.r_max)?;
    let n = rates.short_term.len() as f64;
    let sum: f64 = rates
        .short_term
        .iter()
        .zip(&rates.long_term)
        .map(|(&r, &rh)| (r / cfg.r_max) * (1.0 / (rh / cfg.r_max)).ln())
        .sum();
    Ok(cfg.g.apply(sum / n))
}

/// Per-input weight `W_i = ln(r_max / r̂_i)`.
pub fn log_weights(long_term: &[f64], r_max: f64) -> Vec<f64> {
    long_term.iter().map(|&rh| (r_max / rh).ln()).collect()
}

/// The detector as `g(eta * sum_i W_i * N_i)`.
pub fn f_astro_weighted(rates: &RateEstimates, cfg: &ChaosMonitorConfig) -> Result<f64> {
    rates.check(cfg.r_max)?;
    let w = log_weights(&rates.long_term, cfg.r_max);
    let drive: f64 = w
        .iter()
        .zip(&rates.short_term)
        .map(|(wi, &r)| wi * (r / cfg.r_max))
        .sum();
    Ok(cfg.g.apply(cfg.eta() * drive))
}

/// Replace zero long-term rates by one event per window. Returns the indices
/// that were floored.
pub fn floor_long_term(long_term: &mut [f64], window_s: f64) -> Vec<usize> {
    let floor = 1.0 / window_s;
    let mut floored = Vec::new();
    for (i, r) in long_term.iter_mut().enumerate() {
        if *r < floor {
            *r = floor;
            floored.push(i);
        }
    }
    floored
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveFrequencyReport {
    pub events_per_second: f64,
    pub window_s: f64,
}

pub fn measure_wave_frequency(event_count: usize, window_s: f64) -> Result<WaveFrequencyReport> {
    if !(window_s > 0.0) {
        return Err(Error::Config("measurement window must be positive".into()));
    }
    Ok(WaveFrequencyReport {
        events_per_second: event_count as f64 / window_s,
        window_s,
    })
}

/// Ranks starting at 1, ties sharing their average rank.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    (sxx > 0.0 && syy > 0.0).then(|| sxy / (sxx * syy).sqrt())
}

/// Spearman rank correlation; `None` when either input is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    pearson(&average_ranks(x), &average_ranks(y))
}

/// Physical settings of the monitoring astrocyte.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonitorSettings {
    pub astrocyte: AstrocyteConfig,
    pub bhp: BhpParams,
    pub weight_exp: i32,
    pub initial_weight: f64,
    pub dt_ms: f64,
}

/// A single astrocyte listening to `n` externally driven input neurons
/// through BHP-plastic synapses.
#[derive(Debug, Clone)]
pub struct ChaosMonitor {
    net: Network,
    inputs: Vec<UnitId>,
    synapses: Vec<SynapseId>,
    astro: usize,
    active: Vec<UnitId>,
}

impl ChaosMonitor {
    pub fn new(n_inputs: usize, s: &MonitorSettings) -> Result<Self> {
        s.bhp.validate()?;
        let mut net = Network::new(s.dt_ms, 0);
        let inputs: Vec<UnitId> = (0..n_inputs).map(|_| net.add_external()).collect();
        let astro = net.add_astrocyte(s.astrocyte)?;
        let rule = net.add_rule(LearningRule::Bhp(s.bhp));
        let sr = net.astrocyte(astro).units.sr;
        let synapses = inputs
            .iter()
            .map(|&u| {
                net.add_synapse(
                    Synapse::new(u, sr, s.initial_weight)
                        .with_weight_exp(s.weight_exp)
                        .with_rule(rule),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            net,
            inputs,
            synapses,
            astro,
            active: Vec::with_capacity(n_inputs),
        })
    }

    pub fn n_inputs(&self) -> usize {
        self.inputs.len()
    }

    pub fn network(&self) -> &Network {
        &self.net
    }

    pub fn set_learning(&mut self, on: bool) {
        self.net.set_learning(on);
    }

    /// Current real-valued weights, in input order.
    pub fn weights(&self) -> Vec<f64> {
        self.synapses.iter().map(|&s| self.net.synapse(s).weight).collect()
    }

    pub fn set_weights(&mut self, w: &[f64]) -> Result<()> {
        if w.len() != self.synapses.len() {
            return Err(Error::Config("weight vector length differs from input count".into()));
        }
        for (&s, &wi) in self.synapses.iter().zip(w) {
            self.net.set_synapse_weight(s, wi)?;
        }
        Ok(())
    }

    /// Advance one step with the listed inputs spiking.
    pub fn step(&mut self, spiking_inputs: &[usize]) -> Result<AstroStep> {
        self.active.clear();
        for &i in spiking_inputs {
            let u = *self
                .inputs
                .get(i)
                .ok_or_else(|| Error::Config(format!("input {i} out of range")))?;
            self.active.push(u);
        }
        let active = std::mem::take(&mut self.active);
        let res = self.net.step_with(&active);
        self.active = active;
        res?;
        let a = self.net.astrocyte(self.astro);
        let spiked = |u: UnitId| self.net.spiked(u);
        Ok(AstroStep {
            sr_spiked: spiked(a.units.sr),
            ip3_spiked: spiked(a.units.ip3),
            sg_spiked: spiked(a.units.sg),
        })
    }
}

/// Drive the monitor with learning frozen at `weights`; returns the
/// per-step astrocyte output.
pub fn run_activity(
    settings: &MonitorSettings,
    weights: &[f64],
    drive: &[Vec<usize>],
) -> Result<Vec<AstroStep>> {
    let mut m = ChaosMonitor::new(weights.len(), settings)?;
    m.set_weights(weights)?;
    m.set_learning(false);
    drive.iter().map(|d| m.step(d)).collect()
}

/// Evolve BHP weights over `drive`, one entry per step. Returns the learned
/// weight vector.
pub fn train_bhp(monitor: &mut ChaosMonitor, drive: &[Vec<usize>]) -> Result<Vec<f64>> {
    monitor.set_learning(true);
    for d in drive {
        monitor.step(d)?;
    }
    Ok(monitor.weights())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::astrocyte::{default_ip3, default_sr, sg_compartment, sic_compartment};
    use crate::substrate::CompartmentConfig;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cfg(n: usize) -> ChaosMonitorConfig {
        ChaosMonitorConfig {
            n_inputs: n,
            ..Default::default()
        }
    }

    fn settings() -> MonitorSettings {
        MonitorSettings {
            astrocyte: AstrocyteConfig {
                sr: CompartmentConfig {
                    current_decay: 205,
                    voltage_decay: 0,
                    threshold: 2000,
                    ..default_sr()
                },
                ip3: CompartmentConfig {
                    threshold: 40_000,
                    ..default_ip3()
                },
                sic: sic_compartment(512),
                sg: sg_compartment(64),
                ip3_sensitivity: 4096,
                ip3_to_sic_weight: 256,
            },
            bhp: default_bhp(),
            weight_exp: 0,
            initial_weight: 16.0,
            dt_ms: 5.0,
        }
    }

    fn poisson_drive(rates_hz: &[f64], steps: usize, dt_ms: f64, seed: u64) -> Vec<Vec<usize>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..steps)
            .map(|_| {
                rates_hz
                    .iter()
                    .enumerate()
                    .filter(|(_, &r)| rng.gen::<f64>() < r * dt_ms / 1000.0)
                    .map(|(i, _)| i)
                    .collect()
            })
            .collect()
    }

    #[test]
    fn saturated_rates_give_zero() {
        let r = RateEstimates {
            short_term: vec![200.0; 5],
            long_term: vec![200.0; 5],
        };
        assert_eq!(f_astro_reference(&r, &cfg(5)).unwrap(), 0.0);
    }

    #[test]
    fn half_rate_against_inverse_e() {
        let r = RateEstimates {
            short_term: vec![100.0],
            long_term: vec![200.0 / std::f64::consts::E],
        };
        let f = f_astro_reference(&r, &cfg(1)).unwrap();
        assert!((f - 0.5).abs() < 1e-12);
    }

    #[test]
    fn zero_long_term_rate_is_an_error() {
        let r = RateEstimates {
            short_term: vec![1.0, 2.0],
            long_term: vec![3.0, 0.0],
        };
        assert!(matches!(f_astro_reference(&r, &cfg(2)), Err(Error::ZeroLongTermRate(1))));
        let mut lt = r.long_term.clone();
        assert_eq!(floor_long_term(&mut lt, 25.0), vec![1]);
        assert_eq!(lt[1], 0.04);
    }

    #[test]
    fn out_of_range_rates_rejected() {
        let r = RateEstimates {
            short_term: vec![201.0],
            long_term: vec![3.0],
        };
        assert!(f_astro_reference(&r, &cfg(1)).is_err());
    }

    #[test]
    fn rectifier_clips() {
        let r = RateEstimates {
            short_term: vec![200.0],
            long_term: vec![200.0],
        };
        let c = ChaosMonitorConfig {
            g: Activation::Rectifier,
            ..cfg(1)
        };
        assert_eq!(f_astro_reference(&r, &c).unwrap(), 0.0);
        assert_eq!(Activation::Rectifier.apply(-3.0), 0.0);
    }

    #[test]
    fn wave_frequency_arithmetic() {
        assert_eq!(measure_wave_frequency(0, 25.0).unwrap().events_per_second, 0.0);
        assert_eq!(measure_wave_frequency(10, 25.0).unwrap().events_per_second, 0.4);
        assert!(measure_wave_frequency(1, 0.0).is_err());
    }

    #[test]
    fn ranks_average_ties() {
        assert_eq!(average_ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[30.0, 20.0, 10.0]), Some(-1.0));
        assert_eq!(spearman(&[1.0, 1.0], &[1.0, 2.0]), None);
    }

    #[test]
    fn silent_inputs_keep_weight() {
        let mut m = ChaosMonitor::new(3, &MonitorSettings {
            initial_weight: 0.0,
            ..settings()
        })
        .unwrap();
        let w = train_bhp(&mut m, &vec![Vec::new(); 4000]).unwrap();
        for wi in w {
            assert!((wi - 16.0).abs() < 1e-6, "{wi}");
        }
    }

    #[test]
    fn busier_input_learns_smaller_weight() {
        let drive = poisson_drive(&[20.0, 180.0], 2000, 5.0, 7);
        let mut m = ChaosMonitor::new(2, &settings()).unwrap();
        let w = train_bhp(&mut m, &drive).unwrap();
        assert!(w[0] > w[1], "{w:?}");
    }

    #[test]
    fn zero_weights_give_no_events() {
        let drive = poisson_drive(&[150.0; 50], 2000, 5.0, 3);
        let out = run_activity(&settings(), &[0.0; 50], &drive).unwrap();
        assert!(out.iter().all(|s| !s.sr_spiked && !s.ip3_spiked && !s.sg_spiked));
    }

    #[test]
    fn doubling_weights_does_not_reduce_events() {
        let drive = poisson_drive(&[60.0; 200], 4000, 5.0, 9);
        let count = |w: f64| {
            run_activity(&settings(), &[w; 200], &drive)
                .unwrap()
                .iter()
                .filter(|s| s.ip3_spiked)
                .count()
        };
        let (one, two) = (count(4.0), count(8.0));
        assert!(one > 0);
        assert!(two >= one, "{one} {two}");
    }

    #[test]
    fn learned_weights_are_deterministic() {
        let drive = poisson_drive(&[5.0, 50.0, 120.0], 1000, 5.0, 1);
        let mut a = ChaosMonitor::new(3, &settings()).unwrap();
        let mut b = ChaosMonitor::new(3, &settings()).unwrap();
        assert_eq!(train_bhp(&mut a, &drive).unwrap(), train_bhp(&mut b, &drive).unwrap());
    }

    #[test]
    fn extra_activity_on_quiet_inputs_raises_events() {
        let rates: Vec<f64> = (0..100).map(|i| if i < 50 { 2.0 } else { 150.0 }).collect();
        let train = poisson_drive(&rates, 5000, 5.0, 21);
        let mut m = ChaosMonitor::new(100, &settings()).unwrap();
        let w = train_bhp(&mut m, &train).unwrap();
        let same = poisson_drive(&rates, 4000, 5.0, 22);
        let mut up = rates.clone();
        up[..50].iter_mut().for_each(|r| *r = 40.0);
        let shifted = poisson_drive(&up, 4000, 5.0, 22);
        let count = |d: &[Vec<usize>]| {
            run_activity(&settings(), &w, d)
                .unwrap()
                .iter()
                .filter(|s| s.ip3_spiked)
                .count()
        };
        assert!(count(&same) <= count(&shifted));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn reference_equals_weighted_sum(
            pairs in proptest::collection::vec((0.0f64..=200.0, 1e-3f64..=200.0), 1..64)
        ) {
            let rates = RateEstimates {
                short_term: pairs.iter().map(|p| p.0).collect(),
                long_term: pairs.iter().map(|p| p.1).collect(),
            };
            let c = cfg(pairs.len());
            let a = f_astro_reference(&rates, &c).unwrap();
            let b = f_astro_weighted(&rates, &c).unwrap();
            prop_assert!((a - b).abs() <= 1e-9);
        }

        #[test]
        fn monotone_in_each_rate(
            pairs in proptest::collection::vec((0.0f64..=190.0, 1.0f64..=190.0), 1..16),
            pick in any::<prop::sample::Index>(),
            bump in 0.0f64..10.0,
        ) {
            let rates = RateEstimates {
                short_term: pairs.iter().map(|p| p.0).collect(),
                long_term: pairs.iter().map(|p| p.1).collect(),
            };
            let c = cfg(pairs.len());
            let base = f_astro_reference(&rates, &c).unwrap();
            let i = pick.index(pairs.len());
            let mut up = rates.clone();
            up.short_term[i] += bump;
            prop_assert!(f_astro_reference(&up, &c).unwrap() >= base);
            let mut slow = rates.clone();
            slow.long_term[i] += bump;
            prop_assert!(f_astro_reference(&slow, &c).unwrap() <= base);
        }

        #[test]
        fn spearman_is_bounded(x in proptest::collection::vec(-5.0f64..5.0, 3..40), seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let y: Vec<f64> = x.iter().map(|_| rng.gen()).collect();
            if let Some(r) = spearman(&x, &y) {
                prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&r));
            }
        }
    }
}
