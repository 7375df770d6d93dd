use std::fmt;

use serde::{Deserialize, Serialize};

use super::compartment::{Compartment, CompartmentConfig};
use super::poisson::PoissonSource;
use crate::astrocyte::{AstroPart, AstrocyteConfig, AstrocyteInstance, AstrocyteUnits};
use crate::error::{Error, Result};
use crate::plasticity::{apply_rule, LearningRule, RewardChannel, TraceSet, TraceValues};
use crate::substrate::TraceParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct UnitId(pub u32);

impl fmt::Display for UnitId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl UnitId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SpikeEvent {
    pub step: u64,
    pub unit_id: UnitId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SynapseId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RuleId(pub usize);

/// A weighted, delayed connection between two units.
///
/// `weight` is a real-valued accumulator so that sub-unit learning updates
/// are not lost; the integer weight seen by the postsynaptic unit is
/// `trunc(weight * 2^weight_exp)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Synapse {
    pub pre: UnitId,
    pub post: UnitId,
    pub weight: f64,
    pub delay: u32,
    pub weight_exp: i32,
    pub rule: Option<RuleId>,
}

impl Synapse {
    pub fn new(pre: UnitId, post: UnitId, weight: f64) -> Self {
        Self {
            pre,
            post,
            weight,
            delay: 1,
            weight_exp: 0,
            rule: None,
        }
    }

    pub fn with_delay(mut self, delay: u32) -> Self {
        self.delay = delay;
        self
    }

    pub fn with_weight_exp(mut self, exp: i32) -> Self {
        self.weight_exp = exp;
        self
    }

    pub fn with_rule(mut self, rule: RuleId) -> Self {
        self.rule = Some(rule);
        self
    }

    pub fn effective_weight(&self) -> i32 {
        (self.weight * 2f64.powi(self.weight_exp)).trunc() as i32
    }
}

#[derive(Debug, Clone)]
enum Unit {
    Poisson(PoissonSource),
    External,
    Neuron(Compartment),
    Astro { index: usize, part: AstroPart },
}

#[derive(Debug, Clone)]
struct PlasticSynapse {
    synapse: usize,
    traces: TraceSet,
    channel: Option<usize>,
}

/// Synchronous discrete-time network of sources, neurons and astrocytes.
#[derive(Debug, Clone)]
pub struct Network {
    dt_ms: f64,
    seed: u64,
    units: Vec<Unit>,
    synapses: Vec<Synapse>,
    outgoing: Vec<Vec<usize>>,
    rules: Vec<LearningRule>,
    plastic: Vec<PlasticSynapse>,
    channels: Vec<RewardChannel>,
    astrocytes: Vec<AstrocyteInstance>,
    pending: Vec<Vec<i64>>,
    spiked: Vec<bool>,
    learning: bool,
    step: u64,
}

impl Network {
    pub fn new(dt_ms: f64, seed: u64) -> Self {
        Self {
            dt_ms,
            seed,
            units: Vec::new(),
            synapses: Vec::new(),
            outgoing: Vec::new(),
            rules: Vec::new(),
            plastic: Vec::new(),
            channels: Vec::new(),
            astrocytes: Vec::new(),
            pending: vec![Vec::new(); 2],
            spiked: Vec::new(),
            learning: true,
            step: 0,
        }
    }

    pub fn dt_ms(&self) -> f64 {
        self.dt_ms
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn current_step(&self) -> u64 {
        self.step
    }

    pub fn unit_count(&self) -> usize {
        self.units.len()
    }

    fn push_unit(&mut self, unit: Unit) -> UnitId {
        let id = UnitId(self.units.len() as u32);
        self.units.push(unit);
        self.outgoing.push(Vec::new());
        self.spiked.push(false);
        for slot in &mut self.pending {
            slot.push(0);
        }
        id
    }

    /// Poisson source whose random stream is keyed by its unit id.
    pub fn add_poisson(&mut self, rate_hz: f64) -> UnitId {
        let stream = self.units.len() as u64;
        let src = PoissonSource::new(rate_hz, self.dt_ms, self.seed, stream);
        self.push_unit(Unit::Poisson(src))
    }

    /// Unit whose spikes are supplied by the caller through [`Network::step_with`].
    pub fn add_external(&mut self) -> UnitId {
        self.push_unit(Unit::External)
    }

    pub fn add_neuron(&mut self, cfg: CompartmentConfig) -> Result<UnitId> {
        cfg.validate()?;
        Ok(self.push_unit(Unit::Neuron(Compartment::new(cfg))))
    }

    pub fn add_astrocyte(&mut self, cfg: AstrocyteConfig) -> Result<usize> {
        cfg.validate()?;
        let index = self.astrocytes.len();
        let mut ids = [UnitId(0); 4];
        for (slot, part) in ids.iter_mut().zip(AstroPart::ALL) {
            *slot = self.push_unit(Unit::Astro { index, part });
        }
        let units = AstrocyteUnits {
            sr: ids[0],
            ip3: ids[1],
            sic: ids[2],
            sg: ids[3],
        };
        self.astrocytes.push(AstrocyteInstance::new(cfg, units));
        Ok(index)
    }

    pub fn astrocyte(&self, index: usize) -> &AstrocyteInstance {
        &self.astrocytes[index]
    }

    pub fn astrocytes(&self) -> &[AstrocyteInstance] {
        &self.astrocytes
    }

    /// Which astrocyte compartment a unit is, if any.
    pub fn astro_part(&self, unit: UnitId) -> Option<(usize, AstroPart)> {
        match self.units.get(unit.index()) {
            Some(Unit::Astro { index, part }) => Some((*index, *part)),
            _ => None,
        }
    }

    pub fn set_rate(&mut self, unit: UnitId, rate_hz: f64) -> Result<()> {
        match self.units.get_mut(unit.index()) {
            Some(Unit::Poisson(src)) => {
                src.set_rate(rate_hz);
                Ok(())
            }
            Some(_) => Err(Error::Config(format!("unit {unit} is not a Poisson source"))),
            None => Err(Error::UnknownUnit(unit)),
        }
    }

    pub fn neuron(&self, unit: UnitId) -> Option<&Compartment> {
        match self.units.get(unit.index()) {
            Some(Unit::Neuron(c)) => Some(c),
            _ => None,
        }
    }

    pub fn add_rule(&mut self, rule: LearningRule) -> RuleId {
        self.rules.push(rule);
        RuleId(self.rules.len() - 1)
    }

    pub fn rule(&self, id: RuleId) -> &LearningRule {
        &self.rules[id.0]
    }

    pub fn add_synapse(&mut self, syn: Synapse) -> Result<SynapseId> {
        for id in [syn.pre, syn.post] {
            if id.index() >= self.units.len() {
                return Err(Error::UnknownUnit(id));
            }
        }
        match self.units[syn.post.index()] {
            Unit::Poisson(_) | Unit::External => {
                return Err(Error::Config(format!(
                    "unit {} is a source and cannot receive synapses",
                    syn.post
                )))
            }
            Unit::Astro { part, .. } if part != AstroPart::Sr => {
                return Err(Error::Config(format!(
                    "astrocyte inputs must target the spike receiver, not {:?}",
                    part
                )))
            }
            _ => {}
        }
        if syn.delay == 0 {
            return Err(Error::Config("synaptic delay must be at least one step".into()));
        }
        if let Some(rule) = syn.rule {
            if rule.0 >= self.rules.len() {
                return Err(Error::Config(format!("unknown learning rule {}", rule.0)));
            }
        }
        self.ensure_delay_capacity(syn.delay as usize);

        let idx = self.synapses.len();
        if let Some(rule) = syn.rule {
            let (lo, hi) = self.rules[rule.0].bounds();
            let weight = syn.weight.clamp(lo, hi);
            let traces = TraceSet::for_rule(&self.rules[rule.0], weight);
            self.plastic.push(PlasticSynapse {
                synapse: idx,
                traces,
                channel: None,
            });
            self.outgoing[syn.pre.index()].push(idx);
            self.synapses.push(Synapse { weight, ..syn });
        } else {
            self.outgoing[syn.pre.index()].push(idx);
            self.synapses.push(syn);
        }
        Ok(SynapseId(idx))
    }

    fn ensure_delay_capacity(&mut self, delay: usize) {
        let len = self.pending.len();
        if delay < len {
            return;
        }
        let new_len = (delay + 1).next_power_of_two();
        let n = self.units.len();
        let mut ring = vec![vec![0i64; n]; new_len];
        // pending slots hold input for absolute steps step..step+len-1
        for offset in 0..len {
            let abs = self.step + offset as u64;
            ring[(abs % new_len as u64) as usize] =
                std::mem::take(&mut self.pending[(abs % len as u64) as usize]);
        }
        self.pending = ring;
    }

    pub fn synapse(&self, id: SynapseId) -> &Synapse {
        &self.synapses[id.0]
    }

    pub fn synapses(&self) -> &[Synapse] {
        &self.synapses
    }

    /// Create a reward channel driven by the spike generator of astrocyte
    /// `astro` and tag the given plastic synapses with it.
    pub fn add_reward_channel(
        &mut self,
        astro: usize,
        params: TraceParams,
        tagged: &[SynapseId],
    ) -> Result<usize> {
        let source = self
            .astrocytes
            .get(astro)
            .ok_or_else(|| Error::Config(format!("unknown astrocyte {astro}")))?
            .units
            .sg;
        let index = self.channels.len();
        let mut chan = RewardChannel::new(source, params);
        for id in tagged {
            let slot = self
                .plastic
                .iter_mut()
                .find(|p| p.synapse == id.0)
                .ok_or_else(|| Error::Config(format!("synapse {} is not plastic", id.0)))?;
            if slot.channel.is_some() {
                return Err(Error::Config(format!(
                    "synapse {} already has a reward channel",
                    id.0
                )));
            }
            slot.channel = Some(index);
            chan.tagged_synapses.push(id.0);
        }
        self.channels.push(chan);
        Ok(index)
    }

    pub fn reward_channel(&self, index: usize) -> &RewardChannel {
        &self.channels[index]
    }

    pub fn set_learning(&mut self, enabled: bool) {
        self.learning = enabled;
    }

    /// Overwrite a synapse weight, keeping any learning state in step.
    pub fn set_synapse_weight(&mut self, id: SynapseId, weight: f64) -> Result<()> {
        let syn = self
            .synapses
            .get_mut(id.0)
            .ok_or_else(|| Error::Config(format!("unknown synapse {}", id.0)))?;
        syn.weight = weight;
        for p in self.plastic.iter_mut().filter(|p| p.synapse == id.0) {
            p.traces.bhp.w = weight;
        }
        Ok(())
    }

    /// Whether `unit` spiked on the last completed step.
    pub fn spiked(&self, unit: UnitId) -> bool {
        self.spiked.get(unit.index()).copied().unwrap_or(false)
    }

    pub fn weights_snapshot(&self) -> Vec<(UnitId, UnitId, i32)> {
        self.synapses
            .iter()
            .map(|s| (s.pre, s.post, s.effective_weight()))
            .collect()
    }

    pub fn step(&mut self) -> Result<Vec<SpikeEvent>> {
        self.step_with(&[])
    }

    /// One synchronous update. `external` lists the externally driven units
    /// that spike on this step.
    pub fn step_with(&mut self, external: &[UnitId]) -> Result<Vec<SpikeEvent>> {
        self.spiked.iter_mut().for_each(|s| *s = false);
        for &id in external {
            match self.units.get(id.index()) {
                Some(Unit::External) => self.spiked[id.index()] = true,
                Some(_) => return Err(Error::NotExternal(id)),
                None => return Err(Error::UnknownUnit(id)),
            }
        }

        let ring_len = self.pending.len() as u64;
        let slot = (self.step % ring_len) as usize;
        let mut input = std::mem::replace(&mut self.pending[slot], vec![0; self.units.len()]);

        for (i, unit) in self.units.iter_mut().enumerate() {
            match unit {
                Unit::Poisson(src) => self.spiked[i] = src.spike(),
                Unit::External => {}
                Unit::Neuron(c) => self.spiked[i] = c.step(saturate(input[i])),
                Unit::Astro { .. } => {}
            }
        }
        for astro in &mut self.astrocytes {
            let out = astro.step(saturate(input[astro.units.sr.index()]));
            self.spiked[astro.units.sr.index()] = out.sr_spiked;
            self.spiked[astro.units.ip3.index()] = out.ip3_spiked;
            self.spiked[astro.units.sg.index()] = out.sg_spiked;
        }

        // deliver with this step's weights, then learn
        for (pre, &fired) in self.spiked.iter().enumerate() {
            if !fired {
                continue;
            }
            for &si in &self.outgoing[pre] {
                let syn = &self.synapses[si];
                let at = ((self.step + u64::from(syn.delay)) % ring_len) as usize;
                self.pending[at][syn.post.index()] += i64::from(syn.effective_weight());
            }
        }

        for chan in &mut self.channels {
            chan.r1.decay();
        }
        for p in &mut self.plastic {
            let syn = &mut self.synapses[p.synapse];
            let rule = &self.rules[syn.rule.expect("plastic synapse has a rule").0];
            p.traces.x1.decay();
            p.traces.y1.decay();
            let v = TraceValues {
                x0: self.spiked[syn.pre.index()],
                y0: self.spiked[syn.post.index()],
                x1: p.traces.x1.value,
                y1: p.traces.y1.value,
                r1: p.channel.map_or(0, |c| self.channels[c].r1.value),
            };
            if self.learning {
                syn.weight = apply_rule(syn.weight, rule, &mut p.traces, &v);
            }
            if v.x0 {
                p.traces.x1.add_impulse();
            }
            if v.y0 {
                p.traces.y1.add_impulse();
            }
        }
        for chan in &mut self.channels {
            if self.spiked[chan.source.index()] {
                chan.r1.add_impulse();
            }
        }

        input.iter_mut().for_each(|x| *x = 0);
        self.pending[slot] = input;

        let events = self
            .spiked
            .iter()
            .enumerate()
            .filter(|(_, &s)| s)
            .map(|(i, _)| SpikeEvent {
                step: self.step,
                unit_id: UnitId(i as u32),
            })
            .collect();
        self.step += 1;
        Ok(events)
    }
}

fn saturate(x: i64) -> i32 {
    x.clamp(i64::from(i32::MIN), i64::from(i32::MAX)) as i32
}
