use serde::{Deserialize, Serialize};

use super::instance::{default_ip3, default_sr, sg_compartment, sic_compartment, AstrocyteConfig};
use super::table::{lookup_sic_config, SicConfigTable};
use crate::error::{Error, Result};
use crate::substrate::{CompartmentOverrides, Network, RuleId, Synapse, SynapseId, TraceParams, UnitId};

/// Low-level settings applied after the table lookup.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AstrocyteOverrides {
    #[serde(default)]
    pub sr: CompartmentOverrides,
    #[serde(default)]
    pub ip3: CompartmentOverrides,
    #[serde(default)]
    pub sic: CompartmentOverrides,
    #[serde(default)]
    pub sg: CompartmentOverrides,
    pub ip3_to_sic_weight: Option<i32>,
}

/// User-facing astrocyte description.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AstrocytePrototype {
    /// Weight of the SR -> IP3 connection.
    pub ip3_sensitivity: i32,
    /// Peak SG firing rate, Hz.
    pub sic_amplitude: f64,
    /// Time from first to last SG spike of a burst, ms.
    pub sic_window: f64,
    #[serde(default)]
    pub overrides: AstrocyteOverrides,
}

impl Default for AstrocytePrototype {
    fn default() -> Self {
        Self {
            ip3_sensitivity: 64,
            sic_amplitude: 100.0,
            sic_window: 200.0,
            overrides: AstrocyteOverrides::default(),
        }
    }
}

impl AstrocytePrototype {
    pub fn validate(&self) -> Result<()> {
        if self.ip3_sensitivity <= 0 {
            return Err(Error::Config("ip3_sensitivity must be positive".into()));
        }
        if !(self.sic_window > 0.0) || !(self.sic_amplitude > 0.0) {
            return Err(Error::Config("sic_amplitude and sic_window must be positive".into()));
        }
        if self.sic_amplitude * self.sic_window / 1000.0 < 1.0 {
            return Err(Error::Config(format!(
                "sic_amplitude {} Hz over {} ms cannot realize a single SG spike",
                self.sic_amplitude, self.sic_window
            )));
        }
        Ok(())
    }

    /// Map the prototype to low-level compartment settings.
    pub fn resolve(&self, table: &SicConfigTable) -> Result<AstrocyteConfig> {
        self.validate()?;
        let row = lookup_sic_config(table, self.sic_amplitude, self.sic_window)?;
        let mut cfg = AstrocyteConfig {
            sr: default_sr(),
            ip3: default_ip3(),
            sic: sic_compartment(row.sic_current_decay),
            sg: sg_compartment(row.sg_threshold),
            ip3_sensitivity: self.ip3_sensitivity,
            ip3_to_sic_weight: row.ip3_to_sic_weight,
        };
        let o = &self.overrides;
        o.sr.apply(&mut cfg.sr);
        o.ip3.apply(&mut cfg.ip3);
        o.sic.apply(&mut cfg.sic);
        o.sg.apply(&mut cfg.sg);
        if let Some(w) = o.ip3_to_sic_weight {
            cfg.ip3_to_sic_weight = w;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Add one astrocyte to `net`. Without a prototype the default one is used.
/// Returns the astrocyte index within the network.
pub fn create_astrocyte(
    net: &mut Network,
    proto: Option<&AstrocytePrototype>,
    table: &SicConfigTable,
) -> Result<usize> {
    let default = AstrocytePrototype::default();
    let cfg = proto.unwrap_or(&default).resolve(table)?;
    net.add_astrocyte(cfg)
}

/// Several astrocytes instantiated from a list of prototypes.
#[derive(Debug, Clone, PartialEq)]
pub struct AstrocyteGroup {
    pub prototypes: Vec<AstrocytePrototype>,
    pub prototype_map: Vec<usize>,
    /// Network indices of the member astrocytes.
    pub members: Vec<usize>,
}

impl AstrocyteGroup {
    /// `prototype_map[i]` selects the prototype of member `i`; when absent,
    /// members cycle through the prototypes in order.
    pub fn new(
        net: &mut Network,
        prototypes: Vec<AstrocytePrototype>,
        size: usize,
        prototype_map: Option<Vec<usize>>,
        table: &SicConfigTable,
    ) -> Result<Self> {
        if size == 0 {
            return Err(Error::Config("astrocyte group size must be positive".into()));
        }
        if prototypes.is_empty() {
            return Err(Error::Config("astrocyte group needs at least one prototype".into()));
        }
        let map = prototype_map.unwrap_or_else(|| (0..size).map(|i| i % prototypes.len()).collect());
        if map.len() != size {
            return Err(Error::Config(format!(
                "prototype map has {} entries for {} astrocytes",
                map.len(),
                size
            )));
        }
        if let Some(&bad) = map.iter().find(|&&p| p >= prototypes.len()) {
            return Err(Error::Config(format!("prototype index {bad} out of range")));
        }
        let configs = prototypes
            .iter()
            .map(|p| p.resolve(table))
            .collect::<Result<Vec<_>>>()?;
        let members = map
            .iter()
            .map(|&p| net.add_astrocyte(configs[p]))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            prototypes,
            prototype_map: map,
            members,
        })
    }

    pub fn size(&self) -> usize {
        self.members.len()
    }
}

/// Neurons x astrocytes selection matrix with per-pair weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConnectionMask {
    rows: usize,
    cols: usize,
    mask: Vec<bool>,
    weights: Vec<f64>,
}

impl ConnectionMask {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            mask: vec![false; rows * cols],
            weights: vec![0.0; rows * cols],
        }
    }

    /// Every pair connected with the same weight.
    pub fn full(rows: usize, cols: usize, weight: f64) -> Self {
        Self {
            rows,
            cols,
            mask: vec![true; rows * cols],
            weights: vec![weight; rows * cols],
        }
    }

    /// Neuron `i` connects only to astrocyte `groups[i]`.
    pub fn partition(groups: &[usize], cols: usize, weight: f64) -> Self {
        let mut m = Self::new(groups.len(), cols);
        for (i, &g) in groups.iter().enumerate() {
            m.set(i, g, weight);
        }
        m
    }

    pub fn set(&mut self, neuron: usize, astro: usize, weight: f64) {
        let k = neuron * self.cols + astro;
        self.mask[k] = true;
        self.weights[k] = weight;
    }

    pub fn get(&self, neuron: usize, astro: usize) -> Option<f64> {
        let k = neuron * self.cols + astro;
        self.mask[k].then(|| self.weights[k])
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    fn check(&self, rows: usize, cols: usize) -> Result<()> {
        if (self.rows, self.cols) == (rows, cols) {
            Ok(())
        } else {
            Err(Error::MaskDimension {
                rows,
                cols,
                got_rows: self.rows,
                got_cols: self.cols,
            })
        }
    }
}

/// Extra settings for neuron -> astrocyte synapses.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct InputOptions {
    pub rule: Option<RuleId>,
    pub weight_exp: i32,
}

/// Wire `neurons` onto the spike receivers of `astros` where `mask` is set.
pub fn connect_inputs(
    net: &mut Network,
    astros: &[usize],
    neurons: &[UnitId],
    mask: &ConnectionMask,
    opts: InputOptions,
) -> Result<Vec<SynapseId>> {
    mask.check(neurons.len(), astros.len())?;
    let mut out = Vec::new();
    for (i, &n) in neurons.iter().enumerate() {
        for (j, &a) in astros.iter().enumerate() {
            if let Some(w) = mask.get(i, j) {
                let sr = net.astrocyte(a).units.sr;
                let mut syn = Synapse::new(n, sr, w).with_weight_exp(opts.weight_exp);
                if let Some(rule) = opts.rule {
                    syn = syn.with_rule(rule);
                }
                out.push(net.add_synapse(syn)?);
            }
        }
    }
    Ok(out)
}

/// Wire the spike generators of `astros` onto `neurons` where `mask` is set.
pub fn connect_outputs(
    net: &mut Network,
    astros: &[usize],
    neurons: &[UnitId],
    mask: &ConnectionMask,
) -> Result<Vec<SynapseId>> {
    mask.check(neurons.len(), astros.len())?;
    let mut out = Vec::new();
    for (i, &n) in neurons.iter().enumerate() {
        for (j, &a) in astros.iter().enumerate() {
            if let Some(w) = mask.get(i, j) {
                let sg = net.astrocyte(a).units.sg;
                out.push(net.add_synapse(Synapse::new(sg, n, w))?);
            }
        }
    }
    Ok(out)
}

/// Route an astrocyte's burst spikes into the reward trace of plastic synapses.
pub fn connect_reward(
    net: &mut Network,
    astro: usize,
    r1: TraceParams,
    synapses: &[SynapseId],
) -> Result<usize> {
    net.add_reward_channel(astro, r1, synapses)
}
