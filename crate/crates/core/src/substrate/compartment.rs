//! Fixed-point current-based leaky-integrate-and-fire compartment.
//!
//! Each step runs a two-stage update with 12-bit decay fractions:
//!
//! ```text
//! u' = floor(u * (4096 - current_decay) / 4096) + input
//! v' = floor(v * (4096 - voltage_decay) / 4096) + u' + bias
//! ```
//!
//! A spiking compartment fires when `v' >= threshold` outside its refractory
//! period, after which `v` is reset to zero and held there for
//! `refractory_steps` steps. Non-spiking compartments expose `v'` as an analog
//! output. All arithmetic saturates at the `i32` range.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Denominator of the 12-bit decay fractions.
pub const DECAY_ONE: i32 = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompartmentConfig {
    pub current_decay: i32,
    pub voltage_decay: i32,
    pub threshold: i32,
    #[serde(default)]
    pub bias: i32,
    #[serde(default)]
    pub refractory_steps: u32,
    #[serde(default = "default_spiking")]
    pub spiking: bool,
}

fn default_spiking() -> bool {
    true
}

impl Default for CompartmentConfig {
    fn default() -> Self {
        Self {
            current_decay: 4096,
            voltage_decay: 4096,
            threshold: 1,
            bias: 0,
            refractory_steps: 0,
            spiking: true,
        }
    }
}

impl CompartmentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0..=DECAY_ONE).contains(&self.current_decay) {
            return Err(Error::Config(format!(
                "current_decay {} outside [0, 4096]",
                self.current_decay
            )));
        }
        if !(0..=DECAY_ONE).contains(&self.voltage_decay) {
            return Err(Error::Config(format!(
                "voltage_decay {} outside [0, 4096]",
                self.voltage_decay
            )));
        }
        if self.spiking && self.threshold <= 0 {
            return Err(Error::Config(format!(
                "spiking compartment needs a positive threshold, got {}",
                self.threshold
            )));
        }
        Ok(())
    }
}

/// Per-field overrides applied on top of a derived [`CompartmentConfig`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompartmentOverrides {
    pub current_decay: Option<i32>,
    pub voltage_decay: Option<i32>,
    pub threshold: Option<i32>,
    pub bias: Option<i32>,
    pub refractory_steps: Option<u32>,
}

impl CompartmentOverrides {
    pub fn apply(&self, cfg: &mut CompartmentConfig) {
        if let Some(x) = self.current_decay {
            cfg.current_decay = x;
        }
        if let Some(x) = self.voltage_decay {
            cfg.voltage_decay = x;
        }
        if let Some(x) = self.threshold {
            cfg.threshold = x;
        }
        if let Some(x) = self.bias {
            cfg.bias = x;
        }
        if let Some(x) = self.refractory_steps {
            cfg.refractory_steps = x;
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct CompartmentState {
    pub current: i32,
    pub voltage: i32,
    pub refractory_remaining: u32,
}

/// `floor(x * (4096 - decay) / 4096)`, saturated to `i32`.
#[inline]
pub fn decay_value(x: i32, decay: i32) -> i32 {
    let scaled = i64::from(x) * i64::from(DECAY_ONE - decay);
    saturate(scaled.div_euclid(i64::from(DECAY_ONE)))
}

#[inline]
fn saturate(x: i64) -> i32 {
    x.clamp(i64::from(i32::MIN), i64::from(i32::MAX)) as i32
}

/// Advance one compartment by one step. Returns the new state and whether it spiked.
pub fn step_compartment(
    state: CompartmentState,
    cfg: &CompartmentConfig,
    synaptic_input: i32,
) -> (CompartmentState, bool) {
    let current = decay_value(state.current, cfg.current_decay).saturating_add(synaptic_input);
    let mut voltage = decay_value(state.voltage, cfg.voltage_decay)
        .saturating_add(current)
        .saturating_add(cfg.bias);
    let mut refractory_remaining = state.refractory_remaining;
    let mut spiked = false;

    if cfg.spiking {
        if refractory_remaining > 0 {
            refractory_remaining -= 1;
            voltage = 0;
        } else if voltage >= cfg.threshold {
            spiked = true;
            voltage = 0;
            refractory_remaining = cfg.refractory_steps;
        }
    }

    (
        CompartmentState {
            current,
            voltage,
            refractory_remaining,
        },
        spiked,
    )
}

/// A compartment bundled with its configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Compartment {
    pub cfg: CompartmentConfig,
    pub state: CompartmentState,
}

impl Compartment {
    pub fn new(cfg: CompartmentConfig) -> Self {
        Self {
            cfg,
            state: CompartmentState::default(),
        }
    }

    pub fn step(&mut self, synaptic_input: i32) -> bool {
        let (state, spiked) = step_compartment(self.state, &self.cfg, synaptic_input);
        self.state = state;
        spiked
    }

    pub fn voltage(&self) -> i32 {
        self.state.voltage
    }

    pub fn reset(&mut self) {
        self.state = CompartmentState::default();
    }
}
