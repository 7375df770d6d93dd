use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::substrate::{Compartment, CompartmentConfig, UnitId};

/// The four compartments of an astrocyte, in unit-id order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AstroPart {
    Sr,
    Ip3,
    Sic,
    Sg,
}

impl AstroPart {
    pub const ALL: [AstroPart; 4] = [AstroPart::Sr, AstroPart::Ip3, AstroPart::Sic, AstroPart::Sg];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AstrocyteUnits {
    pub sr: UnitId,
    pub ip3: UnitId,
    pub sic: UnitId,
    pub sg: UnitId,
}

/// Fully resolved low-level configuration of one astrocyte.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AstrocyteConfig {
    pub sr: CompartmentConfig,
    pub ip3: CompartmentConfig,
    pub sic: CompartmentConfig,
    pub sg: CompartmentConfig,
    /// Weight of the SR -> IP3 connection.
    pub ip3_sensitivity: i32,
    /// Impulse injected into the SIC compartment on every IP3 spike.
    pub ip3_to_sic_weight: i32,
}

impl AstrocyteConfig {
    pub fn validate(&self) -> Result<()> {
        self.sr.validate()?;
        self.ip3.validate()?;
        self.sic.validate()?;
        self.sg.validate()?;
        if self.sic.spiking {
            return Err(Error::Config("SIC compartment must be non-spiking".into()));
        }
        if !(self.sr.spiking && self.ip3.spiking && self.sg.spiking) {
            return Err(Error::Config("SR, IP3 and SG compartments must spike".into()));
        }
        if self.ip3_sensitivity <= 0 || self.ip3_to_sic_weight <= 0 {
            return Err(Error::Config(
                "ip3_sensitivity and ip3_to_sic_weight must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Default spike receiver: relays any positive input as one spike.
pub fn default_sr() -> CompartmentConfig {
    CompartmentConfig {
        current_decay: 4096,
        voltage_decay: 4096,
        threshold: 1,
        ..Default::default()
    }
}

/// Default IP3 integrator: slow leaky integration of SR spikes.
///
/// Decay truncation removes at least one unit per step from a positive
/// voltage, so `ip3_sensitivity` has to be large compared to 1.
pub fn default_ip3() -> CompartmentConfig {
    CompartmentConfig {
        current_decay: 4096,
        voltage_decay: 1,
        threshold: 200_000,
        ..Default::default()
    }
}

/// SIC generator: a non-spiking envelope whose voltage follows its decaying current.
pub fn sic_compartment(current_decay: i32) -> CompartmentConfig {
    CompartmentConfig {
        current_decay,
        voltage_decay: 4096,
        threshold: 1,
        spiking: false,
        ..Default::default()
    }
}

/// Burst spike generator: integrates the SIC voltage against `threshold`.
pub fn sg_compartment(threshold: i32) -> CompartmentConfig {
    CompartmentConfig {
        current_decay: 4096,
        voltage_decay: 0,
        threshold,
        ..Default::default()
    }
}

/// The output stage of an astrocyte: SIC envelope feeding the burst generator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SicGenerator {
    pub sic: Compartment,
    pub sg: Compartment,
    pub ip3_to_sic_weight: i32,
}

impl SicGenerator {
    pub fn new(sic: CompartmentConfig, sg: CompartmentConfig, ip3_to_sic_weight: i32) -> Self {
        Self {
            sic: Compartment::new(sic),
            sg: Compartment::new(sg),
            ip3_to_sic_weight,
        }
    }

    /// Step both compartments; the SG receives this step's SIC voltage
    /// through the dendritic feed. Returns whether the SG spiked.
    pub fn step(&mut self, ip3_spiked: bool) -> bool {
        let impulse = if ip3_spiked { self.ip3_to_sic_weight } else { 0 };
        self.sic.step(impulse);
        self.sg.step(self.sic.voltage())
    }

    pub fn quiescent(&self) -> bool {
        self.sic.state.current == 0 && self.sic.state.voltage == 0
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AstroStep {
    pub sr_spiked: bool,
    pub ip3_spiked: bool,
    pub sg_spiked: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AstrocyteInstance {
    pub config: AstrocyteConfig,
    pub units: AstrocyteUnits,
    pub sr: Compartment,
    pub ip3: Compartment,
    pub output: SicGenerator,
}

impl AstrocyteInstance {
    pub fn new(config: AstrocyteConfig, units: AstrocyteUnits) -> Self {
        Self {
            config,
            units,
            sr: Compartment::new(config.sr),
            ip3: Compartment::new(config.ip3),
            output: SicGenerator::new(config.sic, config.sg, config.ip3_to_sic_weight),
        }
    }

    /// One step of the SR -> IP3 -> SIC -> SG chain. Intra-astrocyte
    /// couplings take effect within the step.
    pub fn step(&mut self, presyn_input: i32) -> AstroStep {
        let sr_spiked = self.sr.step(presyn_input);
        let ip3_in = if sr_spiked { self.config.ip3_sensitivity } else { 0 };
        let ip3_spiked = self.ip3.step(ip3_in);
        let sg_spiked = self.output.step(ip3_spiked);
        AstroStep {
            sr_spiked,
            ip3_spiked,
            sg_spiked,
        }
    }

    pub fn sic_voltage(&self) -> i32 {
        self.output.sic.voltage()
    }
}

/// Functional form of [`AstrocyteInstance::step`].
pub fn astrocyte_step(mut a: AstrocyteInstance, presyn_input: i32) -> (AstrocyteInstance, bool, bool) {
    let out = a.step(presyn_input);
    (a, out.sg_spiked, out.ip3_spiked)
}
