//! Discrete-time spiking substrate: compartments, traces, Poisson sources and
//! the synchronous network step loop.

mod compartment;
mod network;
mod poisson;
mod trace;

pub use compartment::{
    decay_value, step_compartment, Compartment, CompartmentConfig, CompartmentOverrides,
    CompartmentState, DECAY_ONE,
};
pub use network::{Network, RuleId, SpikeEvent, Synapse, SynapseId, UnitId};
pub use poisson::{poisson_spike, PoissonSource};
pub use trace::{trace_decay_factor, update_trace, Trace, TraceParams, DEFAULT_TRACE_MAX};
