//! Deterministic emulation of a spiking neuronal-astrocytic network.
//!
//! The crate is organised bottom-up:
//!
//! * [`substrate`]: fixed-point compartments, spike traces, Poisson sources
//!   and the synchronous network loop.
//! * [`astrocyte`]: the four-compartment astrocyte, its builder API and the
//!   SIC configuration table.
//! * [`plasticity`]: trace-product rules (STDP, heterosynaptic depression)
//!   and the homeostatic rule on neuron-to-astrocyte weights.
//! * [`ising`]: clustered 2-D Ising lattice used as an activity driver.
//! * [`chaos`]: the astrocytic order/chaos monitor.
//! * [`experiments`]: end-to-end experiment runners and output writers.

pub mod astrocyte;
pub mod chaos;
pub mod error;
pub mod experiments;
pub mod ising;
pub mod plasticity;
pub mod substrate;

pub use error::{Error, Result};
