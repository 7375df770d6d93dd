//! Four-compartment astrocyte (SR -> IP3 -> SIC -> SG), its builder API and
//! the brute-force SIC parameter table.

mod builder;
mod instance;
mod table;

pub use builder::{
    connect_inputs, connect_outputs, connect_reward, create_astrocyte, AstrocyteGroup,
    AstrocyteOverrides, AstrocytePrototype, ConnectionMask, InputOptions,
};
pub use instance::{
    astrocyte_step, default_ip3, default_sr, sg_compartment, sic_compartment, AstroPart, AstroStep,
    AstrocyteConfig, AstrocyteInstance, AstrocyteUnits, SicGenerator,
};
pub use table::{
    build_sic_table, lookup_sic_config, simulate_ip3_spike, BurstResponse, SicConfigRow,
    SicConfigTable, SicSearchRanges,
};
