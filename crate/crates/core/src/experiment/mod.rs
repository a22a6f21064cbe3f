//! Configuration, parameter sweeps and CSV output.

pub mod config;
mod sweep;

pub use config::{
    load_config, parse_config, ConfigError, ExperimentConfig, Scheme, SchemeSelection,
    SeDefinition, SweepAxis,
};
pub use sweep::{
    config_digest, read_csv, run_point, run_sweep, spectral_efficiency, spectral_efficiency_with,
    tipping_point, write_csv, write_meta, write_trace_csv, SeResult, SweepRow,
};
