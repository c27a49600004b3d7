//! Experiment harness: configuration, gain sweeps, energy profiles, CSV/JSON
//! emission and the command-line front end.

pub mod cli;
pub mod config;
pub mod output;
pub mod sweep;

pub use config::SimConfig;
pub use sweep::{
    energy_profile, run_sweep, sensitivity_table, snr_db, EnergyRow, Mode, SensitivityRow, SweepContext, SweepResult,
    SweepRow,
};
