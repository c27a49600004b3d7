//! Coded adaptive bit and energy loading for linear-precoded DMT
//! (LP-DMT) over multipath power-line channels.
//!
//! - [`plc_channel`]: multipath channel frequency response and gain scaling.
//! - [`coding_gap`]: Q-function numerics and per-order SNR gap tables for
//!   uncoded and RS + trellis coded QAM.
//! - [`loader`]: subset partitioning and the greedy add/remove loader.
//! - [`oracle`]: exhaustive-search and Monte-Carlo cross-checks.
//! - [`simkit`]: gain sweeps, energy profiles and the `lpdmt` CLI.

pub mod coding_gap;
pub mod error;
pub mod loader;
pub mod oracle;
pub mod plc_channel;
pub mod simkit;

pub use coding_gap::{build_gap_table, GapConfig, GapTable};
pub use error::{Error, Result};
pub use loader::{
    allocate_subset, allocate_system, partition, LoadParams, Strategy, SubsetAllocation, SystemAllocation,
};
pub use plc_channel::{frequency_response, ChannelModel, ChannelResponse, FrequencyGrid};
pub use simkit::{run_sweep, SimConfig, SweepResult};
