//! Quantum key distribution sharing a fiber with a gigabit passive optical
//! network: link budgets, spontaneous Raman noise, the SNR of the
//! through-splitter and splitter-bypass layouts, and decoy-state BB84 key rates.
//!
//! The pipeline for one operating point is
//! [`topology`] → [`noise`] → [`analysis`] → [`keyrate`], and [`scenario`]
//! runs it over a grid of fiber lengths and splitting ratios.

// `!(x > 0.0)` is used on purpose so that NaN lands on the rejecting branch
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod error;
pub mod keyrate;
pub mod noise;
pub mod quantities;
pub mod scenario;
pub mod topology;

pub use analysis::SnrReport;
pub use error::{Error, Result};
pub use keyrate::{ChannelModel, DecoyParams, KeyRateResult};
pub use noise::{ClassicalSource, DetectorSpec, NoiseBudget};
pub use quantities::{CountRate, DecibelLoss, OpticalPower, Wavelength};
pub use scenario::{run_sweep, ScenarioConfig, ScenarioResult};
pub use topology::{Architecture, Topology};
