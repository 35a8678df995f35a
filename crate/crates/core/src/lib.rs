//! Reduced-order transfer-function models of a Volt-VAr inverter.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod cli;
pub mod config;
pub mod error;
pub mod feeder;
pub mod io;
pub mod partition;
pub mod plant;
pub mod signalgen;
pub mod store;
pub mod sysid;

pub use error::{Error, Result};
