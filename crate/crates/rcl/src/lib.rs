//! Verification toolkit for reconfigurable distributed systems: an
//! explicit-state configuration model, a separation-style configuration
//! logic with inductive definitions, a reconfiguration language with a
//! Hoare-style proof system, and a cyclic proof system for havoc
//! invariance, all cross-validated against bounded semantic oracles.

pub mod error;
pub mod logic;
pub mod model;

pub use error::{Error, Result};
