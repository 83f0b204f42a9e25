//! Exact minimax solver for finite decentralized control problems whose
//! agents are grouped into nested subsystems.
//!
//! The pipeline is: declare a [`model::SystemModel`] and an
//! [`model::InfoStructure`], build the equivalent [`nested::HatModel`],
//! then run [`dp::solve`] over the set-valued information states of the
//! least informed subsystem. [`oracle`] holds brute-force ground truth.

#![allow(clippy::needless_range_loop)]

pub mod costs;
pub mod dp;
mod elim;
pub mod error;
pub mod exec;
pub mod format;
pub mod infostate;
pub mod model;
pub mod nested;
pub mod oracle;
pub mod pursuit;
pub mod random;

pub use error::{Error, Result};
pub use model::{Cost, InfoStructure, SystemModel};
