//! Classical generation of easy and hard quantum probability distributions,
//! a hand-written variational autoencoder that learns them, and the
//! fidelity/compression experiments built on top.
//!
//! Basis indices are big-endian throughout: qubit 1 is the most significant
//! bit of the index.

pub mod error;
pub mod evaluation;
pub mod hard;
pub mod harness;
pub mod krylov;
pub mod rng;
pub mod sampling;
pub mod states;
pub mod table;
pub mod vae;

pub use error::{Error, Result};
pub use table::ProbabilityTable;
