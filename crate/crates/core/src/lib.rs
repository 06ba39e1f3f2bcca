//! Exact distance spectra, lattice windows and structure statistics for
//! finite subsets of planar lattices.

pub mod bench;
pub mod census;
pub mod classify;
pub mod error;
pub mod extremal;
pub mod lattice;
pub mod manifest;
pub mod pointset;
pub mod rational;
pub mod spectrum;
pub mod verify;
pub mod windows;

pub use error::{Error, Result};
