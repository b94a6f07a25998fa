//! Structure-preserving simulator for a compressible nematic liquid crystal
//! flow in two dimensions, with energy-law audits and inequality checks.

pub mod cli;
pub mod density;
pub mod director;
pub mod energy;
pub mod error;
pub mod field_core;
pub mod galerkin;
pub mod inequality;
pub mod linalg;
pub mod sim;

pub use error::{Error, Result};
