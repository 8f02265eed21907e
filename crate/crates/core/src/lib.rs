//! Spectra of superconducting qubit circuits and their mechanical analogs.

pub mod cli;
pub mod eigensolve;
pub mod error;
pub mod mechanics;
pub mod observables;
pub mod operators;
pub mod params;
pub mod pipeline;
pub mod selfcheck;

pub use error::{Error, Result};
