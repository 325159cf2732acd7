//! Simulation and analysis of electromagnetically induced transparency in a
//! single Λ-type superconducting artificial atom.
//!
//! The atom is a flux-tunable transmon coupled to a resonator and to an open
//! transmission line. A flux modulation at `ω_Φ` activates the `|e,0⟩ ↔ |g,1⟩`
//! sideband, turning `{|g,0⟩, |e,0⟩, |g,1⟩}` into a Λ system probed through
//! the line.
//!
//! Units: angular frequencies and rates in rad/ns, times in ns. Conversion
//! helpers for GHz and MHz live in [`units`].

pub mod device;
pub mod dynamics;
pub mod error;
pub mod ode;
pub mod operators;
pub mod presets;
pub mod pulselab;
pub mod spectroscopy;
pub mod units;

pub use error::{Error, Result};
