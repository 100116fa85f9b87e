//! Spontaneous emission of a moving two-level atom with the Roentgen
//! correction to the electric-dipole coupling.
//!
//! The crate evaluates the long-time photon spectrum of a center-of-mass
//! wavepacket in the single-pole approximation, integrates it over
//! frequency under cutoffs and formfactors, classifies how the
//! unregularized integral grows, and compares golden-rule rates with the
//! coupling taken before and after the photon recoil.

pub mod amplitudes;
pub mod cli;
pub mod coupling;
pub mod error;
pub mod geometry;
pub mod quadrature;
pub mod rates;
pub mod spectra;
pub mod units;
pub mod wavepacket;

pub use error::{Error, Result};
