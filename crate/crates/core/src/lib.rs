//! Simulation and analysis toolkit for a type-II SPDC photon-pair source at
//! telecom wavelengths.
//!
//! The crate covers the chain from crystal and fiber dispersion, through
//! non-collinear phase matching and the effective phase-matching function
//! (EPMF) of the fiber-coupled source, to the dispersive-fiber spectrometer
//! and a Monte Carlo model of the time-tagged coincidence measurement.
//!
//! * [`dispersion`]: Sellmeier media, BBO indices, LP01 fiber mode.
//! * [`phasematching`]: central wavelengths, tuning curves, degeneracy angle.
//! * [`epmf`]: EPMF, joint spectra, CW slices, correlation metrics.
//! * [`spectrometer`]: arrival times, resolution budget, calibration.
//! * [`montecarlo`]: pair generation, detection, histograms, rate budget.
//!
//! Work that is naturally data parallel (grid evaluation, angle scans,
//! Monte Carlo chunks) goes through [`exec`], which uses rayon when the
//! `parallel` feature is on and falls back to plain iteration otherwise.

pub mod dispersion;
pub mod epmf;
pub mod error;
pub mod exec;
pub mod montecarlo;
pub mod phasematching;
pub mod spectrometer;
pub mod units;
mod wavevector;

pub use error::{Error, Result};
pub use exec::Execution;

/// Version of this crate, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
