//! Reduced-order model of a varactor- and diode-loaded half-width microstrip
//! leaky-wave antenna that steers in two dimensions.
//!
//! The crate is organised bottom-up: [`twoport`] holds microstrip closed
//! forms and ABCD algebra, [`components`] the tuning elements,
//! [`dispersion`] the per-cell eigenproblem and the full-antenna network,
//! [`farfield`] the aperture and pattern integration, and [`steering`] the
//! forward model, calibration and inverse solver. [`io`] covers configuration
//! and file formats.

// `!(x > 0.0)` deliberately rejects NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod components;
pub mod dispersion;
pub mod error;
pub mod farfield;
pub mod io;
pub mod optim;
pub mod steering;
pub mod twoport;

pub use error::{Error, Result};

/// Speed of light in vacuum, m/s.
pub const C0: f64 = 299_792_458.0;
/// Vacuum permeability, H/m.
pub const MU0: f64 = 4.0 * std::f64::consts::PI * 1e-7;
