//! Calibration constants of the reduced-order model.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Everything the reduced-order model cannot derive from geometry alone.
///
/// The edge loading of each side is `kappa * series(c_gap, C_var) / d +
/// c_fringe_per_m`; the leaky mode sees `eps_scale` times the quasi-TEM
/// effective permittivity of the local strip.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationConstants {
    pub c_gap: f64,
    pub c_fringe_per_m: f64,
    /// Fraction of the varactor capacitance that appears as edge loading.
    pub kappa: f64,
    pub eps_scale: f64,
    pub g_leak: f64,
    /// Side attenuation per shorted patch, as a fraction of full scale.
    pub sigma: f64,
    /// Transverse phase at full asymmetry, radians.
    pub psi0: f64,
    pub y_offset: f64,
}

impl Default for CalibrationConstants {
    /// Initial point of the reference-anchor fit.
    fn default() -> Self {
        Self {
            c_gap: 5e-12,
            c_fringe_per_m: 0.0,
            kappa: 0.06,
            eps_scale: 0.55,
            g_leak: 0.3,
            sigma: 0.5,
            psi0: 3.0,
            y_offset: 2e-3,
        }
    }
}

impl CalibrationConstants {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("c_gap", self.c_gap),
            ("c_fringe_per_m", self.c_fringe_per_m),
            ("kappa", self.kappa),
            ("eps_scale", self.eps_scale),
            ("g_leak", self.g_leak),
            ("sigma", self.sigma),
            ("psi0", self.psi0),
            ("y_offset", self.y_offset),
        ];
        for (name, v) in fields {
            if !(v >= 0.0) {
                return Err(Error::invalid(format!("calibration {name} = {v} must be >= 0")));
            }
        }
        if self.sigma > 1.0 {
            return Err(Error::invalid(format!("calibration sigma = {} > 1", self.sigma)));
        }
        if !(self.eps_scale > 0.0) {
            return Err(Error::invalid("calibration eps_scale must be > 0"));
        }
        Ok(())
    }
}
