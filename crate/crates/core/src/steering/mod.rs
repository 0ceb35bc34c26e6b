//! Forward model, calibration, inverse solving and sweeps.

mod calibrate;
mod map;
mod solve;

pub use calibrate::{
    calibrate, reference_anchors, Anchor, AnchorResidual, Bound, CalibrateOptions, CalibrationReport,
    FreeParam, Observable, REFERENCE_FREE,
};
pub use map::{dedup_grid, dispersion_sweep, q_sensitivity, DispersionRow, steering_map, steering_map_full, QRow, SteeringMap};
pub use solve::{angular_error_deg, solve_2d, solve_theta, Solution2d, SolveContext, SolveOptions};

use serde::{Deserialize, Serialize};

use crate::calibration::CalibrationConstants;
use crate::components::{ControlState, DeviceSpecs};
use crate::dispersion::{dispersion, AntennaGeometry, AntennaNetwork, NetworkOptions, PowerBudget};
use crate::error::Result;
use crate::twoport::ScatterMatrix;
use crate::farfield::{
    build_aperture, compute_pattern, pattern_metrics, refine_peak, ApertureField, ApertureOptions, GridSpec,
    RadiationPattern,
};

/// Numerical knobs of the forward model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelOptions {
    pub network: NetworkOptions,
    pub aperture: ApertureOptions,
    pub grid: GridSpec,
    pub element_exponent: f64,
}

impl Default for ModelOptions {
    fn default() -> Self {
        Self {
            network: NetworkOptions::default(),
            aperture: ApertureOptions::default(),
            grid: GridSpec::default(),
            element_exponent: 1.0,
        }
    }
}

/// Everything a forward evaluation needs besides the control state.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Antenna {
    pub geom: AntennaGeometry,
    pub specs: DeviceSpecs,
    pub cal: CalibrationConstants,
    pub opts: ModelOptions,
}

/// Result of one forward evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamSolution {
    pub f: f64,
    pub theta_peak: f64,
    pub phi_peak: f64,
    pub realized_gain_dbi: f64,
    pub directivity_dbi: f64,
    pub hpbw_theta: f64,
    pub hpbw_phi: f64,
    pub s11_db: f64,
    pub budget: PowerBudget,
    pub on_boundary: bool,
    /// Amplitude-weighted mean phase slope of the aperture, rad/m.
    pub beta_mean: f64,
    /// Cell-averaged attenuation, Np/m.
    pub alpha_mean: f64,
    pub state: ControlState,
}

/// Intermediate products of a forward run, for export and tests.
#[derive(Debug, Clone)]
pub struct ForwardDetail {
    pub solution: BeamSolution,
    pub aperture: ApertureField,
    pub pattern: RadiationPattern,
}

impl Antenna {
    pub fn validate(&self) -> Result<()> {
        self.geom.validate()?;
        self.specs.validate()?;
        self.cal.validate()
    }

    pub fn forward(&self, state: &ControlState, f: f64) -> Result<BeamSolution> {
        self.forward_detail(state, f).map(|d| d.solution)
    }

    pub fn forward_detail(&self, state: &ControlState, f: f64) -> Result<ForwardDetail> {
        self.forward_on(state, f, &self.opts.grid)
    }

    pub fn forward_on(&self, state: &ControlState, f: f64, grid: &GridSpec) -> Result<ForwardDetail> {
        let disp = dispersion(&self.geom, state, &self.specs, &self.cal, f)?;
        let net = AntennaNetwork::build(&self.geom, state, &self.specs, &self.cal, &disp, &self.opts.network)?;
        let s = net.scattering()?;
        let budget = net.power_budget()?;
        let aperture = build_aperture(&self.geom, state, &self.cal, &disp, &self.opts.aperture)?;
        let pattern = compute_pattern(&aperture, f, grid, self.opts.element_exponent)?
            .normalized_to(budget.p_radiated.max(f64::MIN_POSITIVE));
        let mut m = pattern_metrics(&pattern, &budget)?;
        if !m.on_boundary {
            let p = self.opts.element_exponent;
            let (t, ph, u) = refine_peak(
                &aperture,
                f,
                p,
                (m.theta_peak, m.phi_peak),
                (grid.theta_step_deg, grid.phi_step_deg),
            );
            let gain_offset = m.realized_gain_dbi - m.directivity_dbi;
            let total = pattern.integral();
            m.theta_peak = t;
            m.phi_peak = ph;
            m.directivity_dbi = 10.0 * (4.0 * std::f64::consts::PI * u * pattern.scale / total).log10();
            m.realized_gain_dbi = m.directivity_dbi + gain_offset;
        }
        let solution = BeamSolution {
            f,
            theta_peak: m.theta_peak,
            phi_peak: m.phi_peak,
            realized_gain_dbi: m.realized_gain_dbi,
            directivity_dbi: m.directivity_dbi,
            hpbw_theta: m.hpbw_theta,
            hpbw_phi: m.hpbw_phi,
            s11_db: s.s11_db(),
            budget,
            on_boundary: m.on_boundary,
            beta_mean: aperture.mean_beta(),
            alpha_mean: disp.alpha,
            state: state.clone(),
        };
        Ok(ForwardDetail {
            solution,
            aperture,
            pattern,
        })
    }

    /// Port scattering parameters alone, without the pattern.
    pub fn scattering(&self, state: &ControlState, f: f64) -> Result<ScatterMatrix> {
        let disp = dispersion(&self.geom, state, &self.specs, &self.cal, f)?;
        AntennaNetwork::build(&self.geom, state, &self.specs, &self.cal, &disp, &self.opts.network)?.scattering()
    }

    /// Antenna with constants replaced.
    pub fn with_cal(&self, cal: CalibrationConstants) -> Self {
        Self { cal, ..self.clone() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forward_is_deterministic() {
        let a = Antenna::default();
        let s = ControlState::canonical(6, 0.45e-12, -2);
        assert_eq!(a.forward(&s, 30e9).unwrap(), a.forward(&s, 30e9).unwrap());
    }
}
