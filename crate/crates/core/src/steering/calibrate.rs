//! Least-squares fit of the calibration constants to anchor observations.

use serde::{Deserialize, Serialize};

use super::Antenna;
use crate::calibration::CalibrationConstants;
use crate::components::ControlState;
use crate::error::{Error, Result};
use crate::optim::nelder_mead;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    Theta,
    Phi,
    Efficiency,
    RealizedGain,
}

impl Observable {
    /// Residual weight; angles count in degrees, efficiency in percent,
    /// gain at 5° per dB.
    fn weight(self) -> f64 {
        match self {
            Observable::Theta | Observable::Phi => 1.0,
            Observable::Efficiency => 100.0,
            Observable::RealizedGain => 5.0,
        }
    }

    fn is_angle(self) -> bool {
        matches!(self, Observable::Theta | Observable::Phi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    Equal,
    AtLeast,
    AtMost,
}

/// One observation the fit should reproduce.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Anchor {
    pub label: String,
    pub state: ControlState,
    pub f: f64,
    pub observable: Observable,
    pub target: f64,
    pub bound: Bound,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FreeParam {
    CGap,
    CFringe,
    Kappa,
    EpsScale,
    GLeak,
    Sigma,
    Psi0,
    YOffset,
}

impl FreeParam {
    fn get(self, c: &CalibrationConstants) -> f64 {
        match self {
            FreeParam::CGap => c.c_gap,
            FreeParam::CFringe => c.c_fringe_per_m,
            FreeParam::Kappa => c.kappa,
            FreeParam::EpsScale => c.eps_scale,
            FreeParam::GLeak => c.g_leak,
            FreeParam::Sigma => c.sigma,
            FreeParam::Psi0 => c.psi0,
            FreeParam::YOffset => c.y_offset,
        }
    }

    fn set(self, c: &mut CalibrationConstants, v: f64) {
        match self {
            FreeParam::CGap => c.c_gap = v,
            FreeParam::CFringe => c.c_fringe_per_m = v,
            FreeParam::Kappa => c.kappa = v,
            FreeParam::EpsScale => c.eps_scale = v,
            FreeParam::GLeak => c.g_leak = v,
            FreeParam::Sigma => c.sigma = v.min(1.0),
            FreeParam::Psi0 => c.psi0 = v,
            FreeParam::YOffset => c.y_offset = v,
        }
    }
}

/// Parameters fitted against the reference anchors; the rest stay at their
/// initial values because the anchors cannot separate them.
pub const REFERENCE_FREE: [FreeParam; 4] = [
    FreeParam::Kappa,
    FreeParam::EpsScale,
    FreeParam::GLeak,
    FreeParam::Psi0,
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchorResidual {
    pub label: String,
    pub observable: Observable,
    pub target: f64,
    pub observed: f64,
    /// Unweighted miss in the observable's own units; zero when an
    /// one-sided bound holds.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub constants: CalibrationConstants,
    pub residuals: Vec<AnchorResidual>,
    pub cost: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl CalibrationReport {
    pub fn max_angle_residual(&self) -> f64 {
        self.residuals
            .iter()
            .filter(|r| r.observable.is_angle())
            .map(|r| r.residual.abs())
            .fold(0.0, f64::max)
    }

    pub fn summary(&self) -> String {
        self.residuals
            .iter()
            .map(|r| {
                format!(
                    "{}: target {:.4} observed {:.4} residual {:.4}",
                    r.label, r.target, r.observed, r.residual
                )
            })
            .collect::<Vec<_>>()
            .join("; ")
    }
}

/// Anchors taken from the reported behaviour at 31 GHz, with `nominal_c`
/// as the capacitance of the φ, efficiency and gain states. The gain is a
/// band of 8 ± 2 dBi rather than a point.
///
/// φ anchors use this crate's sign convention: shorting the left (`+y`)
/// patches steers toward `+φ`.
pub fn reference_anchors(n_cells: usize, c_min: f64, c_max: f64, nominal_c: f64) -> Vec<Anchor> {
    let f = 31e9;
    let n = n_cells as i32;
    let a = |label: &str, state: ControlState, observable, target, bound| Anchor {
        label: label.to_string(),
        state,
        f,
        observable,
        target,
        bound,
    };
    vec![
        a("theta_c_min", ControlState::uniform(n_cells, c_min), Observable::Theta, -34.0, Bound::Equal),
        a("theta_c_max", ControlState::uniform(n_cells, c_max), Observable::Theta, 52.0, Bound::Equal),
        a("phi_left_shorted", ControlState::canonical(n_cells, nominal_c, n), Observable::Phi, 52.0, Bound::Equal),
        a("phi_right_shorted", ControlState::canonical(n_cells, nominal_c, -n), Observable::Phi, -38.0, Bound::Equal),
        a("efficiency", ControlState::uniform(n_cells, nominal_c), Observable::Efficiency, 0.8, Bound::AtLeast),
        a("realized_gain_min", ControlState::uniform(n_cells, nominal_c), Observable::RealizedGain, 6.0, Bound::AtLeast),
        a("realized_gain_max", ControlState::uniform(n_cells, nominal_c), Observable::RealizedGain, 10.0, Bound::AtMost),
    ]
}

fn observe(ant: &Antenna, anchor: &Anchor) -> Result<f64> {
    let s = ant.forward(&anchor.state, anchor.f)?;
    Ok(match anchor.observable {
        Observable::Theta => s.theta_peak,
        Observable::Phi => s.phi_peak,
        Observable::Efficiency => s.budget.radiation_efficiency(),
        Observable::RealizedGain => s.realized_gain_dbi,
    })
}

fn residuals(ant: &Antenna, anchors: &[Anchor]) -> Result<Vec<AnchorResidual>> {
    anchors
        .iter()
        .map(|a| {
            let observed = observe(ant, a)?;
            let miss = observed - a.target;
            let residual = match a.bound {
                Bound::Equal => miss,
                Bound::AtLeast => miss.min(0.0),
                Bound::AtMost => miss.max(0.0),
            };
            Ok(AnchorResidual {
                label: a.label.clone(),
                observable: a.observable,
                target: a.target,
                observed,
                residual,
            })
        })
        .collect()
}

fn cost(res: &[AnchorResidual]) -> f64 {
    res.iter()
        .map(|r| (r.residual * r.observable.weight()).powi(2))
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrateOptions {
    pub max_iter: usize,
    pub ftol: f64,
    /// Absolute cost tolerance.
    pub fatol: f64,
    /// Initial simplex size in log-parameter space.
    pub step: f64,
    /// Largest acceptable angle residual, degrees.
    pub max_angle_residual: f64,
}

impl Default for CalibrateOptions {
    fn default() -> Self {
        Self {
            max_iter: 600,
            ftol: 1e-10,
            fatol: 1e-12,
            step: 0.2,
            max_angle_residual: 10.0,
        }
    }
}

/// Fits `free` parameters of `base.cal` (the initial point) by Nelder–Mead
/// in log-parameter space.
pub fn calibrate(
    base: &Antenna,
    anchors: &[Anchor],
    free: &[FreeParam],
    opts: &CalibrateOptions,
) -> Result<CalibrationReport> {
    if anchors.is_empty() {
        return Err(Error::invalid("calibration needs at least one anchor"));
    }
    if free.is_empty() {
        return Err(Error::invalid("no free calibration parameters"));
    }
    base.validate()?;
    for p in free {
        if !(p.get(&base.cal) > 0.0) {
            return Err(Error::invalid(format!(
                "free parameter {p:?} needs a positive initial value"
            )));
        }
    }
    let build = |x: &[f64]| {
        let mut cal = base.cal;
        for (p, v) in free.iter().zip(x) {
            p.set(&mut cal, v.exp());
        }
        cal
    };
    let objective = |x: &[f64]| -> f64 {
        let ant = base.with_cal(build(x));
        match residuals(&ant, anchors) {
            Ok(r) => cost(&r),
            Err(_) => f64::INFINITY,
        }
    };
    let x0: Vec<f64> = free.iter().map(|p| p.get(&base.cal).ln()).collect();
    let step = vec![opts.step; free.len()];
    let nm = nelder_mead(objective, &x0, &step, opts.ftol, opts.fatol, opts.max_iter);

    let constants = build(&nm.x);
    let res = residuals(&base.with_cal(constants), anchors)?;
    let report = CalibrationReport {
        constants,
        cost: cost(&res),
        residuals: res,
        iterations: nm.iterations,
        converged: nm.converged,
    };
    if !report.converged {
        return Err(Error::Calibration(format!(
            "no convergence after {} iterations; {}",
            report.iterations,
            report.summary()
        )));
    }
    if report.max_angle_residual() > opts.max_angle_residual {
        return Err(Error::Calibration(format!(
            "angle residual {:.2} deg exceeds {:.2} deg; {}",
            report.max_angle_residual(),
            opts.max_angle_residual,
            report.summary()
        )));
    }
    Ok(report)
}
