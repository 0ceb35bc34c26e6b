//! Inverse solvers: uniform-capacitance bisection for θ and the layered
//! (θ, φ) search.

use serde::{Deserialize, Serialize};

use super::map::{steering_map, SteeringMap};
use super::{Antenna, BeamSolution};
use crate::components::ControlState;
use crate::error::{Error, Result};
use crate::optim::golden_min;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Bisection stops once `|θ(C) − target|` is within this, degrees.
    pub theta_tol_deg: f64,
    /// ... or once the capacitance bracket is narrower than this, farads.
    pub c_tol: f64,
    /// Coordinate descent runs only while the angular error exceeds this.
    pub refine_above_deg: f64,
    pub max_passes: usize,
    /// Half-width of the per-varactor search window, farads.
    pub refine_window: f64,
    /// Gain shortfall below the map median that starts the penalty, dB.
    pub gain_drop_db: f64,
    /// Penalty in degrees per dB beyond `gain_drop_db`.
    pub gain_penalty_deg_per_db: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            theta_tol_deg: 1.0,
            c_tol: 1e-15,
            refine_above_deg: 1.0,
            max_passes: 3,
            refine_window: 0.1e-12,
            gain_drop_db: 2.0,
            gain_penalty_deg_per_db: 5.0,
        }
    }
}

/// Great-circle separation of two `(θ, φ)` directions, degrees.
pub fn angular_error_deg(a: (f64, f64), b: (f64, f64)) -> f64 {
    let dir = |(t, p): (f64, f64)| {
        let (st, ct) = t.to_radians().sin_cos();
        let (sp, cp) = p.to_radians().sin_cos();
        [st, ct * sp, ct * cp]
    };
    let (u, v) = (dir(a), dir(b));
    let dot: f64 = u.iter().zip(&v).map(|(x, y)| x * y).sum();
    let cross = [
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    ];
    let cn = cross.iter().map(|x| x * x).sum::<f64>().sqrt();
    cn.atan2(dot).to_degrees()
}

fn with_uniform_c(template: &ControlState, c: f64) -> ControlState {
    let mut s = template.clone();
    for cell in &mut s.cells {
        cell.c_left = c;
        cell.c_right = c;
    }
    s
}

/// θ at the two ends of the capacitance range.
fn theta_range(ant: &Antenna, f: f64, template: &ControlState) -> Result<(f64, f64)> {
    let v = &ant.specs.varactor;
    Ok((
        ant.forward(&with_uniform_c(template, v.c_min), f)?.theta_peak,
        ant.forward(&with_uniform_c(template, v.c_max), f)?.theta_peak,
    ))
}

/// Uniform capacitance steering the beam to `target_theta` with the diode
/// pattern of `template` held fixed.
pub fn solve_theta(
    ant: &Antenna,
    target_theta: f64,
    f: f64,
    template: &ControlState,
    opts: &SolveOptions,
) -> Result<f64> {
    let range = theta_range(ant, f, template)?;
    solve_theta_in(ant, target_theta, f, template, range, opts)
}

fn solve_theta_in(
    ant: &Antenna,
    target_theta: f64,
    f: f64,
    template: &ControlState,
    (lo_t, hi_t): (f64, f64),
    opts: &SolveOptions,
) -> Result<f64> {
    let (c_min, c_max) = (ant.specs.varactor.c_min, ant.specs.varactor.c_max);
    if (lo_t - target_theta).abs() <= opts.theta_tol_deg {
        return Ok(c_min);
    }
    if (hi_t - target_theta).abs() <= opts.theta_tol_deg {
        return Ok(c_max);
    }
    if !(target_theta > lo_t.min(hi_t) && target_theta < lo_t.max(hi_t)) {
        return Err(Error::OutOfRange {
            target: target_theta,
            lo: lo_t.min(hi_t),
            hi: lo_t.max(hi_t),
        });
    }
    // Illinois false position on θ(C) − target, which is monotone in C.
    let (mut a, mut fa) = (c_min, lo_t - target_theta);
    let (mut b, mut fb) = (c_max, hi_t - target_theta);
    let mut side = 0;
    let mut c = 0.5 * (a + b);
    for _ in 0..100 {
        c = (a * fb - b * fa) / (fb - fa);
        if !(c > a.min(b) && c < a.max(b)) {
            c = 0.5 * (a + b);
        }
        let fc = ant.forward(&with_uniform_c(template, c), f)?.theta_peak - target_theta;
        if fc.abs() <= opts.theta_tol_deg || (b - a).abs() < opts.c_tol {
            return Ok(c);
        }
        if fc.signum() == fb.signum() {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
    }
    Ok(c)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution2d {
    pub solution: BeamSolution,
    pub target: (f64, f64),
    pub theta_error: f64,
    pub phi_error: f64,
    pub angular_error: f64,
    /// The target lies outside the reachable set; this is the closest
    /// state found.
    pub nearest: bool,
}

/// Reference data a batch of 2-D solves at one frequency can share.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveContext {
    pub f: f64,
    pub median_gain_dbi: f64,
    pub map: SteeringMap,
}

impl SolveContext {
    /// Coarse 5-point capacitance map over the full diode range.
    pub fn new(ant: &Antenna, f: f64) -> Result<Self> {
        let (lo, hi) = (ant.specs.varactor.c_min, ant.specs.varactor.c_max);
        let grid: Vec<f64> = (0..5).map(|i| lo + (hi - lo) * i as f64 / 4.0).collect();
        let map = steering_map(ant, f, &grid)?;
        Ok(Self {
            f,
            median_gain_dbi: map.median_gain_dbi(),
            map,
        })
    }
}

fn score(s: &BeamSolution, target: (f64, f64), ctx: &SolveContext, opts: &SolveOptions) -> f64 {
    let err = angular_error_deg((s.theta_peak, s.phi_peak), target);
    let floor = ctx.median_gain_dbi - opts.gain_drop_db;
    let shortfall = (floor - s.realized_gain_dbi).max(0.0);
    err + opts.gain_penalty_deg_per_db * shortfall
}

/// Layered search for the state pointing at `target = (θ, φ)`: every
/// asymmetry index with a bisected uniform capacitance, then coordinate
/// descent over the individual varactors.
pub fn solve_2d(
    ant: &Antenna,
    target: (f64, f64),
    ctx: &SolveContext,
    opts: &SolveOptions,
) -> Result<Solution2d> {
    let f = ctx.f;
    let n = ant.geom.n_cells;
    let (c_min, c_max) = (ant.specs.varactor.c_min, ant.specs.varactor.c_max);

    let mut best: Option<(f64, BeamSolution)> = None;
    for k in -(n as i32)..=(n as i32) {
        let template = ControlState::canonical(n, c_min, k);
        let range = theta_range(ant, f, &template)?;
        let c = match solve_theta_in(ant, target.0, f, &template, range, opts) {
            Ok(c) => c,
            // Unreachable θ: take the nearer end of the range.
            Err(Error::OutOfRange { .. }) => {
                if (range.0 - target.0).abs() <= (range.1 - target.0).abs() {
                    c_min
                } else {
                    c_max
                }
            }
            Err(e) => return Err(e),
        };
        let s = ant.forward(&with_uniform_c(&template, c), f)?;
        let sc = score(&s, target, ctx, opts);
        if best.as_ref().is_none_or(|(b, _)| sc < *b) {
            best = Some((sc, s));
        }
    }
    let (mut best_score, mut best_sol) = best.expect("at least one asymmetry index");

    let mut pass = 0;
    while pass < opts.max_passes
        && angular_error_deg((best_sol.theta_peak, best_sol.phi_peak), target) > opts.refine_above_deg
    {
        pass += 1;
        let start = best_score;
        for idx in 0..2 * n {
            let base = best_sol.state.clone();
            let c0 = base.capacitances()[idx];
            let lo = (c0 - opts.refine_window).max(c_min);
            let hi = (c0 + opts.refine_window).min(c_max);
            let eval = |c: f64| -> f64 {
                let mut s = base.clone();
                s.set_capacitance(idx, c);
                match ant.forward(&s, f) {
                    Ok(sol) => score(&sol, target, ctx, opts),
                    Err(_) => f64::INFINITY,
                }
            };
            let (c, sc) = golden_min(eval, lo, hi, 5e-15);
            if sc < best_score {
                let mut s = base.clone();
                s.set_capacitance(idx, c);
                best_sol = ant.forward(&s, f)?;
                best_score = sc;
            }
        }
        if best_score >= start - 1e-9 {
            break;
        }
    }

    let nearest = !ctx.map.hull_contains(target);
    Ok(Solution2d {
        target,
        theta_error: best_sol.theta_peak - target.0,
        phi_error: best_sol.phi_peak - target.1,
        angular_error: angular_error_deg((best_sol.theta_peak, best_sol.phi_peak), target),
        nearest,
        solution: best_sol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn great_circle_distance() {
        assert!(angular_error_deg((10.0, 20.0), (10.0, 20.0)).abs() < 1e-9);
        assert!((angular_error_deg((0.0, 0.0), (30.0, 0.0)) - 30.0).abs() < 1e-9);
        assert!((angular_error_deg((0.0, 0.0), (0.0, -40.0)) - 40.0).abs() < 1e-9);
        assert!((angular_error_deg((90.0, 0.0), (90.0, 70.0))).abs() < 1e-6);
        let d = angular_error_deg((20.0, 10.0), (-15.0, 5.0));
        assert!((d - angular_error_deg((-15.0, 5.0), (20.0, 10.0))).abs() < 1e-12);
    }
}
