//! Radiating aperture, far-field pattern and beam metrics.
//!
//! Directions use `r̂ = (sinθ, cosθ·sinφ, cosθ·cosφ)` with `x` along the
//! antenna, `z` broadside and `dΩ = cosθ dθ dφ`. θ is positive toward
//! port 2, φ positive toward `+y`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::calibration::CalibrationConstants;
use crate::components::ControlState;
use crate::dispersion::{AntennaGeometry, DispersionSample, PowerBudget};
use crate::error::{Error, Result};
use crate::optim::golden_min;
use crate::C0;

/// Side amplitudes and transverse phase set by the diode states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransverseWeights {
    pub a_left: f64,
    pub a_right: f64,
    pub psi: f64,
    pub y_offset: f64,
}

/// `a_s = 1 − σ·N_s/n` and `ψ = ψ₀·(N_L − N_R)/n` for `n` cells.
pub fn transverse_weights(state: &ControlState, cal: &CalibrationConstants) -> TransverseWeights {
    let n = state.n_cells().max(1) as f64;
    let (nl, nr) = state.shorted_counts();
    TransverseWeights {
        a_left: 1.0 - cal.sigma * nl as f64 / n,
        a_right: 1.0 - cal.sigma * nr as f64 / n,
        psi: cal.psi0 * (nl as f64 - nr as f64) / n,
        y_offset: cal.y_offset,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApertureSample {
    pub x: f64,
    pub y: f64,
    pub e: Complex64,
    /// Local phase slope, rad/m.
    pub beta: f64,
}

/// Sampled source lines of the aperture.
#[derive(Debug, Clone, PartialEq)]
pub struct ApertureField {
    pub samples: Vec<ApertureSample>,
    pub sub_samples_per_cell: usize,
}

impl ApertureField {
    /// Amplitude-weighted mean phase slope.
    pub fn mean_beta(&self) -> f64 {
        let (num, den) = self
            .samples
            .iter()
            .fold((0.0, 0.0), |(n, d), s| (n + s.e.norm() * s.beta, d + s.e.norm()));
        if den > 0.0 {
            num / den
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApertureOptions {
    pub sub_samples_per_cell: usize,
    /// Depth of the per-cell source window; 0 is a smooth travelling wave,
    /// 1 a purely periodic (first-harmonic) modulation.
    pub modulation_depth: f64,
}

impl Default for ApertureOptions {
    fn default() -> Self {
        Self {
            sub_samples_per_cell: 16,
            modulation_depth: 1.0,
        }
    }
}

/// Cell window `(1 − m) + 2m·cos(2π(ξ − ½))` at fractional position `ξ`.
pub fn cell_window(xi: f64, depth: f64) -> f64 {
    (1.0 - depth) + 2.0 * depth * (2.0 * PI * (xi - 0.5)).cos()
}

/// Two source lines at `y = ±y_offset` carrying the travelling wave of the
/// loaded cells. The left line (`+y`) takes `exp(−jψ/2)`, the right
/// `exp(+jψ/2)`.
pub fn build_aperture(
    geom: &AntennaGeometry,
    state: &ControlState,
    cal: &CalibrationConstants,
    disp: &DispersionSample,
    opts: &ApertureOptions,
) -> Result<ApertureField> {
    let s = opts.sub_samples_per_cell;
    if s < 4 {
        return Err(Error::invalid(format!("{s} sub-samples per cell; need at least 4")));
    }
    if disp.cells.len() != geom.n_cells || state.n_cells() != geom.n_cells {
        return Err(Error::invalid("dispersion and state must cover every cell"));
    }
    let tw = transverse_weights(state, cal);
    let d = geom.cell_period;
    let dx = d / s as f64;
    let x0 = geom.cells_start();

    let mut line = Vec::with_capacity(geom.n_cells * s);
    let (mut att, mut ph) = (0.0, 0.0);
    for (i, c) in disp.cells.iter().enumerate() {
        for j in 0..s {
            let xi = (j as f64 + 0.5) / s as f64;
            let a = att + c.alpha * dx * 0.5;
            let p = ph + c.beta * dx * 0.5;
            let amp = (-a).exp() * cell_window(xi, opts.modulation_depth);
            line.push((
                x0 + (i as f64 + xi) * d,
                Complex64::from_polar(amp, -p),
                c.beta,
            ));
            att += c.alpha * dx;
            ph += c.beta * dx;
        }
    }

    let half = Complex64::from_polar(1.0, 0.5 * tw.psi);
    let mut samples = Vec::with_capacity(2 * line.len());
    for (a_side, y, rot) in [
        (tw.a_left, tw.y_offset, half.conj()),
        (tw.a_right, -tw.y_offset, half),
    ] {
        for &(x, e, beta) in &line {
            samples.push(ApertureSample {
                x,
                y,
                e: e * rot * a_side,
                beta,
            });
        }
    }
    Ok(ApertureField {
        samples,
        sub_samples_per_cell: s,
    })
}

/// Direction grid over `θ × φ`, both inclusive of their end points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub theta_step_deg: f64,
    pub phi_step_deg: f64,
    pub phi_max_deg: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self::hemisphere(0.5, 1.0)
    }
}

impl GridSpec {
    /// `θ, φ ∈ [−90°, 90°]`: the half-space in front of the ground plane.
    pub fn hemisphere(theta_step_deg: f64, phi_step_deg: f64) -> Self {
        Self {
            theta_step_deg,
            phi_step_deg,
            phi_max_deg: 90.0,
        }
    }

    pub fn full_sphere(theta_step_deg: f64, phi_step_deg: f64) -> Self {
        Self {
            theta_step_deg,
            phi_step_deg,
            phi_max_deg: 180.0,
        }
    }

    fn axis(step: f64, max: f64) -> Result<Vec<f64>> {
        if !(step > 0.0) || (max / step - (max / step).round()).abs() > 1e-9 {
            return Err(Error::invalid(format!("grid step {step} must divide {max}")));
        }
        let n = (max / step).round() as i64;
        Ok((-n..=n).map(|i| i as f64 * step).collect())
    }

    pub fn thetas(&self) -> Result<Vec<f64>> {
        Self::axis(self.theta_step_deg, 90.0)
    }

    pub fn phis(&self) -> Result<Vec<f64>> {
        Self::axis(self.phi_step_deg, self.phi_max_deg)
    }
}

/// Radiation intensity on a `θ × φ` grid, θ-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RadiationPattern {
    pub f: f64,
    pub thetas: Vec<f64>,
    pub phis: Vec<f64>,
    pub u: Vec<f64>,
    /// Factor applied to the raw intensity.
    pub scale: f64,
}

impl RadiationPattern {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.u[i * self.phis.len() + j]
    }

    /// Trapezoidal `∫∫ u dΩ` over the grid.
    pub fn integral(&self) -> f64 {
        let wt = trapezoid_weights(&self.thetas);
        let wp = trapezoid_weights(&self.phis);
        let np = self.phis.len();
        let mut total = 0.0;
        for (i, (&t, &w)) in self.thetas.iter().zip(&wt).enumerate() {
            let row: f64 = (0..np).map(|j| wp[j] * self.u[i * np + j]).sum();
            total += w * t.to_radians().cos() * row;
        }
        total
    }

    /// Copy rescaled by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            u: self.u.iter().map(|v| v * factor).collect(),
            scale: self.scale * factor,
            ..self.clone()
        }
    }

    /// Copy rescaled so that the grid integral equals `power`.
    pub fn normalized_to(&self, power: f64) -> Self {
        let total = self.integral();
        if total > 0.0 {
            self.scaled(power / total)
        } else {
            self.clone()
        }
    }

    pub fn u_max(&self) -> f64 {
        self.u.iter().cloned().fold(0.0, f64::max)
    }
}

fn trapezoid_weights(axis: &[f64]) -> Vec<f64> {
    let n = axis.len();
    (0..n)
        .map(|i| {
            let lo = if i > 0 { axis[i] - axis[i - 1] } else { 0.0 };
            let hi = if i + 1 < n { axis[i + 1] - axis[i] } else { 0.0 };
            0.5 * (lo + hi).to_radians()
        })
        .collect()
}

/// Element factor of a magnetic line along x, `cos^p θ`, in the front
/// half-space and zero behind the ground plane.
fn element_factor(cos_theta: f64, rz: f64, p: f64) -> f64 {
    if p == 0.0 {
        1.0
    } else if rz < 0.0 {
        0.0
    } else {
        cos_theta.max(0.0).powf(p)
    }
}

/// `u(θ, φ) = |Σ e_k exp(j·k0·(x_k r̂_x + y_k r̂_y))|² · cos^p θ`.
///
/// Samples sharing a `y` are summed once per θ, so the cost is
/// `O(N·n_θ + n_lines·n_θ·n_φ)`.
pub fn compute_pattern(
    ap: &ApertureField,
    f: f64,
    grid: &GridSpec,
    element_exponent: f64,
) -> Result<RadiationPattern> {
    if ap.samples.is_empty() {
        return Err(Error::invalid("empty aperture"));
    }
    if !(f > 0.0) {
        return Err(Error::invalid(format!("frequency {f} <= 0")));
    }
    let k0 = 2.0 * PI * f / C0;
    let thetas = grid.thetas()?;
    let phis = grid.phis()?;

    let mut lines: Vec<(f64, Vec<(f64, Complex64)>)> = Vec::new();
    for s in &ap.samples {
        match lines.iter_mut().find(|(y, _)| *y == s.y) {
            Some((_, v)) => v.push((s.x, s.e)),
            None => lines.push((s.y, vec![(s.x, s.e)])),
        }
    }
    let sin_phi: Vec<f64> = phis.iter().map(|p| p.to_radians().sin()).collect();
    let cos_phi: Vec<f64> = phis.iter().map(|p| p.to_radians().cos()).collect();

    let rows: Vec<Vec<f64>> = thetas
        .par_iter()
        .map(|&t| {
            let (st, ct) = t.to_radians().sin_cos();
            let sums: Vec<(f64, Complex64)> = lines
                .iter()
                .map(|(y, pts)| {
                    let s = pts
                        .iter()
                        .map(|&(x, e)| e * Complex64::from_polar(1.0, k0 * x * st))
                        .sum();
                    (*y, s)
                })
                .collect();
            (0..phis.len())
                .map(|j| {
                    let ry = ct * sin_phi[j];
                    let rz = ct * cos_phi[j];
                    let af: Complex64 = sums
                        .iter()
                        .map(|&(y, s)| s * Complex64::from_polar(1.0, k0 * y * ry))
                        .sum();
                    af.norm_sqr() * element_factor(ct, rz, element_exponent)
                })
                .collect()
        })
        .collect();
    Ok(RadiationPattern {
        f,
        thetas,
        phis,
        u: rows.concat(),
        scale: 1.0,
    })
}

/// Raw intensity of `ap` in one direction, same form as [`compute_pattern`]
/// before normalisation.
pub fn intensity_at(ap: &ApertureField, f: f64, theta_deg: f64, phi_deg: f64, element_exponent: f64) -> f64 {
    let k0 = 2.0 * PI * f / C0;
    let (st, ct) = theta_deg.to_radians().sin_cos();
    let (sp, cp) = phi_deg.to_radians().sin_cos();
    let (rx, ry) = (st, ct * sp);
    let af: Complex64 = ap
        .samples
        .iter()
        .map(|s| s.e * Complex64::from_polar(1.0, k0 * (s.x * rx + s.y * ry)))
        .sum();
    af.norm_sqr() * element_factor(ct, ct * cp, element_exponent)
}

/// Gradient of the raw intensity in `(θ, φ)`, per radian.
fn intensity_gradient(ap: &ApertureField, k0: f64, t: f64, p: f64, element_exponent: f64) -> (f64, f64) {
    let (st, ct) = t.sin_cos();
    let (sp, cp) = p.sin_cos();
    let (rx, ry) = (st, ct * sp);
    let mut af = Complex64::new(0.0, 0.0);
    let mut dt = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for s in &ap.samples {
        let term = s.e * Complex64::from_polar(1.0, k0 * (s.x * rx + s.y * ry));
        af += term;
        dt += term * Complex64::new(0.0, k0 * (s.x * ct - s.y * st * sp));
        dp += term * Complex64::new(0.0, k0 * s.y * ct * cp);
    }
    let ef = element_factor(ct, ct * cp, element_exponent);
    let d_ef = if element_exponent == 0.0 || ct * cp < 0.0 || ct <= 0.0 {
        0.0
    } else {
        -element_exponent * ct.powf(element_exponent - 1.0) * st
    };
    let a2 = af.norm_sqr();
    (
        2.0 * (af.conj() * dt).re * ef + a2 * d_ef,
        2.0 * (af.conj() * dp).re * ef,
    )
}

/// Local maximum of the raw intensity near `start`, searched within
/// `±half_width` degrees on each axis by alternating golden sections and
/// polished with Newton steps on the analytic gradient. Returns `(θ, φ, u)`.
pub fn refine_peak(
    ap: &ApertureField,
    f: f64,
    element_exponent: f64,
    start: (f64, f64),
    half_width: (f64, f64),
) -> (f64, f64, f64) {
    let (mut t, mut p) = start;
    let u = |t: f64, p: f64| intensity_at(ap, f, t, p, element_exponent);
    let mut best = u(t, p);
    for _ in 0..4 {
        let (t0, p0) = (t, p);
        let (tn, ft) = golden_min(|x| -u(x, p), start.0 - half_width.0, start.0 + half_width.0, 1e-9);
        if -ft >= best {
            t = tn;
            best = -ft;
        }
        let (pn, fp) = golden_min(|y| -u(t, y), start.1 - half_width.1, start.1 + half_width.1, 1e-9);
        if -fp >= best {
            p = pn;
            best = -fp;
        }
        if (t - t0).abs() < 1e-9 && (p - p0).abs() < 1e-9 {
            break;
        }
    }

    let k0 = 2.0 * PI * f / C0;
    let grad = |t: f64, p: f64| intensity_gradient(ap, k0, t.to_radians(), p.to_radians(), element_exponent);
    let h = 1e-4;
    for _ in 0..3 {
        let (gt, gp) = grad(t, p);
        let (tp, pp) = grad(t + h, p);
        let (tm, pm) = grad(t - h, p);
        let (qt, qp) = grad(t, p + h);
        let (rt, rp) = grad(t, p - h);
        // Hessian in (rad, deg) mixed units; the step comes out in degrees.
        let htt = (tp - tm) / (2.0 * h);
        let hpp = (qp - rp) / (2.0 * h);
        let htp = 0.5 * ((pp - pm) + (qt - rt)) / (2.0 * h);
        let det = htt * hpp - htp * htp;
        if !(htt < 0.0 && det > 0.0) {
            break;
        }
        let st = -(hpp * gt - htp * gp) / det;
        let sp = -(htt * gp - htp * gt) / det;
        if !(st.abs() < 1e-2 && sp.abs() < 1e-2) {
            break;
        }
        t += st;
        p += sp;
        if st.abs() < 1e-13 && sp.abs() < 1e-13 {
            break;
        }
    }
    (t, p, u(t, p))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatternMetrics {
    pub theta_peak: f64,
    pub phi_peak: f64,
    pub directivity_dbi: f64,
    pub realized_gain_dbi: f64,
    pub hpbw_theta: f64,
    pub hpbw_phi: f64,
    /// The grid maximum sits on the edge of the grid; the true beam may lie
    /// beyond it.
    pub on_boundary: bool,
}

/// Vertex offset of the parabola through three equally spaced samples, in
/// units of the spacing.
fn parabolic_offset(a: f64, b: f64, c: f64) -> f64 {
    let den = a - 2.0 * b + c;
    if den < 0.0 {
        (0.5 * (a - c) / den).clamp(-0.5, 0.5)
    } else {
        0.0
    }
}

/// Width between the −3 dB crossings around index `k` of a cut.
fn half_power_width(axis: &[f64], cut: &[f64], k: usize) -> f64 {
    let half = 0.5 * cut[k];
    let crossing = |range: &mut dyn Iterator<Item = usize>, step: isize| -> f64 {
        for i in range {
            if cut[i] <= half {
                let prev = (i as isize - step) as usize;
                let t = (cut[prev] - half) / (cut[prev] - cut[i]);
                return axis[prev] + t * (axis[i] - axis[prev]);
            }
        }
        if step > 0 {
            axis[axis.len() - 1]
        } else {
            axis[0]
        }
    };
    let hi = crossing(&mut (k + 1..axis.len()), 1);
    let lo = crossing(&mut (0..k).rev(), -1);
    let step = (axis[1] - axis[0]).abs();
    (hi - lo).max(step)
}

pub fn pattern_metrics(p: &RadiationPattern, budget: &PowerBudget) -> Result<PatternMetrics> {
    let (nt, np) = (p.thetas.len(), p.phis.len());
    if nt < 3 || np < 3 {
        return Err(Error::invalid("pattern grid too small"));
    }
    let total = p.integral();
    if !(total > 0.0) {
        return Err(Error::invalid("pattern carries no power"));
    }
    let (mut bi, mut bj, mut best) = (0, 0, f64::NEG_INFINITY);
    for i in 0..nt {
        for j in 0..np {
            let v = p.at(i, j);
            if v > best {
                best = v;
                bi = i;
                bj = j;
            }
        }
    }
    let on_boundary = bi == 0 || bi + 1 == nt || bj == 0 || bj + 1 == np;
    let dt = p.thetas[1] - p.thetas[0];
    let dp = p.phis[1] - p.phis[0];
    let mut theta_peak = p.thetas[bi];
    let mut phi_peak = p.phis[bj];
    if bi > 0 && bi + 1 < nt {
        theta_peak += dt * parabolic_offset(p.at(bi - 1, bj), best, p.at(bi + 1, bj));
    }
    if bj > 0 && bj + 1 < np {
        phi_peak += dp * parabolic_offset(p.at(bi, bj - 1), best, p.at(bi, bj + 1));
    }
    let theta_cut: Vec<f64> = (0..nt).map(|i| p.at(i, bj)).collect();
    let phi_cut: Vec<f64> = (0..np).map(|j| p.at(bi, j)).collect();

    let directivity = 4.0 * PI * best / total;
    let gain = directivity * budget.radiation_efficiency() * (1.0 - budget.p_reflected);
    Ok(PatternMetrics {
        theta_peak,
        phi_peak,
        directivity_dbi: 10.0 * directivity.log10(),
        realized_gain_dbi: 10.0 * gain.log10(),
        hpbw_theta: half_power_width(&p.thetas, &theta_cut, bi),
        hpbw_phi: half_power_width(&p.phis, &phi_cut, bj),
        on_boundary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const F: f64 = 31e9;

    fn k0() -> f64 {
        2.0 * PI * F / C0
    }

    fn line_source(n: usize, dx: f64, beta: f64, y: f64) -> ApertureField {
        ApertureField {
            samples: (0..n)
                .map(|k| {
                    let x = k as f64 * dx;
                    ApertureSample {
                        x,
                        y,
                        e: Complex64::from_polar(1.0, -beta * x),
                        beta,
                    }
                })
                .collect(),
            sub_samples_per_cell: 8,
        }
    }

    fn lossless_budget() -> PowerBudget {
        PowerBudget {
            p_reflected: 0.0,
            p_through: 0.0,
            p_radiated: 1.0,
            p_dissipated: 0.0,
        }
    }

    #[test]
    fn weights_follow_shorted_counts() {
        let cal = CalibrationConstants {
            sigma: 0.8,
            psi0: 1.2,
            ..Default::default()
        };
        let tw = transverse_weights(&ControlState::canonical(6, 0.5e-12, 6), &cal);
        assert_relative_eq!(tw.a_left, 0.2, max_relative = 1e-12);
        assert_eq!(tw.a_right, 1.0);
        assert_eq!(tw.psi, 1.2);
        let mut s = ControlState::canonical(6, 0.5e-12, 2);
        s.cells[4].diode_right = true;
        s.cells[5].diode_right = true;
        let tw = transverse_weights(&s, &cal);
        assert_eq!(tw.a_left, tw.a_right);
        assert_eq!(tw.psi, 0.0);
    }

    #[test]
    fn single_sample_is_element_pattern() {
        let ap = line_source(1, 1e-3, 0.0, 0.0);
        let grid = GridSpec::hemisphere(2.0, 2.0);
        let p = compute_pattern(&ap, F, &grid, 1.0).unwrap();
        for (i, t) in p.thetas.iter().enumerate() {
            for j in 0..p.phis.len() {
                assert_relative_eq!(p.at(i, j), t.to_radians().cos(), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn isotropic_has_unit_directivity() {
        let ap = line_source(1, 1e-3, 0.0, 0.0);
        let p = compute_pattern(&ap, F, &GridSpec::full_sphere(0.5, 0.5), 0.0).unwrap();
        assert_relative_eq!(p.integral(), 4.0 * PI, max_relative = 1e-4);
        let m = pattern_metrics(&p, &lossless_budget()).unwrap();
        assert!(m.directivity_dbi.abs() < 1e-3, "{}", m.directivity_dbi);
        assert_eq!(m.realized_gain_dbi, m.directivity_dbi);
    }

    #[test]
    fn uniform_array_peak_matches_phase_slope() {
        let grid = GridSpec::hemisphere(0.5, 1.0);
        for frac in [-0.6, -0.2, 0.0, 0.3, 0.7] {
            let ap = line_source(48, 0.625e-3, frac * k0(), 0.0);
            let p = compute_pattern(&ap, F, &grid, 0.0).unwrap();
            let m = pattern_metrics(&p, &lossless_budget()).unwrap();
            let want = frac.asin().to_degrees();
            assert!((m.theta_peak - want).abs() <= 0.5, "{} vs {want}", m.theta_peak);
        }
    }

    #[test]
    fn periodic_sampling_gives_grating_lobe() {
        // One sample per 5 mm period: the n = −1 lobe of a slow wave.
        let beta = 1.6 * k0();
        let d = 5e-3;
        let ap = line_source(12, d, beta, 0.0);
        let p = compute_pattern(&ap, F, &GridSpec::hemisphere(0.5, 1.0), 0.0).unwrap();
        let m = pattern_metrics(&p, &lossless_budget()).unwrap();
        let lambda = C0 / F;
        let want = (beta / k0() - lambda / d).asin().to_degrees();
        assert!((m.theta_peak - want).abs() <= 0.5, "{} vs {want}", m.theta_peak);
    }

    #[test]
    fn line_source_directivity_matches_closed_form() {
        // Uniform broadside line of length L: D = a / (Si(2a) − sin²a / a), a = k0·L/2.
        let l = 39e-3;
        let n = 391;
        let ap = line_source(n, l / (n - 1) as f64, 0.0, 0.0);
        let p = compute_pattern(&ap, F, &GridSpec::full_sphere(0.25, 0.5), 0.0).unwrap();
        let m = pattern_metrics(&p, &lossless_budget()).unwrap();
        let a = k0() * l / 2.0;
        let d = a / (sine_integral(2.0 * a) - a.sin().powi(2) / a);
        let want = 10.0 * d.log10();
        assert!((m.directivity_dbi - want).abs() < 0.5, "{} vs {want}", m.directivity_dbi);
    }

    fn sine_integral(x: f64) -> f64 {
        // Composite Simpson on sin(t)/t.
        let n = 20_000;
        let h = x / n as f64;
        let g = |t: f64| if t == 0.0 { 1.0 } else { t.sin() / t };
        let mut s = g(0.0) + g(x);
        for i in 1..n {
            s += g(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    #[test]
    fn sine_integral_reference() {
        assert_relative_eq!(sine_integral(1.0), 0.946_083_070_367_183, max_relative = 1e-12);
        assert_relative_eq!(sine_integral(10.0), 1.658_347_594_218_874, max_relative = 1e-12);
    }

    #[test]
    fn normalization_converges() {
        let ap = line_source(48, 0.625e-3, 0.4 * k0(), 2e-3);
        let coarse = compute_pattern(&ap, F, &GridSpec::hemisphere(0.5, 1.0), 1.0)
            .unwrap()
            .normalized_to(0.7);
        assert_relative_eq!(coarse.integral(), 0.7, max_relative = 1e-12);
        let fine = compute_pattern(&ap, F, &GridSpec::hemisphere(0.1, 0.2), 1.0)
            .unwrap()
            .scaled(coarse.scale);
        assert_relative_eq!(fine.integral(), 0.7, max_relative = 1e-2);
    }

    #[test]
    fn transverse_phase_mirrors() {
        let mut ap = line_source(48, 0.625e-3, 0.3 * k0(), 2e-3);
        let other: Vec<ApertureSample> = ap
            .samples
            .iter()
            .map(|s| ApertureSample {
                y: -s.y,
                e: s.e * 0.6,
                ..*s
            })
            .collect();
        let rot = Complex64::from_polar(1.0, 0.8);
        let base = ap.samples.clone();
        ap.samples = base.iter().map(|s| ApertureSample { e: s.e * rot.conj(), ..*s }).collect();
        ap.samples.extend(other.iter().map(|s| ApertureSample { e: s.e * rot, ..*s }));
        let grid = GridSpec::hemisphere(0.5, 1.0);
        let m1 = pattern_metrics(&compute_pattern(&ap, F, &grid, 1.0).unwrap(), &lossless_budget()).unwrap();

        let mirrored = ApertureField {
            samples: ap
                .samples
                .iter()
                .map(|s| ApertureSample { y: -s.y, ..*s })
                .collect(),
            ..ap.clone()
        };
        let m2 = pattern_metrics(&compute_pattern(&mirrored, F, &grid, 1.0).unwrap(), &lossless_budget())
            .unwrap();
        assert!(m1.phi_peak.abs() > 5.0);
        assert!((m1.phi_peak + m2.phi_peak).abs() <= 1.0);
        assert!((m1.theta_peak - m2.theta_peak).abs() <= 0.5);
    }

    #[test]
    fn realized_gain_applies_efficiency_and_mismatch() {
        // Two lines half a wavelength apart so the φ cut has a beam too.
        let half = 0.25 * C0 / F;
        let mut ap = line_source(48, 0.625e-3, 0.0, half);
        ap.samples.extend(line_source(48, 0.625e-3, 0.0, -half).samples);
        let p = compute_pattern(&ap, F, &GridSpec::default(), 1.0).unwrap();
        let b = PowerBudget {
            p_reflected: 0.1,
            p_through: 0.1,
            p_radiated: 0.64,
            p_dissipated: 0.16,
        };
        let m = pattern_metrics(&p, &b).unwrap();
        let want = m.directivity_dbi + 10.0 * (0.8f64 * 0.9).log10();
        assert_relative_eq!(m.realized_gain_dbi, want, max_relative = 1e-12);
        assert!(m.hpbw_theta > 0.0 && m.hpbw_phi > 0.0);
        assert!(!m.on_boundary);
    }

    #[test]
    fn window_shapes() {
        assert_eq!(cell_window(0.3, 0.0), 1.0);
        assert_relative_eq!(cell_window(0.5, 1.0), 2.0);
        let mean: f64 = (0..8).map(|j| cell_window((j as f64 + 0.5) / 8.0, 1.0)).sum::<f64>() / 8.0;
        assert!(mean.abs() < 1e-12);
    }

    #[test]
    fn empty_aperture_is_rejected() {
        let ap = ApertureField {
            samples: vec![],
            sub_samples_per_cell: 8,
        };
        assert!(compute_pattern(&ap, F, &GridSpec::default(), 1.0).is_err());
    }

    #[test]
    fn refined_peak_is_exact_for_uniform_line() {
        // Symmetric amplitude, linear phase: the maximum sits exactly at asin(β/k0).
        for frac in [-0.45, 0.1, 0.62] {
            let ap = line_source(48, 0.625e-3, frac * k0(), 0.0);
            let p = compute_pattern(&ap, F, &GridSpec::hemisphere(0.5, 1.0), 0.0).unwrap();
            let m = pattern_metrics(&p, &lossless_budget()).unwrap();
            let (t, _, u) = refine_peak(&ap, F, 0.0, (m.theta_peak, m.phi_peak), (0.5, 1.0));
            let want = frac.asin().to_degrees();
            assert!((t - want).abs() < 1e-6, "{t} vs {want}");
            assert_relative_eq!(u, 48.0 * 48.0, max_relative = 1e-9);
        }
    }
}
