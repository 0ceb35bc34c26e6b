//! Leaky-mode dispersion of the loaded unit cells and the longitudinal
//! network of the whole antenna.
//!
//! Each cell is reduced to a transverse-resonance problem across the strip
//! width: the grounded edge at `y = 0` and the capacitively loaded radiating
//! edge at `y = w`. The resulting `k_t²` fixes the longitudinal phase
//! constant, and a perturbational leakage term sets the attenuation.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::ops::RangeInclusive;

use crate::calibration::CalibrationConstants;
use crate::components::{patch_admittance, varactor_impedance, CellLoading, ControlState, DeviceSpecs};
use crate::error::{Error, Result};
use crate::optim::brent_root;
use crate::twoport::{
    abcd_to_s, line_abcd, microstrip_params, microstrip_static, series_abcd, shunt_abcd, Abcd,
    ScatterMatrix,
    SubstrateSpec,
};
use crate::{C0, MU0};

/// Physical layout of the antenna.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AntennaGeometry {
    /// Radiating length.
    pub length: f64,
    pub port_to_port: f64,
    pub width_feed: f64,
    pub width_mid: f64,
    pub cell_period: f64,
    pub n_cells: usize,
    /// Port impedance the feed-width strip is normalised to.
    pub z_feed: f64,
    pub substrate: SubstrateSpec,
}

impl Default for AntennaGeometry {
    fn default() -> Self {
        Self {
            length: 39e-3,
            port_to_port: 45e-3,
            width_feed: 2.0e-3,
            width_mid: 2.5e-3,
            cell_period: 5e-3,
            n_cells: 6,
            z_feed: 50.0,
            substrate: SubstrateSpec {
                eps_r: 3.66,
                tan_delta: 0.0037,
                height: 1.55e-3,
            },
        }
    }
}

impl AntennaGeometry {
    pub fn validate(&self) -> Result<()> {
        self.substrate.validate()?;
        if self.n_cells == 0 {
            return Err(Error::invalid("n_cells must be >= 1"));
        }
        if !(self.cell_period > 0.0) {
            return Err(Error::invalid("cell_period must be > 0"));
        }
        if !(self.n_cells as f64 * self.cell_period <= self.length * (1.0 + 1e-12)) {
            return Err(Error::invalid(format!(
                "{} cells of {} m do not fit in length {} m",
                self.n_cells, self.cell_period, self.length
            )));
        }
        if !(self.length <= self.port_to_port * (1.0 + 1e-12)) {
            return Err(Error::invalid("length exceeds port_to_port"));
        }
        if !(self.width_feed > 0.0 && self.width_mid >= self.width_feed) {
            return Err(Error::invalid("need width_mid >= width_feed > 0"));
        }
        if !(self.z_feed > 0.0) {
            return Err(Error::invalid("z_feed must be > 0"));
        }
        Ok(())
    }

    /// Position of the first cell edge; the cells sit centred between the ports.
    pub fn cells_start(&self) -> f64 {
        0.5 * (self.port_to_port - self.n_cells as f64 * self.cell_period)
    }

    pub fn cell_center(&self, index: usize) -> f64 {
        self.cells_start() + (index as f64 + 0.5) * self.cell_period
    }

    /// Linear taper from `width_feed` at both ports to `width_mid` half-way.
    pub fn width_at(&self, x: f64) -> f64 {
        let half = 0.5 * self.port_to_port;
        let t = (1.0 - ((x - half) / half).abs()).clamp(0.0, 1.0);
        self.width_feed + (self.width_mid - self.width_feed) * t
    }

    /// Quasi-TEM impedance at `width`, scaled so the feed width sits at `z_feed`.
    pub fn line_impedance(&self, width: f64) -> Result<f64> {
        let (_, z) = microstrip_static(width, &self.substrate)?;
        let (_, z_ref) = microstrip_static(self.width_feed, &self.substrate)?;
        Ok(self.z_feed * z / z_ref)
    }
}

/// Transverse input admittance (per unit susceptance scale) of the grounded
/// strip seen from the open edge: `√τ·cot(√τ·w)`, continued through `τ = 0`.
pub fn transverse_admittance(tau: f64, width: f64) -> f64 {
    let s = tau.abs().sqrt();
    let x = s * width;
    if x < 1e-6 {
        // Series about τ = 0: 1/w − τ·w/3.
        return 1.0 / width - tau * width / 3.0;
    }
    if tau > 0.0 {
        s / x.tan()
    } else {
        s / x.tanh()
    }
}

/// Solves `transverse_admittance(τ, w) = chi` for `τ = k_t²`.
pub fn transverse_root(width: f64, chi: f64) -> Result<f64> {
    if !(width > 0.0) {
        return Err(Error::invalid(format!("width {width} <= 0")));
    }
    if !(chi >= 0.0) || !chi.is_finite() {
        return Err(Error::invalid(format!("edge loading chi = {chi} must be >= 0")));
    }
    let s_max = PI / (2.0 * width);
    if chi == 0.0 {
        return Ok(s_max * s_max);
    }
    let inv_w = 1.0 / width;
    if chi == inv_w {
        return Ok(0.0);
    }
    if chi < inv_w {
        let s = brent_root(
            |s| transverse_admittance(s * s, width) - chi,
            0.0,
            s_max,
            1e-14 * s_max,
            200,
        )?;
        Ok(s * s)
    } else {
        let lo = (chi - inv_w).max(0.0);
        let s = brent_root(
            |s| transverse_admittance(-s * s, width) - chi,
            lo,
            chi,
            1e-14 * chi,
            200,
        )?;
        Ok(-s * s)
    }
}

/// `E(w)² / ∫₀ʷ E² dy` for the transverse field profile of a given `τ`.
pub fn edge_field_ratio(tau: f64, width: f64) -> f64 {
    let s = tau.abs().sqrt();
    let x = s * width;
    if x < 1e-3 {
        return 3.0 / width;
    }
    if tau > 0.0 {
        let e = x.sin();
        e * e / (0.5 * width - (2.0 * x).sin() / (4.0 * s))
    } else {
        let e = x.sinh();
        e * e / ((2.0 * x).sinh() / (4.0 * s) - 0.5 * width)
    }
}

fn series_c(a: f64, b: f64) -> f64 {
    if a.is_infinite() {
        return b;
    }
    if b.is_infinite() {
        return a;
    }
    if a + b <= 0.0 {
        0.0
    } else {
        a * b / (a + b)
    }
}

/// Distributed edge capacitance per side, F/m.
pub fn edge_capacitance(c_var: f64, cal: &CalibrationConstants, d_period: f64) -> f64 {
    cal.kappa * series_c(cal.c_gap, c_var) / d_period + cal.c_fringe_per_m
}

/// Edge loading `chi = ω²μ₀h·C′` of each side of a cell.
pub fn edge_loading(
    cell: &CellLoading,
    cal: &CalibrationConstants,
    f: f64,
    d_period: f64,
    height: f64,
) -> (f64, f64) {
    let omega = 2.0 * PI * f;
    let scale = omega * omega * MU0 * height;
    (
        scale * edge_capacitance(cell.c_left, cal, d_period),
        scale * edge_capacitance(cell.c_right, cal, d_period),
    )
}

/// Dispersion of one loaded cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellDispersion {
    pub width: f64,
    pub chi: f64,
    pub k_t_sq: f64,
    /// Effective permittivity seen by the leaky mode.
    pub eps_mode: f64,
    pub beta: f64,
    /// Total attenuation; includes the reactive decay of an evanescent cell.
    pub alpha: f64,
    pub alpha_leak: f64,
    pub alpha_d: f64,
    pub alpha_comp: f64,
    pub evanescent: bool,
    /// Line impedance used for this cell in the longitudinal network.
    pub z_line: f64,
}

pub fn cell_dispersion(
    geom: &AntennaGeometry,
    index: usize,
    cell: &CellLoading,
    specs: &DeviceSpecs,
    cal: &CalibrationConstants,
    f: f64,
) -> Result<CellDispersion> {
    let k0 = 2.0 * PI * f / C0;
    let d = geom.cell_period;
    let h = geom.substrate.height;
    let width = geom.width_at(geom.cell_center(index));
    let line = microstrip_params(width, &geom.substrate, f)?;
    let z_line = geom.line_impedance(width)?;

    let (chi_l, chi_r) = edge_loading(cell, cal, f, d, h);
    let chi = chi_l + chi_r;
    let tau = transverse_root(width, chi)?;
    let eps_mode = cal.eps_scale * line.eps_eff;
    let b2 = eps_mode * k0 * k0 - tau;

    let mut g_comp = 0.0;
    for c in [cell.c_left, cell.c_right] {
        let z = varactor_impedance(c, &specs.varactor, f)?;
        g_comp += cal.kappa * (1.0 / z).re;
    }
    for on in [cell.diode_left, cell.diode_right] {
        g_comp += patch_admittance(on, &specs.diode, f).re;
    }
    let alpha_comp = g_comp / d * z_line / 2.0;
    let alpha_d = line.alpha_d;

    let (beta, alpha_leak, decay, evanescent) = if b2 > 0.0 {
        let beta = b2.sqrt();
        let kh = k0 * h;
        let leak = cal.g_leak * kh * kh * (k0 / beta) * edge_field_ratio(tau, width);
        (beta, leak, 0.0, false)
    } else {
        (0.0, 0.0, (-b2).sqrt(), true)
    };
    Ok(CellDispersion {
        width,
        chi,
        k_t_sq: tau,
        eps_mode,
        beta,
        alpha: alpha_leak + alpha_d + alpha_comp + decay,
        alpha_leak,
        alpha_d,
        alpha_comp,
        evanescent,
        z_line,
    })
}

/// Dispersion of every cell at one frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct DispersionSample {
    pub f: f64,
    pub k0: f64,
    pub cells: Vec<CellDispersion>,
    /// Cell-averaged phase constant.
    pub beta: f64,
    /// Cell-averaged attenuation.
    pub alpha: f64,
}

pub fn dispersion(
    geom: &AntennaGeometry,
    state: &ControlState,
    specs: &DeviceSpecs,
    cal: &CalibrationConstants,
    f: f64,
) -> Result<DispersionSample> {
    if !(f > 0.0) {
        return Err(Error::invalid(format!("frequency {f} <= 0")));
    }
    state.validate(&specs.varactor, geom.n_cells)?;
    let cells = state
        .cells
        .iter()
        .enumerate()
        .map(|(i, c)| cell_dispersion(geom, i, c, specs, cal, f))
        .collect::<Result<Vec<_>>>()?;
    let n = cells.len() as f64;
    let beta = cells.iter().map(|c| c.beta).sum::<f64>() / n;
    let alpha = cells.iter().map(|c| c.alpha).sum::<f64>() / n;
    Ok(DispersionSample {
        f,
        k0: 2.0 * PI * f / C0,
        cells,
        beta,
        alpha,
    })
}

/// Radiation angle of one space harmonic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarmonicAngle {
    pub n: i32,
    /// Degrees, positive toward port 2; `NaN` when not radiating.
    pub theta_deg: f64,
    pub radiating: bool,
}

pub const DEFAULT_HARMONICS: RangeInclusive<i32> = -2..=1;

/// `θ_n = asin((β + 2πn/d)/k0)` for each `n` in `window`.
pub fn harmonic_angles(beta: f64, f: f64, d_period: f64, window: RangeInclusive<i32>) -> Vec<HarmonicAngle> {
    let k0 = 2.0 * PI * f / C0;
    window
        .map(|n| {
            let s = (beta + 2.0 * PI * n as f64 / d_period) / k0;
            let radiating = s.abs() <= 1.0;
            HarmonicAngle {
                n,
                theta_deg: if radiating { s.asin().to_degrees() } else { f64::NAN },
                radiating,
            }
        })
        .collect()
}

/// Where a shunt's absorbed power goes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    Radiation,
    Dissipation,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Element {
    /// Lossless line; `beta` in rad/m.
    Line { z0: f64, beta: f64, length: f64 },
    Shunt { y: Complex64, kind: LossKind },
    Series { z: Complex64, kind: LossKind },
}

/// Fractions of incident power.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerBudget {
    pub p_reflected: f64,
    pub p_through: f64,
    pub p_radiated: f64,
    pub p_dissipated: f64,
}

impl PowerBudget {
    pub fn total(&self) -> f64 {
        self.p_reflected + self.p_through + self.p_radiated + self.p_dissipated
    }

    /// `p_radiated / (p_radiated + p_dissipated)`; 1 when nothing is absorbed.
    pub fn radiation_efficiency(&self) -> f64 {
        let absorbed = self.p_radiated + self.p_dissipated;
        if absorbed > 0.0 {
            self.p_radiated / absorbed
        } else {
            1.0
        }
    }
}

/// Discretisation of the longitudinal network.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkOptions {
    pub segments_per_cell: usize,
    /// Sections per feed lead.
    pub lead_segments: usize,
    pub z_ref: f64,
}

impl Default for NetworkOptions {
    fn default() -> Self {
        Self {
            segments_per_cell: 8,
            lead_segments: 8,
            z_ref: 50.0,
        }
    }
}

/// A loss of `a = α·Δx` nepers on a line of impedance `z0`, split evenly
/// between a series resistance and a shunt conductance. The pair satisfies
/// `R/L = G/C`, so the section stays matched to `z0`.
fn push_loss(el: &mut Vec<Element>, a: f64, z0: f64, kind: LossKind) {
    if a > 0.0 {
        el.push(Element::Series {
            z: Complex64::new(0.5 * a * z0, 0.0),
            kind,
        });
        el.push(Element::Shunt {
            y: Complex64::new(a / z0, 0.0),
            kind,
        });
        el.push(Element::Series {
            z: Complex64::new(0.5 * a * z0, 0.0),
            kind,
        });
    }
}

/// The antenna as a cascade of lossless line sections and lumped losses,
/// each tagged radiating or dissipative.
#[derive(Debug, Clone)]
pub struct AntennaNetwork {
    elements: Vec<Element>,
    z_ref: f64,
}

impl AntennaNetwork {
    pub fn build(
        geom: &AntennaGeometry,
        state: &ControlState,
        specs: &DeviceSpecs,
        cal: &CalibrationConstants,
        disp: &DispersionSample,
        opts: &NetworkOptions,
    ) -> Result<Self> {
        if opts.segments_per_cell == 0 || opts.lead_segments == 0 {
            return Err(Error::invalid("network needs at least one segment per cell and lead"));
        }
        let f = disp.f;
        let k0 = disp.k0;
        let d = geom.cell_period;
        let x0 = geom.cells_start();
        let mut el = Vec::new();

        let lead = |el: &mut Vec<Element>, start: f64| -> Result<()> {
            if x0 <= 0.0 {
                return Ok(());
            }
            let dx = x0 / opts.lead_segments as f64;
            for j in 0..opts.lead_segments {
                let w = geom.width_at(start + (j as f64 + 0.5) * dx);
                let p = microstrip_params(w, &geom.substrate, f)?;
                let z0 = geom.line_impedance(w)?;
                let beta = p.eps_eff.sqrt() * k0;
                el.push(Element::Line { z0, beta, length: dx / 2.0 });
                push_loss(el, p.alpha_d * dx, z0, LossKind::Dissipation);
                el.push(Element::Line { z0, beta, length: dx / 2.0 });
            }
            Ok(())
        };

        lead(&mut el, 0.0)?;
        let s = opts.segments_per_cell;
        let dx = d / s as f64;
        for (i, (cd, load)) in disp.cells.iter().zip(&state.cells).enumerate() {
            let cell_x = x0 + i as f64 * d;
            for j in 0..s {
                let w = geom.width_at(cell_x + (j as f64 + 0.5) * dx);
                let z0 = geom.line_impedance(w)?;
                let beta = cd.beta;
                el.push(Element::Line { z0, beta, length: dx / 2.0 });
                push_loss(&mut el, cd.alpha_leak * dx, z0, LossKind::Radiation);
                push_loss(&mut el, cd.alpha_d * dx, z0, LossKind::Dissipation);
                el.push(Element::Line { z0, beta, length: dx / 2.0 });
                if j + 1 == s / 2 || (s == 1 && j == 0) {
                    // Varactor reactance is already in β; only its loss is lumped.
                    let mut y = Complex64::new(0.0, 0.0);
                    for c in [load.c_left, load.c_right] {
                        let z = varactor_impedance(c, &specs.varactor, f)?;
                        y += cal.kappa * (1.0 / z).re;
                    }
                    for on in [load.diode_left, load.diode_right] {
                        y += patch_admittance(on, &specs.diode, f);
                    }
                    if y.norm() > 0.0 {
                        el.push(Element::Shunt {
                            y,
                            kind: LossKind::Dissipation,
                        });
                    }
                }
            }
        }
        lead(&mut el, x0 + geom.n_cells as f64 * d)?;
        Ok(Self {
            elements: el,
            z_ref: opts.z_ref,
        })
    }

    pub fn abcd(&self) -> Abcd {
        let mut m = Abcd::identity();
        for e in &self.elements {
            let next = match *e {
                Element::Line { z0, beta, length } => {
                    line_abcd(z0, Complex64::new(0.0, beta), length)
                }
                Element::Shunt { y, .. } => shunt_abcd(y),
                Element::Series { z, .. } => series_abcd(z),
            };
            m = m.then(&next);
        }
        m
    }

    pub fn scattering(&self) -> Result<ScatterMatrix> {
        abcd_to_s(&self.abcd(), self.z_ref)
    }

    /// Power fractions from a backward voltage/current sweep with port 2
    /// terminated in `z_ref`.
    pub fn power_budget(&self) -> Result<PowerBudget> {
        let z = self.z_ref;
        let mut v = Complex64::new(1.0, 0.0);
        let mut i = Complex64::new(1.0 / z, 0.0);
        let mut p_rad = 0.0;
        let mut p_diss = 0.0;
        for e in self.elements.iter().rev() {
            match *e {
                Element::Line { z0, beta, length } => {
                    let (s, c) = (beta * length).sin_cos();
                    let js = Complex64::new(0.0, s);
                    let nv = v * c + i * js * z0;
                    let ni = v * js / z0 + i * c;
                    v = nv;
                    i = ni;
                }
                Element::Shunt { y, kind } => {
                    let p = 0.5 * v.norm_sqr() * y.re;
                    match kind {
                        LossKind::Radiation => p_rad += p,
                        LossKind::Dissipation => p_diss += p,
                    }
                    i += y * v;
                }
                Element::Series { z: zs, kind } => {
                    let p = 0.5 * i.norm_sqr() * zs.re;
                    match kind {
                        LossKind::Radiation => p_rad += p,
                        LossKind::Dissipation => p_diss += p,
                    }
                    v += zs * i;
                }
            }
        }
        let a_inc = v + i * z;
        let a_ref = v - i * z;
        let p_inc = a_inc.norm_sqr() / (8.0 * z);
        if !(p_inc > 0.0) || !p_inc.is_finite() {
            return Err(Error::DegenerateNetwork("no incident power".into()));
        }
        Ok(PowerBudget {
            p_reflected: a_ref.norm_sqr() / (8.0 * z) / p_inc,
            p_through: 0.5 / z / p_inc,
            p_radiated: p_rad / p_inc,
            p_dissipated: p_diss / p_inc,
        })
    }
}

/// Scattering parameters of the full antenna at `f`.
pub fn antenna_two_port(
    geom: &AntennaGeometry,
    state: &ControlState,
    specs: &DeviceSpecs,
    cal: &CalibrationConstants,
    f: f64,
) -> Result<ScatterMatrix> {
    let disp = dispersion(geom, state, specs, cal, f)?;
    AntennaNetwork::build(geom, state, specs, cal, &disp, &NetworkOptions::default())?.scattering()
}

pub fn power_budget(
    geom: &AntennaGeometry,
    state: &ControlState,
    specs: &DeviceSpecs,
    cal: &CalibrationConstants,
    f: f64,
) -> Result<PowerBudget> {
    let disp = dispersion(geom, state, specs, cal, f)?;
    AntennaNetwork::build(geom, state, specs, cal, &disp, &NetworkOptions::default())?.power_budget()
}
