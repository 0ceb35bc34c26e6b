//! Lumped models of the tuning elements and the 24-element control state.
//!
//! Capacitance, not bias voltage, is the control variable throughout; the
//! C–V law only converts voltage-domain input.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Relative slack when checking a capacitance against its range, so values
/// that round-tripped through text still validate.
const RANGE_SLACK: f64 = 1e-9;

/// Parametric varactor: capacitance range, series-resistance Q model and an
/// abrupt-junction C–V law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VaractorSpec {
    pub c_min: f64,
    pub c_max: f64,
    /// Quality factor at `f0_q`; `f64::INFINITY` means lossless.
    pub q_at_f0: f64,
    pub f0_q: f64,
    pub cv_c0: f64,
    pub cv_vj: f64,
    pub cv_m: f64,
    /// Optional `(frequency, Q)` table for sensitivity studies, ascending in
    /// frequency. Empty means constant `q_at_f0`.
    #[serde(default)]
    pub q_table: Vec<(f64, f64)>,
}

impl Default for VaractorSpec {
    fn default() -> Self {
        Self {
            c_min: 0.2e-12,
            c_max: 1.0e-12,
            q_at_f0: 15.0,
            f0_q: 31e9,
            cv_c0: 1.0e-12,
            cv_vj: 0.7,
            cv_m: 0.5,
            q_table: Vec::new(),
        }
    }
}

impl VaractorSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.c_min > 0.0 && self.c_min < self.c_max) {
            return Err(Error::invalid(format!(
                "need 0 < c_min < c_max, got c_min = {}, c_max = {}",
                self.c_min, self.c_max
            )));
        }
        if !(self.q_at_f0 > 0.0) {
            return Err(Error::invalid(format!("q = {} <= 0", self.q_at_f0)));
        }
        if !(self.f0_q > 0.0) {
            return Err(Error::invalid(format!("f_q = {} <= 0", self.f0_q)));
        }
        if !(self.cv_c0 > 0.0 && self.cv_vj > 0.0 && self.cv_m >= 0.0) {
            return Err(Error::invalid("C-V law needs c0 > 0, vj > 0, m >= 0"));
        }
        if self.q_table.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::invalid("q_table frequencies must be ascending"));
        }
        if self.q_table.iter().any(|&(_, q)| !(q > 0.0)) {
            return Err(Error::invalid("q_table entries must be positive"));
        }
        Ok(())
    }

    pub fn contains(&self, c: f64) -> bool {
        c >= self.c_min * (1.0 - RANGE_SLACK) && c <= self.c_max * (1.0 + RANGE_SLACK)
    }

    /// Series resistance `1/(ω_q·c·Q)`, frozen at `f0_q`.
    pub fn series_resistance(&self, c: f64) -> f64 {
        if self.q_at_f0.is_infinite() {
            0.0
        } else {
            1.0 / (2.0 * PI * self.f0_q * c * self.q_at_f0)
        }
    }
}

/// Switching diode with the via row folded into one inductance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiodeSpec {
    pub r_on: f64,
    pub c_off: f64,
    pub l_via: f64,
    /// Patch-to-line coupling capacitance through which the diode branch
    /// loads the line. Zero detaches the patches from the network.
    pub c_couple: f64,
}

impl Default for DiodeSpec {
    // Placeholders, not vendor data.
    fn default() -> Self {
        Self {
            r_on: 1.0,
            c_off: 25e-15,
            l_via: 30e-12,
            c_couple: 5e-15,
        }
    }
}

impl DiodeSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.r_on >= 0.0 && self.c_off >= 0.0 && self.l_via >= 0.0 && self.c_couple >= 0.0) {
            return Err(Error::invalid(
                "diode parameters r_on, c_off, l_via, c_couple must be >= 0",
            ));
        }
        Ok(())
    }
}

/// Both device models, as carried through the forward model.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DeviceSpecs {
    pub varactor: VaractorSpec,
    pub diode: DiodeSpec,
}

impl DeviceSpecs {
    pub fn validate(&self) -> Result<()> {
        self.varactor.validate()?;
        self.diode.validate()
    }
}

/// Varactor impedance `R_s + 1/(jωc)`.
pub fn varactor_impedance(c: f64, spec: &VaractorSpec, f: f64) -> Result<Complex64> {
    if !spec.contains(c) {
        return Err(Error::invalid(format!(
            "capacitance {c:e} F outside [{:e}, {:e}]",
            spec.c_min, spec.c_max
        )));
    }
    if !(f > 0.0) {
        return Err(Error::invalid(format!("frequency {f} <= 0")));
    }
    let omega = 2.0 * PI * f;
    Ok(Complex64::new(spec.series_resistance(c), -1.0 / (omega * c)))
}

/// Abrupt-junction law `c0 / (1 + v/vj)^m`, clamped to `[c_min, c_max]`.
pub fn varactor_cv(v: f64, spec: &VaractorSpec) -> Result<f64> {
    if !(v >= 0.0) {
        return Err(Error::invalid(format!("negative bias {v} V")));
    }
    let c = spec.cv_c0 / (1.0 + v / spec.cv_vj).powf(spec.cv_m);
    Ok(c.clamp(spec.c_min, spec.c_max))
}

/// Diode branch impedance. `None` is an open branch (off state with no
/// junction capacitance).
pub fn diode_branch(on: bool, spec: &DiodeSpec, f: f64) -> Option<Complex64> {
    let omega = 2.0 * PI * f;
    let x_via = Complex64::new(0.0, omega * spec.l_via);
    if on {
        Some(Complex64::new(spec.r_on, 0.0) + x_via)
    } else if spec.c_off > 0.0 {
        Some(Complex64::new(0.0, -1.0 / (omega * spec.c_off)) + x_via)
    } else {
        None
    }
}

/// Admittance the patch presents to the line: the diode branch behind the
/// coupling capacitance.
pub fn patch_admittance(on: bool, spec: &DiodeSpec, f: f64) -> Complex64 {
    let omega = 2.0 * PI * f;
    match diode_branch(on, spec, f) {
        Some(z) if spec.c_couple > 0.0 => {
            let zc = Complex64::new(0.0, -1.0 / (omega * spec.c_couple));
            1.0 / (z + zc)
        }
        _ => Complex64::new(0.0, 0.0),
    }
}

/// Effective Q at `f` for sensitivity studies: linear in the table when one
/// is given, otherwise constant. `band` is the configured study band.
pub fn q_interp(f: f64, spec: &VaractorSpec, band: (f64, f64)) -> Result<f64> {
    let (lo, hi) = match (spec.q_table.first(), spec.q_table.last()) {
        (Some(a), Some(b)) => (a.0.max(band.0), b.0.min(band.1)),
        _ => band,
    };
    if !(f >= lo && f <= hi) {
        return Err(Error::OutOfRange {
            target: f,
            lo,
            hi,
        });
    }
    if spec.q_table.is_empty() {
        return Ok(spec.q_at_f0);
    }
    let t = &spec.q_table;
    let i = t.partition_point(|p| p.0 <= f).clamp(1, t.len().max(2) - 1);
    if t.len() == 1 {
        return Ok(t[0].1);
    }
    let (f0, q0) = t[i - 1];
    let (f1, q1) = t[i];
    Ok(q0 + (q1 - q0) * (f - f0) / (f1 - f0))
}

/// Loading of one unit cell: the varactors at its two edges and the diode
/// states of the two adjacent patches (`true` = shorted).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellLoading {
    pub c_left: f64,
    pub c_right: f64,
    pub diode_left: bool,
    pub diode_right: bool,
}

/// The full control vector: two capacitances and two diode bits per cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlState {
    pub cells: Vec<CellLoading>,
}

impl ControlState {
    /// All varactors at `c`, all patches open.
    pub fn uniform(n_cells: usize, c: f64) -> Self {
        Self {
            cells: vec![
                CellLoading {
                    c_left: c,
                    c_right: c,
                    diode_left: false,
                    diode_right: false,
                };
                n_cells
            ],
        }
    }

    /// Uniform capacitance with the canonical diode pattern for asymmetry
    /// index `k`: `|k|` patches shorted on one side, filled from the port-1
    /// end (left for `k > 0`, right for `k < 0`).
    pub fn canonical(n_cells: usize, c: f64, k: i32) -> Self {
        let mut s = Self::uniform(n_cells, c);
        s.set_asymmetry(k);
        s
    }

    pub fn set_asymmetry(&mut self, k: i32) {
        let n = k.unsigned_abs() as usize;
        for (i, cell) in self.cells.iter_mut().enumerate() {
            cell.diode_left = k > 0 && i < n;
            cell.diode_right = k < 0 && i < n;
        }
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    /// Shorted patch counts `(N_L, N_R)`.
    pub fn shorted_counts(&self) -> (usize, usize) {
        let l = self.cells.iter().filter(|c| c.diode_left).count();
        let r = self.cells.iter().filter(|c| c.diode_right).count();
        (l, r)
    }

    pub fn asymmetry(&self) -> i32 {
        let (l, r) = self.shorted_counts();
        l as i32 - r as i32
    }

    /// Capacitances in control order: left cells 1..n, then right cells 1..n.
    pub fn capacitances(&self) -> Vec<f64> {
        self.cells
            .iter()
            .map(|c| c.c_left)
            .chain(self.cells.iter().map(|c| c.c_right))
            .collect()
    }

    pub fn set_capacitance(&mut self, idx: usize, c: f64) {
        let n = self.cells.len();
        if idx < n {
            self.cells[idx].c_left = c;
        } else {
            self.cells[idx - n].c_right = c;
        }
    }

    /// Diode bits as hex: bit `i` is left cell `i+1`, bit `n+i` right cell `i+1`.
    pub fn diodes_hex(&self) -> String {
        let n = self.cells.len();
        let mut bits: u64 = 0;
        for (i, c) in self.cells.iter().enumerate() {
            if c.diode_left {
                bits |= 1 << i;
            }
            if c.diode_right {
                bits |= 1 << (n + i);
            }
        }
        let digits = (2 * n).div_ceil(4).max(1);
        format!("{bits:0digits$x}")
    }

    /// Mirror image: left and right swapped in every cell.
    pub fn mirrored(&self) -> Self {
        Self {
            cells: self
                .cells
                .iter()
                .map(|c| CellLoading {
                    c_left: c.c_right,
                    c_right: c.c_left,
                    diode_left: c.diode_right,
                    diode_right: c.diode_left,
                })
                .collect(),
        }
    }

    pub fn validate(&self, spec: &VaractorSpec, n_cells: usize) -> Result<()> {
        if self.cells.len() != n_cells {
            return Err(Error::invalid(format!(
                "state has {} cells, geometry has {n_cells}",
                self.cells.len()
            )));
        }
        for (i, c) in self.capacitances().iter().enumerate() {
            if !spec.contains(*c) {
                return Err(Error::invalid(format!(
                    "varactor {} = {c:e} F outside [{:e}, {:e}]",
                    i + 1,
                    spec.c_min,
                    spec.c_max
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn lossless_varactor_is_reactive() {
        let spec = VaractorSpec {
            q_at_f0: f64::INFINITY,
            ..Default::default()
        };
        let z = varactor_impedance(0.5e-12, &spec, 31e9).unwrap();
        assert_eq!(z.re, 0.0);
        assert_relative_eq!(z.im, -1.0 / (2.0 * PI * 31e9 * 0.5e-12), max_relative = 1e-15);
    }

    #[test]
    fn series_resistance_from_q() {
        let spec = VaractorSpec {
            q_at_f0: 10.0,
            f0_q: 31e9,
            ..Default::default()
        };
        let z = varactor_impedance(1e-12, &spec, 28e9).unwrap();
        // 1/(2π·31e9·1e-12·10)
        assert_relative_eq!(z.re, 0.513_403_042_2, max_relative = 1e-9);
        let half_q = VaractorSpec {
            q_at_f0: 5.0,
            ..spec.clone()
        };
        assert_relative_eq!(
            half_q.series_resistance(1e-12),
            2.0 * spec.series_resistance(1e-12),
            max_relative = 1e-15
        );
    }

    #[test]
    fn varactor_range_is_enforced() {
        let spec = VaractorSpec::default();
        assert!(varactor_impedance(0.1e-12, &spec, 31e9).is_err());
        assert!(varactor_impedance(1.1e-12, &spec, 31e9).is_err());
        assert!(varactor_impedance(0.5e-12, &spec, 0.0).is_err());
    }

    #[test]
    fn cv_law() {
        let spec = VaractorSpec {
            c_min: 0.1e-12,
            c_max: 2e-12,
            cv_c0: 1e-12,
            cv_vj: 0.7,
            cv_m: 0.5,
            ..Default::default()
        };
        assert_relative_eq!(varactor_cv(0.0, &spec).unwrap(), 1e-12);
        assert_relative_eq!(varactor_cv(2.1, &spec).unwrap(), 0.5e-12, max_relative = 1e-12);
        assert_eq!(varactor_cv(1e9, &spec).unwrap(), spec.c_min);
        assert!(varactor_cv(-0.1, &spec).is_err());
        let clamped = VaractorSpec {
            c_max: 0.8e-12,
            ..spec.clone()
        };
        assert_eq!(varactor_cv(0.0, &clamped).unwrap(), 0.8e-12);
        let mut last = f64::INFINITY;
        for i in 0..200 {
            let c = varactor_cv(i as f64 * 0.05, &spec).unwrap();
            assert!(c <= last);
            last = c;
        }
    }

    #[test]
    fn diode_states() {
        let ideal = DiodeSpec {
            r_on: 0.0,
            c_off: 0.0,
            l_via: 0.0,
            c_couple: 5e-15,
        };
        assert_eq!(diode_branch(true, &ideal, 31e9), Some(Complex64::new(0.0, 0.0)));
        assert_eq!(diode_branch(false, &ideal, 31e9), None);

        let spec = DiodeSpec {
            r_on: 1.0,
            l_via: 30e-12,
            ..Default::default()
        };
        let z = diode_branch(true, &spec, 31e9).unwrap();
        assert_eq!(z.re, 1.0);
        assert_relative_eq!(z.im, 5.843_362_3, max_relative = 1e-6);
    }

    #[test]
    fn diode_on_is_lower_impedance_than_off() {
        for r_on in [0.0, 1.0, 5.0] {
            for c_off in [1e-15, 25e-15, 50e-15] {
                let spec = DiodeSpec {
                    r_on,
                    c_off,
                    ..Default::default()
                };
                for i in 0..=12 {
                    let f = 28e9 + i as f64 * 0.5e9;
                    let on = diode_branch(true, &spec, f).unwrap().norm();
                    let off = diode_branch(false, &spec, f).unwrap().norm();
                    assert!(on < off);
                }
            }
        }
    }

    #[test]
    fn q_profiles() {
        let band = (28e9, 34e9);
        let spec = VaractorSpec {
            q_at_f0: 15.0,
            ..Default::default()
        };
        for f in [28e9, 30.3e9, 34e9] {
            assert_eq!(q_interp(f, &spec, band).unwrap(), 15.0);
        }
        let table = VaractorSpec {
            q_table: vec![(28e9, 20.0), (34e9, 10.0)],
            ..spec.clone()
        };
        assert_relative_eq!(q_interp(31e9, &table, band).unwrap(), 15.0, max_relative = 1e-12);
        assert!(matches!(
            q_interp(35e9, &table, band),
            Err(Error::OutOfRange { .. })
        ));
        assert!(q_interp(20e9, &spec, band).is_err());
    }

    #[test]
    fn canonical_patterns_and_hex() {
        let s = ControlState::canonical(6, 0.5e-12, 3);
        assert_eq!(s.shorted_counts(), (3, 0));
        assert_eq!(s.diodes_hex(), "007");
        let s = ControlState::canonical(6, 0.5e-12, -6);
        assert_eq!(s.asymmetry(), -6);
        assert_eq!(s.diodes_hex(), "fc0");
        assert_eq!(s.mirrored().asymmetry(), 6);
        assert_eq!(ControlState::uniform(6, 1e-12).diodes_hex(), "000");
    }

    #[test]
    fn state_validation() {
        let spec = VaractorSpec::default();
        let mut s = ControlState::uniform(6, 0.6e-12);
        assert!(s.validate(&spec, 6).is_ok());
        assert!(s.validate(&spec, 5).is_err());
        s.set_capacitance(7, 1.5e-12);
        assert_eq!(s.cells[1].c_right, 1.5e-12);
        assert!(s.validate(&spec, 6).is_err());
    }
}
