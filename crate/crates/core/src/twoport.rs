//! Two-port network algebra and closed-form microstrip line parameters.
//!
//! Networks are carried as chain (ABCD) matrices, which multiply under
//! cascade, and converted to scattering parameters at a real reference
//! impedance when port quantities are needed.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::{C0, MU0};

const ONE: Complex64 = Complex64::new(1.0, 0.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Dielectric substrate of the microstrip.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubstrateSpec {
    pub eps_r: f64,
    pub tan_delta: f64,
    /// Thickness in meters.
    pub height: f64,
}

impl SubstrateSpec {
    pub fn new(eps_r: f64, tan_delta: f64, height: f64) -> Result<Self> {
        let s = Self {
            eps_r,
            tan_delta,
            height,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps_r >= 1.0) {
            return Err(Error::invalid(format!("eps_r = {} < 1", self.eps_r)));
        }
        if !(self.tan_delta >= 0.0) {
            return Err(Error::invalid(format!("tan_delta = {} < 0", self.tan_delta)));
        }
        if !(self.height > 0.0) {
            return Err(Error::invalid(format!("height = {} <= 0", self.height)));
        }
        Ok(())
    }
}

/// Quasi-TEM parameters of a uniform microstrip section.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineParams {
    pub eps_eff: f64,
    /// Characteristic impedance in ohms.
    pub z0: f64,
    /// Dielectric attenuation in nepers per meter.
    pub alpha_d: f64,
}

impl LineParams {
    /// Lossless propagation constant `j·√eps_eff·k0` at frequency `f`.
    pub fn gamma_lossless(&self, f: f64) -> Complex64 {
        Complex64::new(0.0, self.eps_eff.sqrt() * 2.0 * PI * f / C0)
    }
}

/// Static (zero-frequency) effective permittivity and impedance from the
/// Hammerstad–Jensen closed form for a zero-thickness strip.
pub fn microstrip_static(width: f64, substrate: &SubstrateSpec) -> Result<(f64, f64)> {
    if !(width > 0.0) {
        return Err(Error::invalid(format!("strip width {width} <= 0")));
    }
    substrate.validate()?;
    let er = substrate.eps_r;
    let u = width / substrate.height;
    let a = 1.0
        + ((u.powi(4) + (u / 52.0).powi(2)) / (u.powi(4) + 0.432)).ln() / 49.0
        + (1.0 + (u / 18.1).powi(3)).ln() / 18.7;
    let b = 0.564 * ((er - 0.9) / (er + 3.0)).powf(0.053);
    let eps_eff = (er + 1.0) / 2.0 + (er - 1.0) / 2.0 * (1.0 + 10.0 / u).powf(-a * b);

    let eta0 = MU0 * C0;
    let fu = 6.0 + (2.0 * PI - 6.0) * (-(30.666 / u).powf(0.7528)).exp();
    let z01 = eta0 / (2.0 * PI) * (fu / u + (1.0 + (2.0 / u).powi(2)).sqrt()).ln();
    Ok((eps_eff, z01 / eps_eff.sqrt()))
}

/// Quasi-TEM microstrip parameters at frequency `f`.
///
/// The static values come from Hammerstad–Jensen; the frequency dependence
/// of the effective permittivity follows Kirschning–Jansen. The impedance is
/// the static value. Dielectric loss uses the usual filling-factor form
/// `α_d = k0·εr·(εeff − 1)·tanδ / (2·√εeff·(εr − 1))`, which is zero for an
/// air substrate.
pub fn microstrip_params(width: f64, substrate: &SubstrateSpec, f: f64) -> Result<LineParams> {
    if !(f > 0.0) {
        return Err(Error::invalid(format!("frequency {f} <= 0")));
    }
    let (eps_static, z0) = microstrip_static(width, substrate)?;
    let er = substrate.eps_r;
    let u = width / substrate.height;
    // Kirschning–Jansen normalized frequency in GHz·mm.
    let fn_ = f * 1e-9 * substrate.height * 1e3;
    let p1 = 0.27488 + (0.6315 + 0.525 / (1.0 + 0.0157 * fn_).powi(20)) * u
        - 0.065683 * (-8.7513 * u).exp();
    let p2 = 0.33622 * (1.0 - (-0.03442 * er).exp());
    let p3 = 0.0363 * (-4.6 * u).exp() * (1.0 - (-(fn_ / 38.7).powf(4.97)).exp());
    let p4 = 1.0 + 2.751 * (1.0 - (-(er / 15.916).powi(8)).exp());
    let p = p1 * p2 * ((0.1844 + p3 * p4) * fn_).powf(1.5763);
    let eps_eff = er - (er - eps_static) / (1.0 + p);

    let alpha_d = if er > 1.0 {
        let k0 = 2.0 * PI * f / C0;
        k0 * er * (eps_eff - 1.0) * substrate.tan_delta / (2.0 * eps_eff.sqrt() * (er - 1.0))
    } else {
        0.0
    };
    Ok(LineParams {
        eps_eff,
        z0,
        alpha_d,
    })
}

/// Chain (ABCD) matrix of a two-port.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Abcd {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
}

impl Abcd {
    pub fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Self {
        Self { a, b, c, d }
    }

    pub fn identity() -> Self {
        Self::new(ONE, ZERO, ZERO, ONE)
    }

    pub fn determinant(&self) -> Complex64 {
        self.a * self.d - self.b * self.c
    }

    /// `self` followed by `next`; port 1 of `self` is port 1 of the result.
    pub fn then(&self, next: &Abcd) -> Abcd {
        Abcd {
            a: self.a * next.a + self.b * next.c,
            b: self.a * next.b + self.b * next.d,
            c: self.c * next.a + self.d * next.c,
            d: self.c * next.b + self.d * next.d,
        }
    }

    /// `n` identical copies in cascade.
    pub fn repeat(&self, n: usize) -> Abcd {
        let mut acc = Abcd::identity();
        let mut base = *self;
        let mut k = n;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.then(&base);
            }
            base = base.then(&base);
            k >>= 1;
        }
        acc
    }

    /// Largest absolute element difference, scaled by the larger operand norm.
    pub fn rel_diff(&self, other: &Abcd) -> f64 {
        let diff = [
            self.a - other.a,
            self.b - other.b,
            self.c - other.c,
            self.d - other.d,
        ]
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
        let scale = [self.a, self.b, self.c, self.d, other.a, other.b, other.c, other.d]
            .iter()
            .map(|z| z.norm())
            .fold(1e-300, f64::max);
        diff / scale
    }
}

/// Scattering parameters at a real reference impedance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatterMatrix {
    pub s11: Complex64,
    pub s12: Complex64,
    pub s21: Complex64,
    pub s22: Complex64,
    pub z_ref: f64,
}

impl ScatterMatrix {
    /// `|s11|` in dB (20·log10).
    pub fn s11_db(&self) -> f64 {
        20.0 * self.s11.norm().log10()
    }

    pub fn s21_db(&self) -> f64 {
        20.0 * self.s21.norm().log10()
    }
}

/// Uniform line section: `a = d = cosh γℓ`, `b = Z₀ sinh γℓ`, `c = sinh γℓ / Z₀`.
pub fn tline_abcd(params: &LineParams, gamma: Complex64, length: f64) -> Abcd {
    line_abcd(params.z0, gamma, length)
}

/// Same as [`tline_abcd`] with the characteristic impedance given directly.
pub fn line_abcd(z0: f64, gamma: Complex64, length: f64) -> Abcd {
    let gl = gamma * length;
    let ch = gl.cosh();
    let sh = gl.sinh();
    Abcd::new(ch, sh * z0, sh / z0, ch)
}

pub fn shunt_abcd(y: Complex64) -> Abcd {
    Abcd::new(ONE, ZERO, y, ONE)
}

pub fn series_abcd(z: Complex64) -> Abcd {
    Abcd::new(ONE, z, ZERO, ONE)
}

pub fn cascade(left: &Abcd, right: &Abcd) -> Abcd {
    left.then(right)
}

/// Chain-to-scattering conversion at the real reference impedance `z_ref`.
pub fn abcd_to_s(net: &Abcd, z_ref: f64) -> Result<ScatterMatrix> {
    if !(z_ref > 0.0) {
        return Err(Error::invalid(format!("reference impedance {z_ref} <= 0")));
    }
    let z = z_ref;
    let den = net.a * z + net.b + net.c * z * z + net.d * z;
    if !(den.norm() > 1e-300) || !den.is_finite() {
        return Err(Error::DegenerateNetwork(format!(
            "a·z + b + c·z² + d·z = {den} at z_ref = {z}"
        )));
    }
    Ok(ScatterMatrix {
        s11: (net.a * z + net.b - net.c * z * z - net.d * z) / den,
        s12: net.determinant() * 2.0 * z / den,
        s21: Complex64::new(2.0 * z, 0.0) / den,
        s22: (-net.a * z + net.b - net.c * z * z + net.d * z) / den,
        z_ref,
    })
}

/// Bloch propagation constant of a periodic cell of length `d_period`.
///
/// Solves `cosh(γ_B·d) = (a + d)/2` on the principal branch with
/// `Re γ_B ≥ 0`; a purely imaginary result is taken with `Im γ_B ≥ 0`.
/// The phase is therefore only known modulo `2π/d`.
pub fn bloch_gamma(cell: &Abcd, d_period: f64) -> Result<Complex64> {
    if !(d_period > 0.0) {
        return Err(Error::invalid(format!("period {d_period} <= 0")));
    }
    let det = cell.determinant();
    if (det - ONE).norm() > 1e-6 {
        return Err(Error::invalid(format!(
            "cell is not reciprocal: det = {det}"
        )));
    }
    let half_trace = (cell.a + cell.d) * 0.5;
    let mut theta = half_trace.acosh();
    if theta.re < 0.0 {
        theta = -theta;
    }
    if theta.re.abs() <= 1e-15 * theta.norm().max(1.0) {
        theta.re = 0.0;
        if theta.im < 0.0 {
            theta.im = -theta.im;
        }
    }
    Ok(theta / d_period)
}

/// Bloch impedance of a symmetric cell (`a = d`), `Z_B = b / sinh(γ_B d)`.
pub fn bloch_impedance(cell: &Abcd, gamma_b: Complex64, d_period: f64) -> Result<Complex64> {
    if (cell.a - cell.d).norm() > 1e-9 * cell.a.norm().max(1.0) {
        return Err(Error::invalid("Bloch impedance needs a symmetric cell"));
    }
    let sh = (gamma_b * d_period).sinh();
    if sh.norm() < 1e-300 {
        return Err(Error::DegenerateNetwork("cell at a band edge".into()));
    }
    Ok(cell.b / sh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn ro4350b() -> SubstrateSpec {
        SubstrateSpec::new(3.66, 0.0037, 1.55e-3).unwrap()
    }

    #[test]
    fn eps_eff_bounded_and_increasing_in_width() {
        let sub = ro4350b();
        let mut last = 1.0;
        for i in 1..=40 {
            let w = i as f64 * 0.125e-3;
            let p = microstrip_params(w, &sub, 31e9).unwrap();
            assert!(p.eps_eff > 1.0 && p.eps_eff < 3.66);
            assert!(p.eps_eff > last, "not increasing at w = {w}");
            last = p.eps_eff;
        }
        let p = microstrip_params(2.5e-3, &sub, 31e9).unwrap();
        assert!(p.eps_eff > 1.0 && p.eps_eff < 3.66);
    }

    #[test]
    fn air_substrate_is_homogeneous() {
        let air = SubstrateSpec::new(1.0, 0.0, 1.55e-3).unwrap();
        let p = microstrip_params(2.5e-3, &air, 31e9).unwrap();
        assert_eq!(p.eps_eff, 1.0);
        assert_eq!(p.alpha_d, 0.0);
    }

    // Evaluated with mpmath at 50 digits from the same Hammerstad–Jensen and
    // Kirschning–Jansen expressions (independent script, not this code).
    #[test]
    fn eps_eff_matches_independent_evaluation() {
        let sub = ro4350b();
        let (es, z0) = microstrip_static(2.5e-3, &sub).unwrap();
        assert_relative_eq!(es, 2.79018885440378, max_relative = 1e-6);
        assert_relative_eq!(z0, 59.9502830369648, max_relative = 1e-6);
        let p = microstrip_params(2.5e-3, &sub, 31e9).unwrap();
        assert_relative_eq!(p.eps_eff, 3.32594152369183, max_relative = 1e-6);
    }

    #[test]
    fn rejects_bad_arguments() {
        let sub = ro4350b();
        assert!(matches!(
            microstrip_params(0.0, &sub, 31e9),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            microstrip_params(1e-3, &sub, -1.0),
            Err(Error::InvalidArgument(_))
        ));
        assert!(SubstrateSpec::new(0.5, 0.0, 1e-3).is_err());
    }

    #[test]
    fn zero_length_line_is_identity() {
        let m = line_abcd(50.0, c(0.1, 900.0), 0.0);
        assert_eq!(m, Abcd::identity());
    }

    #[test]
    fn quarter_wave_line() {
        let beta = 1000.0;
        let m = line_abcd(50.0, c(0.0, beta), PI / 2.0 / beta);
        assert!(m.a.norm() < 1e-12 && m.d.norm() < 1e-12);
        assert!((m.b - c(0.0, 50.0)).norm() < 1e-12);
        assert!((m.c - c(0.0, 1.0 / 50.0)).norm() < 1e-15);
    }

    #[test]
    fn half_sections_cascade_to_full_section() {
        let g = c(3.0, 1234.0);
        let full = line_abcd(47.0, g, 4.2e-3);
        let half = line_abcd(47.0, g, 2.1e-3);
        assert!(cascade(&half, &half).rel_diff(&full) < 1e-12);
    }

    #[test]
    fn shunt_elements() {
        assert_eq!(shunt_abcd(c(0.0, 0.0)), Abcd::identity());
        let s = shunt_abcd(c(0.0, 0.02));
        assert_eq!(s.c, c(0.0, 0.02));
        assert!((s.determinant() - ONE).norm() < 1e-15);
        let y1 = c(0.001, 0.02);
        let y2 = c(0.0, -0.007);
        let both = cascade(&shunt_abcd(y1), &shunt_abcd(y2));
        assert!(both.rel_diff(&shunt_abcd(y1 + y2)) < 1e-15);
    }

    #[test]
    fn cascade_identity_and_determinant() {
        let x = line_abcd(40.0, c(2.0, 700.0), 3e-3).then(&shunt_abcd(c(0.01, 0.03)));
        let y = series_abcd(c(5.0, -20.0)).then(&line_abcd(70.0, c(0.0, 300.0), 1e-3));
        assert!(cascade(&Abcd::identity(), &x).rel_diff(&x) < 1e-15);
        let lhs = cascade(&x, &y).determinant();
        let rhs = x.determinant() * y.determinant();
        assert!((lhs - rhs).norm() < 1e-9);
    }

    #[test]
    fn scattering_of_simple_networks() {
        let s = abcd_to_s(&Abcd::identity(), 50.0).unwrap();
        assert!(s.s11.norm() < 1e-15);
        assert!((s.s21 - ONE).norm() < 1e-15);

        // y·z = 1: s11 = -y z/(2 + y z) = -1/3, s21 = 2/3
        let s = abcd_to_s(&shunt_abcd(c(1.0 / 50.0, 0.0)), 50.0).unwrap();
        assert!((s.s11 - c(-1.0 / 3.0, 0.0)).norm() < 1e-15);
        assert!((s.s21 - c(2.0 / 3.0, 0.0)).norm() < 1e-15);

        // series b = j·z_ref: s11 = j/(2 + j), lossless
        let s = abcd_to_s(&series_abcd(c(0.0, 50.0)), 50.0).unwrap();
        assert!((s.s11 - c(0.0, 1.0) / c(2.0, 1.0)).norm() < 1e-15);
        assert!((s.s11.norm_sqr() + s.s21.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_and_invalid_reference() {
        // a z + b + c z² + d z = 0 with a = d = 0, b = -c z²
        let bad = Abcd::new(ZERO, c(-2500.0, 0.0), ONE, ZERO);
        assert!(matches!(
            abcd_to_s(&bad, 50.0),
            Err(Error::DegenerateNetwork(_))
        ));
        assert!(abcd_to_s(&Abcd::identity(), 0.0).is_err());
    }

    #[test]
    fn bloch_of_plain_line_and_identity() {
        let g = c(0.5, 400.0);
        let d = 5e-3;
        let gb = bloch_gamma(&line_abcd(50.0, g, d), d).unwrap();
        assert!((gb - g).norm() < 1e-9 * g.norm());
        assert_eq!(bloch_gamma(&Abcd::identity(), d).unwrap(), ZERO);
        let active = Abcd::new(c(2.0, 0.0), ZERO, ZERO, c(2.0, 0.0));
        assert!(bloch_gamma(&active, d).is_err());
    }

    #[test]
    fn capacitive_loading_slows_lossless_line() {
        let (z0, beta, d) = (50.0, 500.0, 5e-3);
        let half = line_abcd(z0, c(0.0, beta), d / 2.0);
        let y = c(0.0, 2.0 * PI * 31e9 * 0.02e-12);
        let cell = half.then(&shunt_abcd(y)).then(&half);
        let gb = bloch_gamma(&cell, d).unwrap();
        assert_eq!(gb.re, 0.0);
        // Independent root: bisection on cos(βd) = cos(β0 d) - (B z0/2) sin(β0 d).
        let rhs = (beta * d).cos() - y.im * z0 / 2.0 * (beta * d).sin();
        let (mut lo, mut hi) = (0.0, PI);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid.cos() > rhs {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((gb.im * d - 0.5 * (lo + hi)).abs() < 1e-9);
        assert!(gb.im > beta);
    }
}
