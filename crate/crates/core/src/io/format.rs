//! CSV tables with fixed 9-significant-digit formatting and LF endings.

use crate::farfield::RadiationPattern;
use crate::steering::{DispersionRow, QRow, SteeringMap};

/// C `%.{sig}g`: shortest of fixed and scientific, trailing zeros removed.
/// Non-finite values print as `NaN`, `inf`, `-inf`.
pub fn fmt_g(x: f64, sig: usize) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sig = sig.max(1);
    let sci = format!("{:.*e}", sig - 1, x);
    let (mant, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= sig as i32 {
        let mant = strip_zeros(mant);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mant}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (sig as i32 - 1 - exp).max(0) as usize;
        strip_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// `%.9g`, the CSV and Touchstone number format.
pub fn g9(x: f64) -> String {
    fmt_g(x, 9)
}

fn row(values: &[f64]) -> String {
    values.iter().map(|&v| g9(v)).collect::<Vec<_>>().join(",")
}

pub fn dispersion_csv(rows: &[DispersionRow]) -> String {
    let mut out = String::from("f_ghz,beta_rad_per_m,alpha_np_per_m,k0_rad_per_m,theta_n0_deg,theta_nm1_deg,s11_db\n");
    for r in rows {
        out += &row(&[r.f * 1e-9, r.beta, r.alpha, r.k0, r.theta_n0, r.theta_nm1, r.s11_db]);
        out.push('\n');
    }
    out
}

/// Realized-gain pattern in dBi over the pattern's grid, θ-major.
/// `realized_factor` is the directivity-to-realized-gain ratio.
pub fn pattern_csv(p: &RadiationPattern, realized_factor: f64) -> String {
    let total = p.integral();
    let mut out = String::from("theta_deg,phi_deg,gain_dbi\n");
    for (i, &t) in p.thetas.iter().enumerate() {
        for (j, &ph) in p.phis.iter().enumerate() {
            let d = 4.0 * std::f64::consts::PI * p.at(i, j) / total;
            out += &row(&[t, ph, 10.0 * (d * realized_factor).log10()]);
            out.push('\n');
        }
    }
    out
}

pub fn map_csv(map: &SteeringMap) -> String {
    let n = map.entries.first().map_or(0, |e| e.state.n_cells());
    let mut out: Vec<String> = (1..=2 * n).map(|i| format!("c_pf_{i}")).collect();
    out.extend(["diodes_hex", "theta_deg", "phi_deg", "gain_dbi", "s11_db"].map(String::from));
    let mut s = out.join(",");
    s.push('\n');
    for e in &map.entries {
        let caps: Vec<f64> = e.state.capacitances().iter().map(|c| c * 1e12).collect();
        s += &row(&caps);
        s += &format!(",{},", e.state.diodes_hex());
        s += &row(&[e.theta_peak, e.phi_peak, e.realized_gain_dbi, e.s11_db]);
        s.push('\n');
    }
    s
}

pub fn qsense_csv(rows: &[QRow]) -> String {
    let mut out = String::from("f_ghz,q,s11_db,gain_dbi,d_s11_db,d_gain_db\n");
    for r in rows {
        out += &row(&[r.f * 1e-9, r.q, r.s11_db, r.gain_dbi, r.d_s11_db, r.d_gain_db]);
        out.push('\n');
    }
    out
}
