//! Two-port Touchstone (v1) files in GHz / real-imaginary form.

use num_complex::Complex64;

use super::format::g9;
use crate::error::{Error, Result};
use crate::twoport::ScatterMatrix;

/// Renders `(f, S)` pairs, which must be nonempty and ascending in `f`.
pub fn touchstone_string(sweep: &[(f64, ScatterMatrix)]) -> Result<String> {
    let Some(first) = sweep.first() else {
        return Err(Error::invalid("empty sweep"));
    };
    if sweep.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(Error::invalid("sweep frequencies must be strictly ascending"));
    }
    let mut out = format!("# GHz S RI R {}\n", g9(first.1.z_ref));
    for (f, s) in sweep {
        let v = [s.s11, s.s21, s.s12, s.s22];
        let mut fields = vec![g9(f * 1e-9)];
        for z in v {
            fields.push(g9(z.re));
            fields.push(g9(z.im));
        }
        out += &fields.join(" ");
        out.push('\n');
    }
    Ok(out)
}

/// Parses what [`touchstone_string`] writes, plus `!` comments and the other
/// frequency units.
pub fn parse_touchstone(src: &str) -> Result<Vec<(f64, ScatterMatrix)>> {
    let mut scale = None;
    let mut z_ref = 50.0;
    let mut out = Vec::new();
    for (i, raw) in src.lines().enumerate() {
        let line = raw.split('!').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = |m: &str| Error::Format(format!("touchstone line {}: {m}", i + 1));
        if let Some(opts) = line.strip_prefix('#') {
            let toks: Vec<String> = opts.split_whitespace().map(str::to_ascii_uppercase).collect();
            let mut k = 0;
            let mut unit = 1e9;
            while k < toks.len() {
                match toks[k].as_str() {
                    "HZ" => unit = 1.0,
                    "KHZ" => unit = 1e3,
                    "MHZ" => unit = 1e6,
                    "GHZ" => unit = 1e9,
                    "S" | "RI" => {}
                    "R" => {
                        k += 1;
                        z_ref = toks
                            .get(k)
                            .and_then(|t| t.parse().ok())
                            .ok_or_else(|| bad("missing reference impedance"))?;
                    }
                    other => return Err(bad(&format!("unsupported option {other}"))),
                }
                k += 1;
            }
            scale = Some(unit);
            continue;
        }
        let unit = scale.ok_or_else(|| bad("data before the option line"))?;
        let v: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| bad(&format!("bad number {t}"))))
            .collect::<Result<_>>()?;
        if v.len() != 9 {
            return Err(bad(&format!("expected 9 fields, found {}", v.len())));
        }
        let c = |k: usize| Complex64::new(v[k], v[k + 1]);
        out.push((
            v[0] * unit,
            ScatterMatrix {
                s11: c(1),
                s21: c(3),
                s12: c(5),
                s22: c(7),
                z_ref,
            },
        ));
    }
    if out.is_empty() {
        return Err(Error::Format("touchstone file has no data".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(x: f64) -> ScatterMatrix {
        ScatterMatrix {
            s11: Complex64::new(0.1 * x, -0.2),
            s21: Complex64::new(0.7, 0.3 * x),
            s12: Complex64::new(0.7, 0.3 * x),
            s22: Complex64::new(-1e-13, 0.05),
            z_ref: 50.0,
        }
    }

    #[test]
    fn layout_and_round_trip() {
        let sweep: Vec<_> = (0..13).map(|i| (28e9 + 0.5e9 * i as f64, s(i as f64 / 7.0))).collect();
        let txt = touchstone_string(&sweep).unwrap();
        assert_eq!(txt.lines().count(), 14);
        assert_eq!(txt.lines().next(), Some("# GHz S RI R 50"));
        assert!(!txt.contains('\r'));
        let back = parse_touchstone(&txt).unwrap();
        for ((f, a), (g, b)) in sweep.iter().zip(&back) {
            assert!((f - g).abs() < 1e-9 * f);
            for (x, y) in [(a.s11, b.s11), (a.s21, b.s21), (a.s12, b.s12), (a.s22, b.s22)] {
                assert!((x - y).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(touchstone_string(&[]).is_err());
        assert!(touchstone_string(&[(2e9, s(0.0)), (1e9, s(0.0))]).is_err());
        assert!(parse_touchstone("1 2 3\n").is_err());
        assert!(parse_touchstone("# GHz S RI R 50\n1 2 3\n").is_err());
    }
}
