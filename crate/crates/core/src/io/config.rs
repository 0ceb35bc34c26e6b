//! Run configuration: a TOML document with unit-suffixed keys, strict
//! unknown-key rejection and diagnostics carrying the key path and line.

use std::borrow::Cow;
use std::path::{Path, PathBuf};

use toml::de::{DeTable, DeValue};
use toml::Spanned;

use crate::calibration::CalibrationConstants;
use crate::components::{DeviceSpecs, DiodeSpec, VaractorSpec};
use crate::dispersion::{AntennaGeometry, NetworkOptions};
use crate::error::{Error, Result};
use crate::farfield::{ApertureOptions, GridSpec};
use crate::steering::{Antenna, ModelOptions, SolveOptions};
use crate::twoport::SubstrateSpec;

/// Frequencies a configuration may name, hertz.
pub const BAND_GUARD: (f64, f64) = (20e9, 50e9);

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub antenna: Antenna,
    pub band: (f64, f64),
    pub solve: SolveOptions,
    /// Capacitance grid of the steering map, farads.
    pub map_c_grid: Vec<f64>,
    /// Map over every diode pattern instead of the canonical ones.
    pub full_enumeration: bool,
    /// Calibration file the constants were read from, if any.
    pub calibration_file: Option<PathBuf>,
}

/// Read-only view of one table that remembers where it came from.
pub(crate) struct Section<'a, 'i> {
    src: &'a str,
    path: &'a str,
    prefix: String,
    table: Option<&'a DeTable<'i>>,
    /// Line of the table header, or 1 when absent.
    line: usize,
}

fn line_of(src: &str, offset: usize) -> usize {
    src[..offset.min(src.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

impl<'a, 'i> Section<'a, 'i> {
    pub(crate) fn root(src: &'a str, path: &'a str, table: &'a DeTable<'i>) -> Self {
        Self {
            src,
            path,
            prefix: String::new(),
            table: Some(table),
            line: 1,
        }
    }

    fn key_path(&self, key: &str) -> String {
        if self.prefix.is_empty() {
            key.to_string()
        } else {
            format!("{}.{key}", self.prefix)
        }
    }

    pub(crate) fn error(&self, key: &str, line: usize, message: impl Into<String>) -> Error {
        Error::Config {
            path: self.path.to_string(),
            line,
            key: self.key_path(key),
            message: message.into(),
        }
    }

    fn entry(&self, key: &str) -> Option<&'a Spanned<DeValue<'i>>> {
        self.table?
            .iter()
            .find(|(k, _)| k.get_ref().as_ref() == key)
            .map(|(_, v)| v)
    }

    /// Rejects any key not in `allowed`.
    pub(crate) fn allow(&self, allowed: &[&str]) -> Result<()> {
        let Some(t) = self.table else { return Ok(()) };
        for (k, _) in t.iter() {
            let name: &Cow<str> = k.get_ref();
            if !allowed.contains(&name.as_ref()) {
                return Err(self.error(name, line_of(self.src, k.span().start), "unknown key"));
            }
        }
        Ok(())
    }

    pub(crate) fn section(&self, key: &str) -> Result<Section<'a, 'i>> {
        let (table, line) = match self.entry(key) {
            None => (None, self.line),
            Some(v) => match v.get_ref() {
                DeValue::Table(t) => (Some(t), line_of(self.src, v.span().start)),
                other => {
                    return Err(self.error(
                        key,
                        line_of(self.src, v.span().start),
                        format!("expected a table, found {}", other.type_str()),
                    ))
                }
            },
        };
        Ok(Section {
            src: self.src,
            path: self.path,
            prefix: self.key_path(key),
            table,
            line,
        })
    }

    fn number(&self, key: &str, v: &Spanned<DeValue<'i>>) -> Result<f64> {
        let line = line_of(self.src, v.span().start);
        let parsed = match v.get_ref() {
            DeValue::Float(x) => x.as_str().replace('_', "").parse::<f64>().ok(),
            DeValue::Integer(i) => i64::from_str_radix(&i.as_str().replace('_', ""), i.radix())
                .ok()
                .map(|i| i as f64),
            other => {
                return Err(self.error(key, line, format!("expected a number, found {}", other.type_str())))
            }
        };
        parsed.ok_or_else(|| self.error(key, line, "malformed number"))
    }

    pub(crate) fn line_of_key(&self, key: &str) -> usize {
        self.entry(key)
            .map(|v| line_of(self.src, v.span().start))
            .unwrap_or(self.line)
    }

    pub(crate) fn f64_opt(&self, key: &str) -> Result<Option<f64>> {
        self.entry(key).map(|v| self.number(key, v)).transpose()
    }

    pub(crate) fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        Ok(self.f64_opt(key)?.unwrap_or(default))
    }

    pub(crate) fn f64_req(&self, key: &str) -> Result<f64> {
        self.f64_opt(key)?
            .ok_or_else(|| self.error(key, self.line, "missing required key"))
    }

    pub(crate) fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        let Some(v) = self.entry(key) else { return Ok(default) };
        let line = line_of(self.src, v.span().start);
        match v.get_ref() {
            DeValue::Integer(i) => usize::from_str_radix(&i.as_str().replace('_', ""), i.radix())
                .map_err(|_| self.error(key, line, "expected a non-negative integer")),
            other => Err(self.error(key, line, format!("expected an integer, found {}", other.type_str()))),
        }
    }

    pub(crate) fn bool_or(&self, key: &str, default: bool) -> Result<bool> {
        let Some(v) = self.entry(key) else { return Ok(default) };
        v.get_ref().as_bool().ok_or_else(|| {
            self.error(
                key,
                line_of(self.src, v.span().start),
                format!("expected a boolean, found {}", v.get_ref().type_str()),
            )
        })
    }

    pub(crate) fn str_opt(&self, key: &str) -> Result<Option<&'a str>> {
        let Some(v) = self.entry(key) else { return Ok(None) };
        match v.get_ref() {
            DeValue::String(s) => Ok(Some(s.as_ref())),
            other => Err(self.error(
                key,
                line_of(self.src, v.span().start),
                format!("expected a string, found {}", other.type_str()),
            )),
        }
    }

    fn array(&self, key: &str) -> Result<Option<Vec<&'a Spanned<DeValue<'i>>>>> {
        let Some(v) = self.entry(key) else { return Ok(None) };
        let line = line_of(self.src, v.span().start);
        match v.get_ref() {
            DeValue::Array(a) => Ok(Some(a.iter().collect())),
            other => Err(self.error(key, line, format!("expected an array, found {}", other.type_str()))),
        }
    }

    pub(crate) fn f64_list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        let Some(items) = self.array(key)? else { return Ok(None) };
        items.iter().map(|v| self.number(key, v)).collect::<Result<Vec<_>>>().map(Some)
    }

    pub(crate) fn bool_list(&self, key: &str) -> Result<Option<Vec<bool>>> {
        let Some(items) = self.array(key)? else { return Ok(None) };
        items
            .iter()
            .map(|v| {
                v.get_ref()
                    .as_bool()
                    .ok_or_else(|| self.error(key, line_of(self.src, v.span().start), "expected booleans"))
            })
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }

    /// Array of `[x, y]` pairs.
    pub(crate) fn pair_list(&self, key: &str) -> Result<Option<Vec<(f64, f64)>>> {
        let Some(items) = self.array(key)? else { return Ok(None) };
        items
            .iter()
            .map(|v| {
                let line = line_of(self.src, v.span().start);
                match v.get_ref() {
                    DeValue::Array(p) if p.len() == 2 => {
                        let xs: Vec<_> = p.iter().collect();
                        Ok((self.number(key, xs[0])?, self.number(key, xs[1])?))
                    }
                    _ => Err(self.error(key, line, "expected [x, y] pairs")),
                }
            })
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }
}

pub(crate) fn parse_document<'i>(src: &'i str, path: &str) -> Result<Spanned<DeTable<'i>>> {
    DeTable::parse(src).map_err(|e| Error::Config {
        path: path.to_string(),
        line: e.span().map(|s| line_of(src, s.start)).unwrap_or(1),
        key: String::new(),
        message: e.message().to_string(),
    })
}

pub(crate) const CALIBRATION_KEYS: [&str; 8] = [
    "c_gap_pf",
    "c_fringe_pf_per_m",
    "kappa",
    "eps_scale",
    "g_leak",
    "sigma",
    "psi0",
    "y_offset_mm",
];

/// Calibration keys in `s` applied over `base`.
pub(crate) fn read_calibration(s: &Section, base: CalibrationConstants) -> Result<CalibrationConstants> {
    let cal = CalibrationConstants {
        c_gap: s.f64_or("c_gap_pf", base.c_gap * 1e12)? * 1e-12,
        c_fringe_per_m: s.f64_or("c_fringe_pf_per_m", base.c_fringe_per_m * 1e12)? * 1e-12,
        kappa: s.f64_or("kappa", base.kappa)?,
        eps_scale: s.f64_or("eps_scale", base.eps_scale)?,
        g_leak: s.f64_or("g_leak", base.g_leak)?,
        sigma: s.f64_or("sigma", base.sigma)?,
        psi0: s.f64_or("psi0", base.psi0)?,
        y_offset: s.f64_or("y_offset_mm", base.y_offset * 1e3)? * 1e-3,
    };
    cal.validate()
        .map_err(|e| s.error("", s.line_of_key(""), e.to_string()))?;
    Ok(cal)
}

/// Default steering-map grid: 0.2 to 1.0 pF in 0.1 pF steps.
pub fn default_c_grid() -> Vec<f64> {
    (0..9).map(|i| (0.2 + 0.1 * i as f64) * 1e-12).collect()
}

/// Parses a configuration document. `path` is used for diagnostics and to
/// resolve a relative calibration file.
pub fn parse_config(src: &str, path: &Path) -> Result<RunConfig> {
    let path_str = path.display().to_string();
    let doc = parse_document(src, &path_str)?;
    let root = Section::root(src, &path_str, doc.get_ref());
    root.allow(&[
        "substrate",
        "geometry",
        "varactor",
        "diode",
        "calibration",
        "band",
        "grid",
        "model",
        "solver",
        "map",
    ])?;

    let sub = root.section("substrate")?;
    sub.allow(&["eps_r", "tan_delta", "height_mm"])?;
    let substrate = SubstrateSpec {
        eps_r: sub.f64_req("eps_r")?,
        tan_delta: sub.f64_req("tan_delta")?,
        height: sub.f64_req("height_mm")? * 1e-3,
    };
    SubstrateSpec::new(substrate.eps_r, substrate.tan_delta, substrate.height)
        .map_err(|e| sub.error("eps_r", sub.line_of_key("eps_r"), e.to_string()))?;

    let g = root.section("geometry")?;
    g.allow(&[
        "length_mm",
        "port_to_port_mm",
        "width_feed_mm",
        "width_mid_mm",
        "cell_period_mm",
        "n_cells",
        "z_feed_ohm",
    ])?;
    let d = AntennaGeometry::default();
    let geom = AntennaGeometry {
        length: g.f64_or("length_mm", d.length * 1e3)? * 1e-3,
        port_to_port: g.f64_or("port_to_port_mm", d.port_to_port * 1e3)? * 1e-3,
        width_feed: g.f64_or("width_feed_mm", d.width_feed * 1e3)? * 1e-3,
        width_mid: g.f64_or("width_mid_mm", d.width_mid * 1e3)? * 1e-3,
        cell_period: g.f64_or("cell_period_mm", d.cell_period * 1e3)? * 1e-3,
        n_cells: g.usize_or("n_cells", d.n_cells)?,
        z_feed: g.f64_or("z_feed_ohm", d.z_feed)?,
        substrate,
    };
    geom.validate()
        .map_err(|e| g.error("", g.line_of_key(""), e.to_string()))?;

    let v = root.section("varactor")?;
    v.allow(&["c_min_pf", "c_max_pf", "q", "q_ref_ghz", "cv_c0_pf", "cv_vj", "cv_m", "q_table"])?;
    let dv = VaractorSpec::default();
    let varactor = VaractorSpec {
        c_min: v.f64_or("c_min_pf", dv.c_min * 1e12)? * 1e-12,
        c_max: v.f64_or("c_max_pf", dv.c_max * 1e12)? * 1e-12,
        q_at_f0: v.f64_or("q", dv.q_at_f0)?,
        f0_q: v.f64_or("q_ref_ghz", dv.f0_q * 1e-9)? * 1e9,
        cv_c0: v.f64_or("cv_c0_pf", dv.cv_c0 * 1e12)? * 1e-12,
        cv_vj: v.f64_or("cv_vj", dv.cv_vj)?,
        cv_m: v.f64_or("cv_m", dv.cv_m)?,
        q_table: v
            .pair_list("q_table")?
            .unwrap_or_default()
            .into_iter()
            .map(|(f, q)| (f * 1e9, q))
            .collect(),
    };
    if varactor.c_min > varactor.c_max {
        return Err(v.error(
            "c_min_pf",
            v.line_of_key("c_min_pf"),
            format!(
                "c_min = {} pF exceeds c_max = {} pF",
                varactor.c_min * 1e12,
                varactor.c_max * 1e12
            ),
        ));
    }
    varactor
        .validate()
        .map_err(|e| v.error("", v.line_of_key(""), e.to_string()))?;

    let dd = root.section("diode")?;
    dd.allow(&["r_on_ohm", "c_off_ff", "l_via_ph", "c_couple_ff"])?;
    let ddef = DiodeSpec::default();
    let diode = DiodeSpec {
        r_on: dd.f64_or("r_on_ohm", ddef.r_on)?,
        c_off: dd.f64_or("c_off_ff", ddef.c_off * 1e15)? * 1e-15,
        l_via: dd.f64_or("l_via_ph", ddef.l_via * 1e12)? * 1e-12,
        c_couple: dd.f64_or("c_couple_ff", ddef.c_couple * 1e15)? * 1e-15,
    };
    diode
        .validate()
        .map_err(|e| dd.error("", dd.line_of_key(""), e.to_string()))?;

    let c = root.section("calibration")?;
    let mut allowed: Vec<&str> = CALIBRATION_KEYS.to_vec();
    allowed.push("file");
    c.allow(&allowed)?;
    let mut base = CalibrationConstants::default();
    let mut calibration_file = None;
    if let Some(f) = c.str_opt("file")? {
        let p = path.parent().unwrap_or(Path::new(".")).join(f);
        if !p.is_file() {
            return Err(c.error("file", c.line_of_key("file"), format!("{} does not exist", p.display())));
        }
        base = super::files::read_calibration_file(&p)?;
        calibration_file = Some(p);
    }
    let cal = read_calibration(&c, base)?;

    let b = root.section("band")?;
    b.allow(&["f_lo_ghz", "f_hi_ghz"])?;
    let band = (b.f64_or("f_lo_ghz", 28.0)? * 1e9, b.f64_or("f_hi_ghz", 34.0)? * 1e9);
    for (key, f) in [("f_lo_ghz", band.0), ("f_hi_ghz", band.1)] {
        if !(f >= BAND_GUARD.0 && f <= BAND_GUARD.1) {
            return Err(b.error(
                key,
                b.line_of_key(key),
                format!("{} GHz outside [20, 50] GHz", f * 1e-9),
            ));
        }
    }
    if band.0 > band.1 {
        return Err(b.error("f_lo_ghz", b.line_of_key("f_lo_ghz"), "f_lo exceeds f_hi"));
    }

    let gr = root.section("grid")?;
    gr.allow(&["theta_step_deg", "phi_step_deg", "full_sphere"])?;
    let gd = GridSpec::default();
    let (ts, ps) = (
        gr.f64_or("theta_step_deg", gd.theta_step_deg)?,
        gr.f64_or("phi_step_deg", gd.phi_step_deg)?,
    );
    for (key, step) in [("theta_step_deg", ts), ("phi_step_deg", ps)] {
        if !(step > 0.0 && step <= 10.0) {
            return Err(gr.error(key, gr.line_of_key(key), "step must lie in (0, 10] degrees"));
        }
    }
    let grid = if gr.bool_or("full_sphere", false)? {
        GridSpec::full_sphere(ts, ps)
    } else {
        GridSpec::hemisphere(ts, ps)
    };

    let m = root.section("model")?;
    m.allow(&[
        "segments_per_cell",
        "lead_segments",
        "sub_samples_per_cell",
        "modulation_depth",
        "element_exponent",
    ])?;
    let (nd, ad) = (NetworkOptions::default(), ApertureOptions::default());
    let opts = ModelOptions {
        network: NetworkOptions {
            segments_per_cell: m.usize_or("segments_per_cell", nd.segments_per_cell)?,
            lead_segments: m.usize_or("lead_segments", nd.lead_segments)?,
            z_ref: geom.z_feed,
        },
        aperture: ApertureOptions {
            sub_samples_per_cell: m.usize_or("sub_samples_per_cell", ad.sub_samples_per_cell)?,
            modulation_depth: m.f64_or("modulation_depth", ad.modulation_depth)?,
        },
        grid,
        element_exponent: m.f64_or("element_exponent", 1.0)?,
    };
    if opts.network.segments_per_cell == 0 || opts.aperture.sub_samples_per_cell == 0 {
        return Err(m.error("", m.line, "segment and sample counts must be positive"));
    }
    if !(0.0..=1.0).contains(&opts.aperture.modulation_depth) {
        return Err(m.error(
            "modulation_depth",
            m.line_of_key("modulation_depth"),
            "must lie in [0, 1]",
        ));
    }
    if !(opts.element_exponent >= 0.0) {
        return Err(m.error("element_exponent", m.line_of_key("element_exponent"), "must be >= 0"));
    }

    let s = root.section("solver")?;
    s.allow(&[
        "theta_tol_deg",
        "max_passes",
        "refine_window_pf",
        "refine_above_deg",
        "gain_drop_db",
        "gain_penalty_deg_per_db",
    ])?;
    let sd = SolveOptions::default();
    let solve = SolveOptions {
        theta_tol_deg: s.f64_or("theta_tol_deg", sd.theta_tol_deg)?,
        c_tol: sd.c_tol,
        refine_above_deg: s.f64_or("refine_above_deg", sd.refine_above_deg)?,
        max_passes: s.usize_or("max_passes", sd.max_passes)?,
        refine_window: s.f64_or("refine_window_pf", sd.refine_window * 1e12)? * 1e-12,
        gain_drop_db: s.f64_or("gain_drop_db", sd.gain_drop_db)?,
        gain_penalty_deg_per_db: s.f64_or("gain_penalty_deg_per_db", sd.gain_penalty_deg_per_db)?,
    };
    if !(solve.theta_tol_deg > 0.0) {
        return Err(s.error("theta_tol_deg", s.line_of_key("theta_tol_deg"), "must be > 0"));
    }

    let mp = root.section("map")?;
    mp.allow(&["c_grid_pf", "full_enumeration"])?;
    let map_c_grid = match mp.f64_list("c_grid_pf")? {
        Some(g) => g.into_iter().map(|c| c * 1e-12).collect(),
        None => default_c_grid(),
    };
    if map_c_grid.is_empty() {
        return Err(mp.error("c_grid_pf", mp.line_of_key("c_grid_pf"), "grid is empty"));
    }
    if let Some(c) = map_c_grid.iter().find(|c| !varactor.contains(**c)) {
        return Err(mp.error(
            "c_grid_pf",
            mp.line_of_key("c_grid_pf"),
            format!("{} pF outside the varactor range", c * 1e12),
        ));
    }
    let full_enumeration = mp.bool_or("full_enumeration", false)?;

    Ok(RunConfig {
        antenna: Antenna {
            geom,
            specs: DeviceSpecs { varactor, diode },
            cal,
            opts,
        },
        band,
        solve,
        map_c_grid,
        full_enumeration,
        calibration_file,
    })
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    parse_config(&super::files::read(path)?, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(src: &str) -> Result<RunConfig> {
        parse_config(src, Path::new("test.toml"))
    }

    const MINIMAL: &str = "[substrate]\neps_r = 3.66\ntan_delta = 0.0037\nheight_mm = 1.55\n";

    #[test]
    fn empty_names_first_required_key() {
        match parse("") {
            Err(Error::Config { key, .. }) => assert_eq!(key, "substrate.eps_r"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn minimal_gets_defaults() {
        let c = parse(MINIMAL).unwrap();
        assert_eq!(c.antenna.geom.cell_period, 5e-3);
        assert_eq!(c.antenna.geom.substrate.eps_r, 3.66);
        assert_eq!(c.map_c_grid.len(), 9);
        assert_eq!(c.band, (28e9, 34e9));
    }

    #[test]
    fn unknown_key_reports_path_and_line() {
        let src = format!("{MINIMAL}\n[geometry]\nn_cells = 6\nlenght_mm = 39\n");
        match parse(&src) {
            Err(Error::Config { key, line, .. }) => {
                assert_eq!(key, "geometry.lenght_mm");
                assert_eq!(line, 8);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn range_and_band_diagnostics() {
        let src = format!("{MINIMAL}[varactor]\nc_min_pf = 2\nc_max_pf = 1\n");
        match parse(&src) {
            Err(Error::Config { key, message, .. }) => {
                assert_eq!(key, "varactor.c_min_pf");
                assert!(message.contains("exceeds"));
            }
            other => panic!("{other:?}"),
        }
        let src = format!("{MINIMAL}[band]\nf_hi_ghz = 60\n");
        assert!(matches!(parse(&src), Err(Error::Config { key, .. }) if key == "band.f_hi_ghz"));
    }

    #[test]
    fn type_errors_are_diagnosed() {
        let src = "[substrate]\neps_r = \"x\"\n";
        assert!(matches!(parse(src), Err(Error::Config { line: 2, .. })));
        let src = "substrate = 3\n";
        assert!(matches!(parse(src), Err(Error::Config { line: 1, .. })));
    }

    #[test]
    fn missing_calibration_file() {
        let src = format!("{MINIMAL}[calibration]\nfile = \"nope.toml\"\n");
        assert!(matches!(parse(&src), Err(Error::Config { key, .. }) if key == "calibration.file"));
    }
}
