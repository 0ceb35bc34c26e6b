//! State and calibration files (TOML) and JSON sidecars.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use super::config::{parse_document, read_calibration, Section, CALIBRATION_KEYS};
use crate::calibration::CalibrationConstants;
use crate::components::{CellLoading, ControlState};
use crate::error::{Error, Result};

pub(crate) fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io_at(path, e))
}

/// Whole-file write.
pub fn write_text(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io_at(path, e))
}

fn list<T: std::fmt::Display>(v: impl IntoIterator<Item = T>) -> String {
    let items: Vec<String> = v.into_iter().map(|x| x.to_string()).collect();
    format!("[{}]", items.join(", "))
}

/// Capacitances in pF and diode states, port-1 end first.
pub fn state_to_string(s: &ControlState) -> String {
    let pf = |c: f64| format!("{:?}", c * 1e12);
    let mut out = String::new();
    let _ = writeln!(out, "c_left_pf = {}", list(s.cells.iter().map(|c| pf(c.c_left))));
    let _ = writeln!(out, "c_right_pf = {}", list(s.cells.iter().map(|c| pf(c.c_right))));
    let _ = writeln!(out, "shorted_left = {}", list(s.cells.iter().map(|c| c.diode_left)));
    let _ = writeln!(out, "shorted_right = {}", list(s.cells.iter().map(|c| c.diode_right)));
    out
}

pub fn parse_state(src: &str, path: &str) -> Result<ControlState> {
    let doc = parse_document(src, path)?;
    let root = Section::root(src, path, doc.get_ref());
    root.allow(&["c_left_pf", "c_right_pf", "shorted_left", "shorted_right"])?;
    let need = |key: &str, v: Option<Vec<f64>>| v.ok_or_else(|| root.error(key, 1, "missing required key"));
    let cl = need("c_left_pf", root.f64_list("c_left_pf")?)?;
    let cr = need("c_right_pf", root.f64_list("c_right_pf")?)?;
    let n = cl.len();
    let dl = root.bool_list("shorted_left")?.unwrap_or_else(|| vec![false; n]);
    let dr = root.bool_list("shorted_right")?.unwrap_or_else(|| vec![false; n]);
    for (key, len) in [("c_right_pf", cr.len()), ("shorted_left", dl.len()), ("shorted_right", dr.len())] {
        if len != n {
            return Err(root.error(key, root.line_of_key(key), format!("has {len} entries, c_left_pf has {n}")));
        }
    }
    Ok(ControlState {
        cells: (0..n)
            .map(|i| CellLoading {
                c_left: cl[i] * 1e-12,
                c_right: cr[i] * 1e-12,
                diode_left: dl[i],
                diode_right: dr[i],
            })
            .collect(),
    })
}

pub fn read_state_file(path: &Path) -> Result<ControlState> {
    parse_state(&read(path)?, &path.display().to_string())
}

pub fn write_state_file(path: &Path, s: &ControlState) -> Result<()> {
    write_text(path, &state_to_string(s))
}

/// Same keys and units as the `[calibration]` table of a run config.
pub fn calibration_to_string(c: &CalibrationConstants) -> String {
    let values = [
        c.c_gap * 1e12,
        c.c_fringe_per_m * 1e12,
        c.kappa,
        c.eps_scale,
        c.g_leak,
        c.sigma,
        c.psi0,
        c.y_offset * 1e3,
    ];
    CALIBRATION_KEYS
        .iter()
        .zip(values)
        .map(|(k, v)| format!("{k} = {v:?}\n"))
        .collect()
}

/// Every key is required in a calibration file.
pub fn parse_calibration(src: &str, path: &str) -> Result<CalibrationConstants> {
    let doc = parse_document(src, path)?;
    let root = Section::root(src, path, doc.get_ref());
    root.allow(&CALIBRATION_KEYS)?;
    for k in CALIBRATION_KEYS {
        root.f64_req(k)?;
    }
    read_calibration(&root, CalibrationConstants::default())
}

pub fn read_calibration_file(path: &Path) -> Result<CalibrationConstants> {
    let src = read(path).map_err(|e| Error::Config {
        path: path.display().to_string(),
        line: 0,
        key: String::new(),
        message: e.to_string(),
    })?;
    parse_calibration(&src, &path.display().to_string())
}

pub fn write_calibration_file(path: &Path, c: &CalibrationConstants) -> Result<()> {
    write_text(path, &calibration_to_string(c))
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| Error::Format(e.to_string()))?;
    s.push('\n');
    Ok(s)
}
