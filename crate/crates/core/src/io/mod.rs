//! Configuration loading and file formats.

mod config;
mod files;
mod format;
mod touchstone;

pub use config::{default_c_grid, load_config, parse_config, RunConfig, BAND_GUARD};
pub use files::{
    calibration_to_string, parse_calibration, parse_state, read_calibration_file, read_state_file,
    state_to_string, to_json, write_calibration_file, write_state_file, write_text,
};
pub use format::{dispersion_csv, fmt_g, g9, map_csv, pattern_csv, qsense_csv};
pub use touchstone::{parse_touchstone, touchstone_string};
