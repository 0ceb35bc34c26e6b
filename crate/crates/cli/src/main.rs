//! `hwlwa`: studies of the tunable leaky-wave antenna from a config file.
//!
//! Exit codes: 0 success, 2 configuration error, 3 unreachable target,
//! 4 calibration failure, 5 I/O error, 1 anything else.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hwlwa::components::ControlState;
use hwlwa::io::{self, RunConfig};
use hwlwa::steering::{
    calibrate, dispersion_sweep, reference_anchors, q_sensitivity, solve_2d, steering_map, steering_map_full,
    CalibrateOptions, SolveContext, REFERENCE_FREE,
};
use hwlwa::Error;

#[derive(Parser)]
#[command(name = "hwlwa", version, about = "Tunable half-width microstrip leaky-wave antenna model")]
struct Cli {
    /// Run configuration (TOML).
    #[arg(long, short, global = true, default_value = "hwlwa.toml")]
    config: PathBuf,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Fit the calibration constants to the reference anchors.
    Calibrate {
        /// Calibration file to write.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Capacitance of the φ, efficiency and gain anchor states, pF.
        #[arg(long, default_value_t = 0.6)]
        nominal_c_pf: f64,
        #[arg(long, default_value_t = 600)]
        max_iter: usize,
    },
    /// β, α and harmonic angles over a frequency sweep.
    Dispersion {
        #[command(flatten)]
        state: StateArgs,
        #[command(flatten)]
        sweep: SweepArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Realized-gain pattern on the configured grid plus a metrics sidecar.
    Pattern {
        #[command(flatten)]
        state: StateArgs,
        /// Frequency, Hz.
        #[arg(long)]
        f: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Metrics JSON; defaults to the CSV path with a `.json` extension.
        #[arg(long)]
        metrics: Option<PathBuf>,
    },
    /// Beam direction and gain over the configured control grid.
    Map {
        #[arg(long)]
        f: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Control state pointing the beam at (θ, φ).
    Steer {
        #[arg(long, allow_hyphen_values = true)]
        theta: f64,
        #[arg(long, allow_hyphen_values = true)]
        phi: f64,
        #[arg(long)]
        f: f64,
        /// State file to write.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Port match and gain for several varactor Q values.
    Qsense {
        #[command(flatten)]
        state: StateArgs,
        #[command(flatten)]
        sweep: SweepArgs,
        /// Comma-separated Q values.
        #[arg(long, value_delimiter = ',', default_values_t = [10.0, 20.0])]
        q: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Two-port S-parameters as a Touchstone file.
    Touchstone {
        #[command(flatten)]
        state: StateArgs,
        #[command(flatten)]
        sweep: SweepArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct StateArgs {
    /// State file; overrides --c-pf and --asym.
    #[arg(long)]
    state: Option<PathBuf>,
    /// Uniform varactor capacitance, pF.
    #[arg(long, default_value_t = 0.6)]
    c_pf: f64,
    /// Asymmetry index: shorted left patches minus shorted right patches.
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    asym: i32,
}

#[derive(Args)]
struct SweepArgs {
    /// Sweep start, Hz; defaults to the configured band.
    #[arg(long)]
    f_start: Option<f64>,
    #[arg(long)]
    f_stop: Option<f64>,
    #[arg(long, default_value_t = 0.5e9)]
    f_step: f64,
}

fn fail(e: Error) -> (u8, String) {
    let code = match e {
        Error::Config { .. } | Error::InvalidArgument(_) => 2,
        Error::OutOfRange { .. } => 3,
        Error::Calibration(_) => 4,
        Error::Io(_) => 5,
        _ => 1,
    };
    (code, e.to_string())
}

type CmdResult = Result<(), (u8, String)>;

fn emit(out: &Option<PathBuf>, text: &str) -> CmdResult {
    match out {
        Some(p) => io::write_text(p, text).map_err(fail),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn resolve_state(cfg: &RunConfig, a: &StateArgs) -> Result<ControlState, (u8, String)> {
    let n = cfg.antenna.geom.n_cells;
    let s = match &a.state {
        Some(p) => io::read_state_file(p).map_err(fail)?,
        None => {
            if a.asym.unsigned_abs() as usize > n {
                return Err((2, format!("asymmetry index {} outside [-{n}, {n}]", a.asym)));
            }
            ControlState::canonical(n, a.c_pf * 1e-12, a.asym)
        }
    };
    s.validate(&cfg.antenna.specs.varactor, n).map_err(fail)?;
    Ok(s)
}

fn check_f(f: f64) -> CmdResult {
    let (lo, hi) = io::BAND_GUARD;
    if !(f >= lo && f <= hi) {
        return Err((2, format!("frequency {f} Hz outside [{lo}, {hi}] Hz")));
    }
    Ok(())
}

fn freqs(cfg: &RunConfig, s: &SweepArgs) -> Result<Vec<f64>, (u8, String)> {
    let lo = s.f_start.unwrap_or(cfg.band.0);
    let hi = s.f_stop.unwrap_or(cfg.band.1);
    check_f(lo)?;
    check_f(hi)?;
    if !(s.f_step > 0.0) || hi < lo {
        return Err((2, "sweep needs f_start <= f_stop and f_step > 0".into()));
    }
    let n = ((hi - lo) / s.f_step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| lo + s.f_step * i as f64).collect())
}

fn run(cli: Cli) -> CmdResult {
    let cfg = io::load_config(&cli.config).map_err(fail)?;
    let ant = &cfg.antenna;
    match cli.cmd {
        Cmd::Calibrate {
            out,
            nominal_c_pf,
            max_iter,
        } => {
            let v = &ant.specs.varactor;
            let anchors = reference_anchors(ant.geom.n_cells, v.c_min, v.c_max, nominal_c_pf * 1e-12);
            let opts = CalibrateOptions {
                max_iter,
                ..CalibrateOptions::default()
            };
            let report = calibrate(ant, &anchors, &REFERENCE_FREE, &opts).map_err(fail)?;
            for r in &report.residuals {
                println!(
                    "{} target={} observed={} residual={}",
                    r.label,
                    io::g9(r.target),
                    io::g9(r.observed),
                    io::g9(r.residual)
                );
            }
            let text = io::calibration_to_string(&report.constants);
            emit(&out, &text)
        }
        Cmd::Dispersion { state, sweep, out } => {
            let s = resolve_state(&cfg, &state)?;
            let rows = dispersion_sweep(ant, &s, &freqs(&cfg, &sweep)?).map_err(fail)?;
            emit(&out, &io::dispersion_csv(&rows))
        }
        Cmd::Pattern {
            state,
            f,
            out,
            metrics,
        } => {
            check_f(f)?;
            let s = resolve_state(&cfg, &state)?;
            let d = ant.forward_detail(&s, f).map_err(fail)?;
            let sol = &d.solution;
            let factor = 10f64.powf((sol.realized_gain_dbi - sol.directivity_dbi) / 10.0);
            emit(&out, &io::pattern_csv(&d.pattern, factor))?;
            let json = io::to_json(sol).map_err(fail)?;
            let sidecar = metrics.or_else(|| out.as_ref().map(|p| p.with_extension("json")));
            match sidecar {
                Some(p) => io::write_text(&p, &json).map_err(fail),
                None => Ok(()),
            }
        }
        Cmd::Map { f, out } => {
            check_f(f)?;
            let map = if cfg.full_enumeration {
                steering_map_full(ant, f, &cfg.map_c_grid)
            } else {
                steering_map(ant, f, &cfg.map_c_grid)
            }
            .map_err(fail)?;
            emit(&out, &io::map_csv(&map))
        }
        Cmd::Steer { theta, phi, f, out } => {
            check_f(f)?;
            let ctx = SolveContext::new(ant, f).map_err(fail)?;
            let sol = solve_2d(ant, (theta, phi), &ctx, &cfg.solve).map_err(fail)?;
            let b = &sol.solution;
            println!(
                "theta_deg={} phi_deg={} error_deg={} gain_dbi={} s11_db={} diodes_hex={}",
                io::g9(b.theta_peak),
                io::g9(b.phi_peak),
                io::g9(sol.angular_error),
                io::g9(b.realized_gain_dbi),
                io::g9(b.s11_db),
                b.state.diodes_hex()
            );
            print!("{}", io::state_to_string(&b.state));
            if let Some(p) = &out {
                io::write_state_file(p, &b.state).map_err(fail)?;
            }
            if sol.nearest {
                return Err((
                    3,
                    format!(
                        "unreachable: target=({},{}) nearest=({},{}) error_deg={}",
                        io::g9(theta),
                        io::g9(phi),
                        io::g9(b.theta_peak),
                        io::g9(b.phi_peak),
                        io::g9(sol.angular_error)
                    ),
                ));
            }
            Ok(())
        }
        Cmd::Qsense { state, sweep, q, out } => {
            let s = resolve_state(&cfg, &state)?;
            let rows = q_sensitivity(ant, &freqs(&cfg, &sweep)?, &q, &s).map_err(fail)?;
            emit(&out, &io::qsense_csv(&rows))
        }
        Cmd::Touchstone { state, sweep, out } => {
            let s = resolve_state(&cfg, &state)?;
            let sweep = freqs(&cfg, &sweep)?
                .into_iter()
                .map(|f| ant.scattering(&s, f).map(|m| (f, m)))
                .collect::<hwlwa::Result<Vec<_>>>()
                .map_err(fail)?;
            emit(&out, &io::touchstone_string(&sweep).map_err(fail)?)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
