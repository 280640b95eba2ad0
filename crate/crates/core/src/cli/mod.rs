//! Command-line front end.
//!
//! Exit codes: `0` success, `2` argument or configuration error, `3`
//! numerical failure.

mod args;
mod config;

pub use args::{Cli, Command, EvolveArgs, FilterArgs, PhaseArgs, ProtocolArgs, TrajectoryArgs};
pub use config::{load_config, parse_config, FileConfig, Number};

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use clap::Parser;
use thiserror::Error;

use crate::filters::{self, FilterModel, KernelSpec};
use crate::moments;
use crate::output::fmt12;
use crate::phase::{self, GridSpec};
use crate::protocol::{ProtocolKind, ProtocolParams};
use crate::trajectory::{self, SystemModel, TrajectoryConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("I/O error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => EXIT_USAGE,
            CliError::Numerical(_) | CliError::Io(_) => EXIT_NUMERICAL,
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn numerical(e: impl std::fmt::Display) -> CliError {
    CliError::Numerical(e.to_string())
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code. Diagnostics go to `stderr`.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            if code == EXIT_OK {
                let _ = write!(stdout, "{rendered}");
            } else {
                let _ = write!(stderr, "{rendered}");
            }
            return code;
        }
    };
    match dispatch(cli, stdout, stderr) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            if e.exit_code() == EXIT_USAGE {
                let _ = writeln!(stderr, "Run with --help for usage.");
            }
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(path) => load_config(path)?,
        None => FileConfig::default(),
    };
    match cli.command {
        Command::FilterResponse(mut a) => {
            file.merge_filter(&mut a);
            cmd_filter_response(&a, stdout)
        }
        Command::SteadyState(mut a) => {
            file.merge_protocol(&mut a);
            cmd_steady_state(&a, stdout)
        }
        Command::Evolve(mut a) => {
            file.merge_evolve(&mut a);
            cmd_evolve(&a, stdout)
        }
        Command::Trajectory(mut a) => {
            file.merge_trajectory(&mut a);
            cmd_trajectory(&a, stdout, stderr)
        }
        Command::PhaseDiagram(mut a) => {
            file.merge_phase(&mut a);
            cmd_phase(&a, stdout, stderr)
        }
    }
}

fn with_output<F>(path: Option<&Path>, stdout: &mut dyn Write, body: F) -> Result<(), CliError>
where
    F: FnOnce(&mut dyn Write) -> Result<(), CliError>,
{
    match path {
        Some(p) => {
            let file = File::create(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
            let mut w = BufWriter::new(file);
            body(&mut w)?;
            w.flush()?;
            Ok(())
        }
        None => {
            body(stdout)?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn positive(name: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(usage(format!("--{name} must be positive, got {v}")))
    }
}

fn require<T>(name: &str, v: Option<T>) -> Result<T, CliError> {
    v.ok_or_else(|| usage(format!("missing required --{name}")))
}

/// Validated protocol parameters; ω defaults to 1.
pub fn protocol_params(a: &ProtocolArgs) -> Result<ProtocolParams, CliError> {
    let kind: ProtocolKind = require("protocol", a.protocol.as_deref())?
        .parse()
        .map_err(|e: crate::protocol::UnknownProtocol| usage(e.to_string()))?;
    let lambda = positive("lambda", require("lambda", a.lambda)?)?;
    let gamma = positive("gamma", require("gamma", a.gamma)?)?;
    let omega = positive("omega", a.omega.unwrap_or(1.0))?;
    let big_omega = match a.big_omega {
        Some(v) => Some(positive("Omega", v)?),
        None if kind.needs_big_omega() => return Err(usage(format!("protocol {kind} requires --Omega"))),
        None => None,
    };
    ProtocolParams::new(kind, lambda, omega, gamma, big_omega).map_err(|e| usage(e.to_string()))
}

fn cmd_filter_response(a: &FilterArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let kind = require("filter", a.filter.as_deref())?;
    let model: FilterModel = match kind {
        "lowpass" => {
            let rates = match (&a.rates, a.gamma) {
                (Some(r), _) => r.clone(),
                (None, Some(g)) => vec![g],
                (None, None) => return Err(usage("lowpass needs --rates or --gamma")),
            };
            for &r in &rates {
                positive("rates", r)?;
            }
            filters::lowpass_cascade(&rates).map_err(|e| usage(e.to_string()))?
        }
        "bandpass" => {
            let g = positive("gamma", require("gamma", a.gamma)?)?;
            let o = require("Omega", a.big_omega)?;
            filters::bandpass(g, o).map_err(|e| usage(e.to_string()))?
        }
        "kernel" => {
            let spec = KernelSpec::new(require("coeffs", a.coeffs.clone())?, require("derivs", a.derivs.clone())?)
                .map_err(|e| usage(e.to_string()))?;
            filters::kernel_filter(&spec).map_err(|e| usage(e.to_string()))?
        }
        other => return Err(usage(format!("unknown filter '{other}' (expected lowpass, bandpass or kernel)"))),
    };
    let default_tmax = match (kind, &a.rates, a.gamma) {
        ("kernel", _, _) => 10.0,
        (_, Some(r), _) => 10.0 / r[0],
        (_, None, Some(g)) => 10.0 / g,
        _ => 10.0,
    };
    let tmax = positive("tmax", a.tmax.unwrap_or(default_tmax))?;
    let points = a.points.unwrap_or(101);
    if points < 2 {
        return Err(usage("--points must be at least 2"));
    }
    let mut rows = Vec::with_capacity(points);
    for i in 0..points {
        let t = tmax * i as f64 / (points - 1) as f64;
        rows.push((t, filters::impulse_response(&model, t).map_err(numerical)?));
    }
    with_output(a.output.as_deref(), stdout, |w| {
        let mut csv = csv::Writer::from_writer(w);
        let mut header = vec!["t".to_string()];
        header.extend((1..=model.dim()).map(|k| format!("h_{k}")));
        csv.write_record(&header)?;
        for (t, h) in &rows {
            let mut rec = vec![fmt12(*t)];
            rec.extend(h.iter().map(|x| fmt12(*x)));
            csv.write_record(&rec)?;
        }
        csv.flush()?;
        Ok(())
    })
}

fn cmd_steady_state(a: &ProtocolArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let p = protocol_params(a)?;
    let sys = moments::build(&p).map_err(numerical)?;
    let ss = moments::steady_state(&sys).map_err(numerical)?;
    if !ss.energy_over_hw.is_finite() {
        return Err(numerical("steady-state energy is not finite"));
    }
    with_output(a.output.as_deref(), stdout, |w| {
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(["protocol", "lambda", "omega", "gamma", "Omega", "energy", "stable", "physical"])?;
        csv.write_record([
            p.kind.name().to_string(),
            fmt12(p.lambda),
            fmt12(p.omega),
            fmt12(p.gamma),
            p.big_omega.map(fmt12).unwrap_or_default(),
            fmt12(ss.energy_over_hw),
            ss.stable.to_string(),
            ss.physical.to_string(),
        ])?;
        csv.flush()?;
        Ok(())
    })
}

fn cmd_evolve(a: &EvolveArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let p = protocol_params(&a.protocol)?;
    let dt = positive("dt", a.dt.unwrap_or(1e-3))?;
    let steps = a.steps.unwrap_or(5000);
    let stride = a.stride.unwrap_or(10);
    if stride == 0 {
        return Err(usage("--stride must be at least 1"));
    }
    let e0 = a.e0.unwrap_or(0.5);
    if !e0.is_finite() {
        return Err(usage("--e0 must be finite"));
    }
    let sys = moments::build(&p).map_err(numerical)?;
    let path = moments::evolve(&sys, &sys.initial_from_energy(e0), dt, steps).map_err(numerical)?;
    with_output(a.protocol.output.as_deref(), stdout, |w| {
        let mut csv = csv::Writer::from_writer(w);
        let mut header = vec!["t".to_string()];
        header.extend(sys.labels().iter().map(|s| s.to_string()));
        csv.write_record(&header)?;
        for (k, x) in path.iter().enumerate().step_by(stride) {
            let mut rec = vec![fmt12(k as f64 * dt)];
            rec.extend(x.iter().map(|v| fmt12(*v)));
            csv.write_record(&rec)?;
        }
        csv.flush()?;
        Ok(())
    })
}

fn cmd_trajectory(a: &TrajectoryArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    let p = protocol_params(&a.protocol)?;
    let dt = positive("dt", require("dt", a.dt)?)?;
    let steps = require("steps", a.steps)?;
    let ntraj = require("ntraj", a.ntraj)?;
    let seed = require("seed", a.seed)?;
    if ntraj == 0 {
        return Err(usage("--ntraj must be at least 1"));
    }
    let fock = a.fock.unwrap_or(25);
    if fock < 3 {
        return Err(usage("--fock must be at least 3"));
    }
    let stride = a.stride.unwrap_or(10);
    if stride == 0 {
        return Err(usage("--stride must be at least 1"));
    }
    let model = SystemModel::cooling_protocol(&p, fock).map_err(numerical)?;
    let cfg = TrajectoryConfig::new(dt, steps, ntraj, seed).with_stride(stride);
    let rec = trajectory::run_ensemble(&model, &cfg).map_err(numerical)?;
    if rec.truncation_warning {
        writeln!(
            stderr,
            "warning: top-two Fock populations reached {:.3e} (> {:.0e}); increase --fock",
            rec.max_top_population,
            trajectory::TRUNCATION_WARNING_LEVEL
        )?;
    }
    let tap = p.kind.tap();
    with_output(a.protocol.output.as_deref(), stdout, |w| {
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(["t", "mean_energy", "stderr_energy", "mean_Dx", "var_Dx", "mean_Dp", "var_Dp"])?;
        for (i, t) in rec.times.iter().enumerate() {
            let (sx, sp) = (&rec.signals[0][tap], &rec.signals[1][tap]);
            csv.write_record([
                fmt12(*t),
                fmt12(rec.energy.mean[i]),
                fmt12(rec.energy.std_err[i]),
                fmt12(sx.mean[i]),
                fmt12(sx.variance[i]),
                fmt12(sp.mean[i]),
                fmt12(sp.variance[i]),
            ])?;
        }
        csv.flush()?;
        Ok(())
    })
}

/// Parses `N` or `NxM`.
pub fn parse_grid(s: &str) -> Result<(usize, usize), CliError> {
    let bad = || usage(format!("--grid must be N or NxM with N, M >= 1, got '{s}'"));
    let parse = |t: &str| t.trim().parse::<usize>().ok().filter(|&n| n >= 1);
    match s.split_once(['x', 'X']) {
        Some((a, b)) => Ok((parse(a).ok_or_else(bad)?, parse(b).ok_or_else(bad)?)),
        None => {
            let n = parse(s).ok_or_else(bad)?;
            Ok((n, n))
        }
    }
}

fn cmd_phase(a: &PhaseArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    let (ng, no) = parse_grid(a.grid.as_deref().unwrap_or("200"))?;
    let lambda = positive("lambda", a.lambda.unwrap_or(1.0))?;
    let omega = positive("omega", a.omega.unwrap_or(1.0))?;
    let spec = GridSpec::default_with_size(ng, no, lambda, omega);
    let res = phase::sweep(&spec).map_err(|e| usage(e.to_string()))?;
    if !res.spot_check.failures.is_empty() {
        writeln!(
            stderr,
            "warning: {} of {} spot checks disagree with the moment systems (max rel. error {:.3e})",
            res.spot_check.failures.len(),
            res.spot_check.compared,
            res.spot_check.max_rel_error
        )?;
    }
    with_output(a.output.as_deref(), stdout, |w| {
        phase::write_phase_csv(&res, w).map_err(|e| CliError::Io(e.to_string()))
    })
}
