//! `lattice`: simulate, solve, map, inspect and verify Toda and Volterra
//! lattices from the command line.
//!
//! Exit codes: 0 success, 1 failed verification or runtime error,
//! 2 configuration error, 3 integration left the domain, 4 explicit
//! solution failed.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use lattice_core::flows::{Method, System};
use lattice_core::verify::Suite;

use crate::config::{parse_coords, Command, Format, MapKind, RunConfig, StateSource};
use crate::error::CliError;

#[derive(Parser, Debug)]
#[command(name = "lattice", version, about = "Toda and Volterra lattice toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Integrate a flow and report invariant drift.
    Simulate(Common),
    /// Compare the explicit spectral solution with numerical integration.
    Solve(Common),
    /// Apply one of the maps between phase spaces.
    Map(Common),
    /// Run a randomized verification suite and emit a JSON report.
    Verify(Common),
    /// Eigenvalues (and norming constants for toda_tri) of a state.
    Spectrum(Common),
}

#[derive(Args, Debug)]
struct Common {
    /// Base configuration (JSON); other flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Write the resolved configuration to this path.
    #[arg(long)]
    save_config: Option<PathBuf>,
    /// toda_tri, toda_kostant, toda_qp, volterra_a or volterra_q.
    #[arg(long)]
    system: Option<String>,
    /// flaschka, flaschka_inverse, g, g_inverse, phi, psi, henon or chop.
    #[arg(long)]
    map: Option<String>,
    /// Comma-separated coordinates in the layout of the state space.
    #[arg(long, allow_hyphen_values = true, conflicts_with_all = ["state_file", "random"])]
    state: Option<String>,
    /// JSON state or comma-separated coordinates.
    #[arg(long, conflicts_with = "random")]
    state_file: Option<PathBuf>,
    /// Draw the initial state from `--seed`.
    #[arg(long)]
    random: bool,
    /// Lattice size: sites for random states, N for verification.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// End time.
    #[arg(long = "t")]
    t_end: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    /// rk4 or rk45.
    #[arg(long)]
    method: Option<String>,
    /// Highest invariant index in the drift table.
    #[arg(long)]
    k_max: Option<usize>,
    /// brackets, hierarchy, reduction, diagram, moser or all.
    #[arg(long)]
    suite: Option<String>,
    /// Random points per verification check.
    #[arg(long)]
    points: Option<usize>,
    /// Evaluate verification points on one thread.
    #[arg(long)]
    sequential: bool,
    /// Output path; stdout when omitted.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// csv or json.
    #[arg(long)]
    format: Option<String>,
    /// Drift table path for simulate.
    #[arg(long)]
    drift: Option<PathBuf>,
}

fn parse<T: std::str::FromStr>(what: &str, v: &str) -> Result<T, CliError>
where
    T::Err: std::fmt::Display,
{
    v.parse().map_err(|e| CliError::Config(format!("--{what}: {e}")))
}

fn resolve(command: Command, a: &Common) -> Result<RunConfig, CliError> {
    let mut cfg = match &a.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            let cfg = RunConfig::from_json(&text)?;
            if cfg.command != command {
                return Err(CliError::Config(format!("config is for {:?}, not {command:?}", cfg.command)));
            }
            cfg
        }
        None => RunConfig::new(command),
    };
    if let Some(s) = &a.system {
        cfg.system = Some(parse::<System>("system", s)?);
    }
    if let Some(m) = &a.map {
        cfg.map = Some(parse::<MapKind>("map", m)?);
    }
    if let Some(n) = a.n {
        cfg.n = n;
    }
    if let Some(s) = &a.state {
        cfg.state = Some(StateSource::Inline { coords: parse_coords(s)? });
    } else if let Some(p) = &a.state_file {
        cfg.state = Some(StateSource::File { path: p.clone() });
    } else if a.random {
        cfg.state = Some(StateSource::Random { sites: cfg.n });
    }
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    if let Some(t) = a.t_end {
        cfg.t_end = t;
    }
    if let Some(dt) = a.dt {
        cfg.dt = dt;
    }
    if let Some(m) = &a.method {
        cfg.method = parse::<Method>("method", m)?;
    }
    if let Some(k) = a.k_max {
        cfg.k_max = k;
    }
    if let Some(s) = &a.suite {
        cfg.suite = Some(parse::<Suite>("suite", s)?);
    }
    if let Some(p) = a.points {
        cfg.points = p;
    }
    cfg.sequential |= a.sequential;
    if let Some(o) = &a.out {
        cfg.output.path = Some(o.clone());
    }
    if let Some(f) = &a.format {
        cfg.output.format = parse::<Format>("format", f)?;
    } else if a.config.is_none() && command == Command::Verify {
        cfg.output.format = Format::Json;
    }
    if let Some(d) = &a.drift {
        cfg.output.drift = Some(d.clone());
    }
    Ok(cfg)
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let (command, args) = match &cli.command {
        Cmd::Simulate(a) => (Command::Simulate, a),
        Cmd::Solve(a) => (Command::Solve, a),
        Cmd::Map(a) => (Command::Map, a),
        Cmd::Verify(a) => (Command::Verify, a),
        Cmd::Spectrum(a) => (Command::Spectrum, a),
    };
    let cfg = resolve(command, args)?;
    if let Some(p) = &args.save_config {
        std::fs::write(p, cfg.to_json() + "\n")?;
    }
    let run = commands::run(&cfg)?;
    commands::write_all(&run.artifacts)?;
    if run.failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::VerificationFailed(run.failed.join(", ")))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("lattice: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
