use std::path::PathBuf;

use serde_json::{json, Value};

use lattice_core::flows::{self, conservation_report, dopri_solve, fmt_f64, integrate, rhs_raw, System};
use lattice_core::lax::build_lax_symmetric;
use lattice_core::maps::{self, Involution, ToTodaMode};
use lattice_core::moser;
use lattice_core::par::{ExecMode, Executor};
use lattice_core::verify::{run_suite, VerifyConfig};
use lattice_core::Kind;

use crate::config::{Command, Format, MapKind, RunConfig};
use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Dest {
    Stdout,
    Stderr,
    File(PathBuf),
}

/// A piece of output and where it goes.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub dest: Dest,
    pub text: String,
}

/// Output of a command. `failed` lists verification checks that did not
/// pass; the artifacts are still written.
#[derive(Debug, Clone, PartialEq)]
pub struct Run {
    pub artifacts: Vec<Artifact>,
    pub failed: Vec<String>,
}

impl From<Vec<Artifact>> for Run {
    fn from(artifacts: Vec<Artifact>) -> Self {
        Self { artifacts, failed: Vec::new() }
    }
}

fn primary(cfg: &RunConfig, text: String) -> Artifact {
    let dest = cfg.output.path.clone().map_or(Dest::Stdout, Dest::File);
    Artifact { dest, text }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("plain data serializes");
    s.push('\n');
    s
}

fn csv_row(values: impl IntoIterator<Item = f64>) -> String {
    values.into_iter().map(fmt_f64).collect::<Vec<_>>().join(",")
}

pub fn run(cfg: &RunConfig) -> Result<Run, CliError> {
    match cfg.command {
        Command::Simulate => simulate(cfg).map(Run::from),
        Command::Solve => solve(cfg).map(Run::from),
        Command::Map => map(cfg).map(Run::from),
        Command::Verify => verify(cfg),
        Command::Spectrum => spectrum(cfg).map(Run::from),
    }
}

/// Trajectory plus the per-invariant drift table. The table goes next to the
/// trajectory as `<path>.drift.<ext>` unless a destination is given, and to
/// stderr when the trajectory goes to stdout.
pub fn simulate(cfg: &RunConfig) -> Result<Vec<Artifact>, CliError> {
    let system = cfg.require_system()?;
    cfg.check_times()?;
    let s0 = cfg.initial_state(system.kind())?;
    let tr = integrate(system, &s0, cfg.t_end, cfg.dt, cfg.method)?;
    let report = conservation_report(&tr, cfg.k_max)?;
    let (main, drift) = match cfg.output.format {
        Format::Csv => (tr.to_csv(), report.to_csv()),
        Format::Json => {
            let mut t = tr.to_json();
            t.push('\n');
            (t, pretty(&serde_json::to_value(&report).expect("report serializes")))
        }
    };
    let ext = match cfg.output.format {
        Format::Csv => "csv",
        Format::Json => "json",
    };
    let drift_dest = match (&cfg.output.drift, &cfg.output.path) {
        (Some(p), _) => Dest::File(p.clone()),
        (None, Some(p)) => Dest::File(PathBuf::from(format!("{}.drift.{ext}", p.display()))),
        (None, None) => Dest::Stderr,
    };
    Ok(vec![primary(cfg, main), Artifact { dest: drift_dest, text: drift }])
}

/// Explicit solution against an RK45 integration of the symmetric Toda flow
/// at each sample time.
pub fn solve(cfg: &RunConfig) -> Result<Vec<Artifact>, CliError> {
    if let Some(s) = cfg.system {
        if s != System::TodaTri {
            return Err(CliError::Config(format!("solve works on toda_tri states, got {s}")));
        }
    }
    cfg.check_times()?;
    let s0 = cfg.initial_state(Kind::TodaAb)?;
    let times = flows::sample_times(cfg.t_end, cfg.dt)?;
    let f = |y: &[f64]| rhs_raw(System::TodaTri, y);
    let integrated = dopri_solve(&f, s0.coords(), &times, flows::RK45_ATOL, flows::RK45_RTOL, |y, t| {
        if y.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(lattice_core::LatticeError::DomainExit { t })
        }
    })?;
    let mut rows = Vec::with_capacity(times.len());
    for (t, y) in times.iter().zip(&integrated) {
        let inv = moser::solve_toda_explicit(&s0, *t).map_err(CliError::Moser)?;
        let explicit = inv.state().into_coords();
        let delta = explicit.iter().zip(y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        rows.push((*t, explicit, y.clone(), delta, inv.fallback));
    }
    let text = match cfg.output.format {
        Format::Csv => {
            let d = s0.dim();
            let mut out = String::from("t");
            for prefix in ["explicit", "integrated"] {
                for i in 1..=d {
                    out.push_str(&format!(",{prefix}_x_{i}"));
                }
            }
            out.push_str(",max_delta,fallback\n");
            for (t, e, y, delta, fb) in &rows {
                let values = std::iter::once(*t).chain(e.iter().copied()).chain(y.iter().copied()).chain([*delta]);
                out.push_str(&format!("{},{}\n", csv_row(values), u8::from(*fb)));
            }
            out
        }
        Format::Json => {
            let samples: Vec<Value> = rows
                .iter()
                .map(|(t, e, y, delta, fb)| json!({"t": t, "explicit": e, "integrated": y, "max_delta": delta, "fallback": fb}))
                .collect();
            let max = rows.iter().map(|r| r.3).fold(0.0, f64::max);
            pretty(&json!({"initial": s0, "samples": samples, "max_delta": max}))
        }
    };
    Ok(vec![primary(cfg, text)])
}

pub fn map(cfg: &RunConfig) -> Result<Vec<Artifact>, CliError> {
    let kind = cfg.map.ok_or_else(|| CliError::Config("--map is required".into()))?;
    let s = cfg.initial_state(kind.source())?;
    let (image, sign, scale) = match kind {
        MapKind::Flaschka => (maps::flaschka(&s)?, None, None),
        MapKind::FlaschkaInverse => (maps::flaschka_preimage(&s)?, None, None),
        MapKind::G => (maps::gmap(&s)?, None, None),
        MapKind::GInverse => (maps::gmap_preimage(&s)?, None, None),
        MapKind::Phi => (maps::apply_involution(Involution::Phi, &s)?, None, None),
        MapKind::Psi => (maps::apply_involution(Involution::Psi, &s)?, None, None),
        MapKind::Henon | MapKind::Chop => {
            let mode = if kind == MapKind::Henon { ToTodaMode::Henon } else { ToTodaMode::Chop };
            let img = maps::volterra_to_toda(&s, mode)?;
            (img.state, Some(img.offdiag_sign), Some(img.time_scale))
        }
    };
    let text = match cfg.output.format {
        Format::Csv => {
            let mut out = String::from("kind");
            for i in 1..=image.dim() {
                out.push_str(&format!(",x_{i}"));
            }
            out.push('\n');
            let tag = serde_json::to_value(image.kind()).expect("kind serializes");
            out.push_str(&format!("{},{}\n", tag.as_str().unwrap_or_default(), csv_row(image.coords().iter().copied())));
            out
        }
        Format::Json => {
            let mut v = json!({"map": kind.name(), "input": s, "output": image});
            if let (Some(sign), Some(scale)) = (sign, scale) {
                v["offdiag_sign"] = json!(sign);
                v["time_scale"] = json!(scale);
            }
            pretty(&v)
        }
    };
    Ok(vec![primary(cfg, text)])
}

pub fn verify(cfg: &RunConfig) -> Result<Run, CliError> {
    let suite = cfg.suite.ok_or_else(|| CliError::Config("--suite is required".into()))?;
    let mode = if cfg.sequential { ExecMode::Sequential } else { ExecMode::Parallel };
    let exec = Executor::from_env(mode).map_err(|e| CliError::Config(e.to_string()))?;
    let vc = VerifyConfig { suite, n: cfg.n, points: cfg.points, seed: cfg.seed };
    let report = run_suite(vc, &exec).map_err(|e| CliError::Config(e.to_string()))?;
    let text = match cfg.output.format {
        Format::Json => {
            let mut s = report.to_json();
            s.push('\n');
            s
        }
        Format::Csv => {
            let mut out = String::from("name,status,residual,tolerance,points,worst_point\n");
            for c in &report.checks {
                let status = serde_json::to_value(c.status).expect("status serializes");
                out.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    c.name,
                    status.as_str().unwrap_or_default(),
                    fmt_f64(c.residual),
                    fmt_f64(c.tolerance),
                    c.points,
                    c.worst_point
                ));
            }
            out
        }
    };
    let failed = report.checks.iter().filter(|c| !c.status.ok()).map(|c| c.name.clone()).collect();
    Ok(Run { artifacts: vec![primary(cfg, text)], failed })
}

/// Eigenvalues of the Lax matrix; for `toda_tri` also the norming constants.
pub fn spectrum(cfg: &RunConfig) -> Result<Vec<Artifact>, CliError> {
    let system = cfg.require_system()?;
    let s = cfg.initial_state(system.kind())?;
    let lambdas = system.spectrum(s.coords());
    let r = if system == System::TodaTri {
        Some(moser::spectral_decompose(&build_lax_symmetric(&s)?)?.r().to_vec())
    } else {
        None
    };
    let text = match cfg.output.format {
        Format::Csv => {
            let mut out = String::from(if r.is_some() { "i,lambda,r\n" } else { "i,lambda\n" });
            for (i, l) in lambdas.iter().enumerate() {
                out.push_str(&format!("{},{}", i + 1, fmt_f64(*l)));
                if let Some(r) = &r {
                    out.push_str(&format!(",{}", fmt_f64(r[i])));
                }
                out.push('\n');
            }
            out
        }
        Format::Json => {
            let mut v = json!({"system": system.name(), "state": s, "eigenvalues": lambdas});
            if let Some(r) = r {
                v["r"] = json!(r);
            }
            pretty(&v)
        }
    };
    Ok(vec![primary(cfg, text)])
}

pub fn write_all(artifacts: &[Artifact]) -> Result<(), CliError> {
    use std::io::Write;
    for a in artifacts {
        match &a.dest {
            Dest::Stdout => std::io::stdout().write_all(a.text.as_bytes())?,
            Dest::Stderr => std::io::stderr().write_all(a.text.as_bytes())?,
            Dest::File(p) => std::fs::write(p, &a.text)?,
        }
    }
    Ok(())
}
