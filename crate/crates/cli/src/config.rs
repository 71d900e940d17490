//! Run configuration shared by every command, serializable so a run can be
//! saved and replayed with `--config`.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use lattice_core::flows::{Method, System};
use lattice_core::sample;
use lattice_core::verify::Suite;
use lattice_core::{Kind, LatticeState};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Simulate,
    Solve,
    Map,
    Verify,
    Spectrum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapKind {
    Flaschka,
    FlaschkaInverse,
    G,
    GInverse,
    Phi,
    Psi,
    Henon,
    Chop,
}

impl MapKind {
    pub const ALL: [MapKind; 8] = [
        MapKind::Flaschka,
        MapKind::FlaschkaInverse,
        MapKind::G,
        MapKind::GInverse,
        MapKind::Phi,
        MapKind::Psi,
        MapKind::Henon,
        MapKind::Chop,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MapKind::Flaschka => "flaschka",
            MapKind::FlaschkaInverse => "flaschka_inverse",
            MapKind::G => "g",
            MapKind::GInverse => "g_inverse",
            MapKind::Phi => "phi",
            MapKind::Psi => "psi",
            MapKind::Henon => "henon",
            MapKind::Chop => "chop",
        }
    }

    pub fn source(self) -> Kind {
        match self {
            MapKind::Flaschka | MapKind::Psi => Kind::TodaQp,
            MapKind::FlaschkaInverse | MapKind::Phi => Kind::TodaAb,
            MapKind::G => Kind::VolterraQ,
            MapKind::GInverse | MapKind::Henon | MapKind::Chop => Kind::VolterraA,
        }
    }
}

impl FromStr for MapKind {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        MapKind::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| CliError::Config(format!("unknown map {s:?}")))
    }
}

impl fmt::Display for MapKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(CliError::Config(format!("unknown format {s:?}"))),
        }
    }
}

/// Where the initial state comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum StateSource {
    Inline { coords: Vec<f64> },
    /// A JSON `{kind, coords}` object or a comma-separated list.
    File { path: PathBuf },
    /// `sites` is `N` for Toda and `VolterraQ`, `m` for `VolterraA`; the
    /// run seed picks the coordinates.
    Random { sites: usize },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Output {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
    /// Drift table destination for `simulate`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drift: Option<PathBuf>,
}

fn default_t_end() -> f64 {
    1.0
}

fn default_dt() -> f64 {
    1e-3
}

fn default_n() -> usize {
    4
}

fn default_points() -> usize {
    20
}

fn default_k_max() -> usize {
    3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<System>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<MapKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<StateSource>,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default)]
    pub method: Method,
    #[serde(default)]
    pub seed: u64,
    /// Lattice size for `verify`.
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub suite: Option<Suite>,
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default = "default_k_max")]
    pub k_max: usize,
    #[serde(default)]
    pub sequential: bool,
    #[serde(default)]
    pub output: Output,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        Self {
            command,
            system: None,
            map: None,
            state: None,
            t_end: default_t_end(),
            dt: default_dt(),
            method: Method::default(),
            seed: 0,
            n: default_n(),
            suite: None,
            points: default_points(),
            k_max: default_k_max(),
            sequential: false,
            output: Output::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))
    }

    /// Pretty JSON with sorted keys.
    pub fn to_json(&self) -> String {
        let v = serde_json::to_value(self).expect("config serializes");
        serde_json::to_string_pretty(&v).expect("value serializes")
    }

    pub fn require_system(&self) -> Result<System, CliError> {
        self.system.ok_or_else(|| CliError::Config("--system is required".into()))
    }

    pub fn check_times(&self) -> Result<(), CliError> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(CliError::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(CliError::Config(format!("t must be non-negative, got {}", self.t_end)));
        }
        Ok(())
    }

    /// Resolves the initial state as a point of `kind`.
    pub fn initial_state(&self, kind: Kind) -> Result<LatticeState, CliError> {
        let source = self.state.as_ref().ok_or_else(|| CliError::Config("an initial state is required".into()))?;
        let state = match source {
            StateSource::Inline { coords } => LatticeState::new(kind, coords.clone()),
            StateSource::File { path } => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
                return parse_state_text(&text, kind);
            }
            StateSource::Random { sites } => {
                if *sites < 1 || (kind != Kind::VolterraA && *sites < 2) {
                    return Err(CliError::Config(format!("lattice size {sites} is too small")));
                }
                sample::random_state(&mut sample::rng(self.seed), kind, *sites)
            }
        };
        state.map_err(|e| CliError::Config(e.to_string()))
    }
}

pub fn parse_coords(text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| CliError::Config(format!("coordinate {t:?}: {e}"))))
        .collect()
}

fn parse_state_text(text: &str, kind: Kind) -> Result<LatticeState, CliError> {
    let text = text.trim();
    if text.starts_with('{') {
        let s: LatticeState = serde_json::from_str(text).map_err(|e| CliError::Config(format!("state file: {e}")))?;
        if s.kind() != kind {
            return Err(CliError::Config(format!("state file holds a {:?} state, expected {kind:?}", s.kind())));
        }
        return Ok(s);
    }
    LatticeState::new(kind, parse_coords(text)?).map_err(|e| CliError::Config(e.to_string()))
}
