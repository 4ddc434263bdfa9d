//! Run configuration: TOML file, command-line overrides and validation.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use scjc::dopa::{DopaOptions, ShootOptions};
use scjc::exact::JcState;
use scjc::model::{CanonicalCoherentState, Method, SpinCoherentState};
use scjc::ode::OdeOptions;

#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

fn bad<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

/// A single value or an inclusive grid `start:end:count`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Axis {
    Value(f64),
    Grid { start: f64, end: f64, count: usize },
}

impl Axis {
    pub fn points(&self) -> Vec<f64> {
        match *self {
            Axis::Value(v) => vec![v],
            Axis::Grid { start, count: 1, .. } => vec![start],
            Axis::Grid { start, end, count } => (0..count)
                .map(|k| if k + 1 == count { end } else { start + (end - start) * k as f64 / (count - 1) as f64 })
                .collect(),
        }
    }

    pub fn single(&self, name: &str) -> Result<f64, ConfigError> {
        match self {
            Axis::Value(v) => Ok(*v),
            Axis::Grid { .. } => bad(format!("--{name} takes a single value outside `scan`")),
        }
    }
}

impl FromStr for Axis {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| ConfigError(format!("not a number: {t:?}")));
        let parts: Vec<&str> = s.split(':').collect();
        let axis = match parts.as_slice() {
            [v] => Axis::Value(num(v)?),
            [a, b, n] => {
                let count = n.trim().parse().map_err(|_| ConfigError(format!("bad grid count in {s:?}")))?;
                if count == 0 {
                    return bad(format!("grid {s:?} has no points"));
                }
                Axis::Grid { start: num(a)?, end: num(b)?, count }
            }
            _ => return bad(format!("expected a number or start:end:count, got {s:?}")),
        };
        if axis.points().iter().any(|x| !x.is_finite()) {
            return bad(format!("non-finite value in {s:?}"));
        }
        Ok(axis)
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Axis::Value(v) => write!(f, "{v}"),
            Axis::Grid { start, end, count } => write!(f, "{start}:{end}:{count}"),
        }
    }
}

// Config files may write either `lambda = 0.5` or `lambda = "0.1:1:10"`.
impl Serialize for Axis {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Axis::Value(v) => s.serialize_f64(*v),
            grid => s.serialize_str(&grid.to_string()),
        }
    }
}

impl<'de> Deserialize<'de> for Axis {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Int(i64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Axis::Value(v)),
            Raw::Int(v) => Ok(Axis::Value(v as f64)),
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Initial and final state of the diagonal element ⟨s|U(T)|s⟩.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StateLabel {
    UpVacuum,
    DownVacuum,
    Coherent { alpha: C64, theta: f64, phi: f64 },
}

impl StateLabel {
    pub fn field(&self) -> CanonicalCoherentState {
        match *self {
            StateLabel::Coherent { alpha, .. } => CanonicalCoherentState::from_amplitude(alpha),
            _ => CanonicalCoherentState::vacuum(),
        }
    }

    pub fn spin(&self) -> SpinCoherentState {
        match *self {
            StateLabel::UpVacuum => SpinCoherentState::up(),
            StateLabel::DownVacuum => SpinCoherentState::down(),
            StateLabel::Coherent { theta, phi, .. } => SpinCoherentState { theta, phi },
        }
    }

    pub fn jc_state(&self) -> JcState {
        match self {
            StateLabel::UpVacuum => JcState::up_vacuum(),
            StateLabel::DownVacuum => JcState::down_vacuum(),
            StateLabel::Coherent { .. } => JcState::Coherent { field: self.field(), spin: self.spin() },
        }
    }

    /// Mean photon number, used to size the Fock truncation.
    pub fn photons(&self) -> f64 {
        match self {
            StateLabel::Coherent { alpha, .. } => alpha.norm_sqr(),
            _ => 0.0,
        }
    }
}

impl FromStr for StateLabel {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        match s {
            "up-vacuum" => return Ok(StateLabel::UpVacuum),
            "down-vacuum" => return Ok(StateLabel::DownVacuum),
            _ => {}
        }
        let Some(rest) = s.strip_prefix("coherent:") else {
            return bad(format!("unknown state {s:?}; use up-vacuum, down-vacuum or coherent:<alpha>:<theta>:<phi>"));
        };
        let parts: Vec<&str> = rest.split(':').collect();
        let [a, t, p] = parts.as_slice() else {
            return bad(format!("coherent state needs three fields, got {s:?}"));
        };
        let alpha: C64 = a.trim().parse().map_err(|_| ConfigError(format!("bad field amplitude {a:?}")))?;
        let angle = |x: &str| x.trim().parse::<f64>().map_err(|_| ConfigError(format!("bad angle {x:?}")));
        let (theta, phi) = (angle(t)?, angle(p)?);
        SpinCoherentState::new(theta, phi).map_err(|e| ConfigError(e.to_string()))?;
        if !alpha.is_finite() {
            return bad("field amplitude must be finite");
        }
        Ok(StateLabel::Coherent { alpha, theta, phi })
    }
}

impl fmt::Display for StateLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateLabel::UpVacuum => f.write_str("up-vacuum"),
            StateLabel::DownVacuum => f.write_str("down-vacuum"),
            StateLabel::Coherent { alpha, theta, phi } => write!(f, "coherent:{alpha}:{theta}:{phi}"),
        }
    }
}

impl Serialize for StateLabel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for StateLabel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Observable {
    /// Smallest survival probability |⟨s|U(T)|s⟩|² over [0, t_end].
    SurvivalMin,
    /// Largest |amplitude − exact amplitude| over the time grid.
    MaxDeviation,
}

/// Solver tolerances, each overridable with a `--tol-*` flag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub ode: f64,
    pub shoot: f64,
    pub quad: f64,
    pub agreement: f64,
    /// Largest occupation weight left above the Fock truncation.
    pub truncation: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        let d = DopaOptions::default();
        Self {
            ode: d.shoot.ode.rtol,
            shoot: d.shoot.tol,
            quad: d.quad_tol,
            agreement: d.agreement_tol,
            truncation: 1e-14,
        }
    }
}

impl Tolerances {
    pub fn dopa_options(&self) -> DopaOptions {
        let ode = OdeOptions::with_tol(self.ode);
        DopaOptions {
            shoot: ShootOptions { tol: self.shoot, ode, ..ShootOptions::default() },
            quad_tol: self.quad,
            agreement_tol: self.agreement,
            ..DopaOptions::default()
        }
    }
}

/// Everything a run depends on. Serialised verbatim into JSON output and
/// by `--dump-config`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    pub lambda: Axis,
    pub delta: Axis,
    pub t_end: f64,
    pub samples: usize,
    pub state: StateLabel,
    /// Methods to evaluate; empty means the command's default.
    pub method: Vec<Method>,
    pub format: Format,
    pub out: Option<String>,
    pub observable: Observable,
    /// Fock truncation; 0 picks one from the state.
    pub n_max: usize,
    /// `dopa` only: export the path at `t_end` instead of the amplitude series.
    pub trajectory: bool,
    pub tol: Tolerances,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            lambda: Axis::Value(0.5),
            delta: Axis::Value(0.0),
            t_end: 10.0,
            samples: 101,
            state: StateLabel::UpVacuum,
            method: Vec::new(),
            format: Format::Csv,
            out: None,
            observable: Observable::SurvivalMin,
            n_max: 0,
            trajectory: false,
            tol: Tolerances::default(),
        }
    }
}

impl Settings {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("settings serialise")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !self.t_end.is_finite() || self.t_end <= 0.0 {
            return bad(format!("t_end must be positive, got {}", self.t_end));
        }
        if self.samples < 2 {
            return bad(format!("samples must be at least 2, got {}", self.samples));
        }
        let tol = &self.tol;
        for (name, v) in [
            ("ode", tol.ode),
            ("shoot", tol.shoot),
            ("quad", tol.quad),
            ("agreement", tol.agreement),
            ("truncation", tol.truncation),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return bad(format!("tolerance {name} must be positive, got {v}"));
            }
        }
        Ok(())
    }

    /// Uniform grid t_k = k·t_end/(samples − 1).
    pub fn times(&self) -> Vec<f64> {
        let n = self.samples - 1;
        (0..=n).map(|k| self.t_end * k as f64 / n as f64).collect()
    }

    /// Truncation large enough that the state's tail weight stays below
    /// the truncation tolerance, unless fixed explicitly.
    pub fn fock_cutoff(&self) -> usize {
        if self.n_max > 0 {
            return self.n_max;
        }
        let n = self.state.photons();
        (n + 12.0 * n.sqrt() + 40.0).ceil() as usize
    }
}
