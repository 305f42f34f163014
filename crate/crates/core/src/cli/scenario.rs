//! Scenario files: the complete record of one experiment.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::mode_solver::{static_mode, wkb_mode, ModeError, ModePoint, SqueezeParams};
use crate::profiles::OscillatorProfile;
use crate::states::{GridPolicy, StateSpec, N_MAX};

use super::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplexValue {
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

impl From<ComplexValue> for Complex64 {
    fn from(c: ComplexValue) -> Self {
        Complex64::new(c.re, c.im)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateEntry {
    pub n: usize,
    #[serde(default = "zero_alpha")]
    pub alpha: ComplexValue,
    #[serde(default)]
    pub r: f64,
    #[serde(default)]
    pub phi: f64,
}

fn zero_alpha() -> ComplexValue {
    ComplexValue { re: 0.0, im: 0.0 }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    pub t_start: f64,
    pub t_end: f64,
    pub samples: usize,
}

impl TimeGrid {
    pub fn times(&self) -> Vec<f64> {
        let span = self.t_end - self.t_start;
        let last = (self.samples - 1) as f64;
        (0..self.samples)
            .map(|k| {
                if k + 1 == self.samples {
                    self.t_end
                } else {
                    self.t_start + span * k as f64 / last
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSettings {
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default = "default_half_width")]
    pub half_width_sigmas: f64,
}

fn default_points() -> usize {
    2048
}

fn default_half_width() -> f64 {
    11.0
}

impl Default for GridSettings {
    fn default() -> Self {
        GridSettings {
            points: default_points(),
            half_width_sigmas: default_half_width(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_ode")]
    pub ode_rel_tol: f64,
    #[serde(default = "default_quadrature")]
    pub quadrature_tol: f64,
    #[serde(default = "default_residual_dt")]
    pub residual_dt: f64,
}

fn default_ode() -> f64 {
    1e-10
}

fn default_quadrature() -> f64 {
    1e-8
}

fn default_residual_dt() -> f64 {
    1e-4
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            ode_rel_tol: default_ode(),
            quadrature_tol: default_quadrature(),
            residual_dt: default_residual_dt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSettings {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default = "yes")]
    pub csv: bool,
    #[serde(default = "yes")]
    pub json: bool,
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

fn yes() -> bool {
    true
}

impl Default for OutputSettings {
    fn default() -> Self {
        OutputSettings {
            dir: default_dir(),
            csv: true,
            json: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialMode {
    /// Adiabatic mode at `t_start`.
    #[default]
    Wkb,
    /// Static mode of the instantaneous mass and frequency at `t_start`.
    Static,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub profile: OscillatorProfile,
    #[serde(default = "one")]
    pub hbar: f64,
    pub states: Vec<StateEntry>,
    pub time_grid: TimeGrid,
    #[serde(default)]
    pub grid: GridSettings,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub outputs: OutputSettings,
    #[serde(default)]
    pub initial_mode: InitialMode,
}

fn one() -> f64 {
    1.0
}

fn invalid(field: &str, requirement: impl Into<String>) -> CliError {
    CliError::Validation(format!("{field} must be {}", requirement.into()))
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let scenario: Scenario = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            CliError::Validation(format!("scenario field `{path}`: {}", e.into_inner()))
        })?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.profile
            .validate()
            .map_err(|e| CliError::Validation(format!("profile: {e}")))?;
        if !(self.hbar > 0.0) || !self.hbar.is_finite() {
            return Err(invalid("hbar", "positive"));
        }
        let tg = &self.time_grid;
        if !(tg.t_end > tg.t_start) || !tg.t_start.is_finite() || !tg.t_end.is_finite() {
            return Err(invalid("time_grid.t_end", "greater than time_grid.t_start"));
        }
        if tg.samples < 2 {
            return Err(invalid("time_grid.samples", "at least 2"));
        }
        if self.grid.points < 64 {
            return Err(invalid("grid.points", "at least 64"));
        }
        if !(self.grid.half_width_sigmas >= 4.0) || !self.grid.half_width_sigmas.is_finite() {
            return Err(invalid("grid.half_width_sigmas", "at least 4"));
        }
        let tol = &self.tolerances;
        if !(1e-13..=1e-6).contains(&tol.ode_rel_tol) {
            return Err(invalid("tolerances.ode_rel_tol", "in [1e-13, 1e-6]"));
        }
        if !(tol.quadrature_tol > 0.0) {
            return Err(invalid("tolerances.quadrature_tol", "positive"));
        }
        if !(tol.residual_dt > 0.0 && tol.residual_dt <= 1e-3) {
            return Err(invalid("tolerances.residual_dt", "in (0, 1e-3]"));
        }
        if self.states.is_empty() {
            return Err(invalid("states", "non-empty"));
        }
        for (i, s) in self.states.iter().enumerate() {
            if s.n > N_MAX {
                return Err(invalid(
                    &format!("states[{i}].n"),
                    format!("at most {N_MAX}"),
                ));
            }
            if !(s.r >= 0.0) || !s.r.is_finite() {
                return Err(invalid(
                    &format!("states[{i}].r"),
                    "finite and non-negative",
                ));
            }
            if !s.phi.is_finite() || !s.alpha.re.is_finite() || !s.alpha.im.is_finite() {
                return Err(invalid(&format!("states[{i}]"), "finite"));
            }
        }
        self.profile
            .validate_window(tg.t_start, tg.t_end)
            .map_err(|e| {
                CliError::Validation(format!("profile on [{}, {}]: {e}", tg.t_start, tg.t_end))
            })?;
        Ok(())
    }

    pub fn state(&self, index: usize) -> Result<StateSpec, CliError> {
        let s = self
            .states
            .get(index)
            .ok_or_else(|| invalid("--state-index", format!("below {}", self.states.len())))?;
        let sq = SqueezeParams::new(s.r, s.phi).map_err(|e| CliError::Validation(e.to_string()))?;
        StateSpec::new(s.n, s.alpha.into(), sq, self.hbar)
            .map_err(|e| CliError::Validation(e.to_string()))
    }

    pub fn grid_policy(&self) -> GridPolicy {
        GridPolicy {
            min_points: self.grid.points,
            half_width_sigmas: self.grid.half_width_sigmas,
            ..GridPolicy::default()
        }
    }

    /// Unsqueezed mode at `t_start`.
    pub fn initial_mode(&self) -> Result<ModePoint, ModeError> {
        let t0 = self.time_grid.t_start;
        match self.initial_mode {
            InitialMode::Wkb => wkb_mode(&self.profile, t0),
            InitialMode::Static => {
                let s = self
                    .profile
                    .sample(t0)
                    .map_err(|source| ModeError::Profile { last_t: t0, source })?;
                static_mode(s.mass, s.omega, t0)
            }
        }
    }

    /// Hex SHA-256 of the profile's canonical JSON.
    pub fn profile_hash(&self) -> String {
        let canonical = serde_json::to_string(&self.profile).expect("profile serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }
}
