//! Time-dependent mass and frequency profiles.
//!
//! Every profile is a closed-form analytic family, so the mode integrator can
//! query `m`, `dm/dt`, `omega` and `d omega/dt` at arbitrary times without
//! interpolation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProfileError {
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("{field} must be {requirement}")]
    Invalid {
        field: &'static str,
        requirement: &'static str,
    },
    #[error("mass is not positive at t = {t} (m = {mass})")]
    NonPositiveMass { t: f64, mass: f64 },
    #[error("profile is not finite at t = {t}")]
    NonFinite { t: f64 },
}

/// An oscillator `H = p^2 / 2m(t) + m(t) omega(t)^2 x^2 / 2`.
///
/// The JSON form is an object tagged by `kind`; unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OscillatorProfile {
    /// Constant mass and frequency.
    Static { m0: f64, omega0: f64 },
    /// `omega(t) = omega0 (1 + rate (t - start))`.
    LinearRamp {
        m0: f64,
        omega0: f64,
        rate: f64,
        #[serde(default)]
        start: f64,
    },
    /// `omega(t) = omega0 (1 + depth sin(rate t))`.
    Sinusoidal {
        m0: f64,
        omega0: f64,
        depth: f64,
        rate: f64,
    },
    /// `omega(t)` moves from `omega_initial` to `omega_final` along a tanh
    /// step centred at `t_center`.
    TanhQuench {
        m0: f64,
        omega_initial: f64,
        omega_final: f64,
        t_center: f64,
        width: f64,
    },
    /// `m(t) = m0 (1 + rate (t - start))` at constant frequency.
    MassLinearRamp {
        m0: f64,
        omega0: f64,
        rate: f64,
        #[serde(default)]
        start: f64,
    },
}

/// Profile values at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileSample {
    pub mass: f64,
    pub mass_dot: f64,
    pub omega: f64,
    pub omega_dot: f64,
}

impl ProfileSample {
    pub fn omega_sq(&self) -> f64 {
        self.omega * self.omega
    }
}

fn require(ok: bool, field: &'static str, requirement: &'static str) -> Result<(), ProfileError> {
    if ok {
        Ok(())
    } else {
        Err(ProfileError::Invalid { field, requirement })
    }
}

impl OscillatorProfile {
    /// Checks parameter ranges that do not depend on the time window.
    pub fn validate(&self) -> Result<(), ProfileError> {
        let finite = |v: f64, field| require(v.is_finite(), field, "finite");
        let m0 = match *self {
            OscillatorProfile::Static { m0, omega0 } => {
                require(
                    omega0.is_finite() && omega0 >= 0.0,
                    "omega0",
                    "non-negative",
                )?;
                m0
            }
            OscillatorProfile::LinearRamp {
                m0,
                omega0,
                rate,
                start,
            }
            | OscillatorProfile::MassLinearRamp {
                m0,
                omega0,
                rate,
                start,
            } => {
                require(
                    omega0.is_finite() && omega0 >= 0.0,
                    "omega0",
                    "non-negative",
                )?;
                finite(rate, "rate")?;
                finite(start, "start")?;
                m0
            }
            OscillatorProfile::Sinusoidal {
                m0,
                omega0,
                depth,
                rate,
            } => {
                require(
                    omega0.is_finite() && omega0 >= 0.0,
                    "omega0",
                    "non-negative",
                )?;
                finite(depth, "depth")?;
                finite(rate, "rate")?;
                m0
            }
            OscillatorProfile::TanhQuench {
                m0,
                omega_initial,
                omega_final,
                t_center,
                width,
            } => {
                require(
                    omega_initial.is_finite() && omega_initial >= 0.0,
                    "omega_initial",
                    "non-negative",
                )?;
                require(
                    omega_final.is_finite() && omega_final >= 0.0,
                    "omega_final",
                    "non-negative",
                )?;
                finite(t_center, "t_center")?;
                require(width.is_finite() && width > 0.0, "width", "positive")?;
                m0
            }
        };
        require(m0.is_finite() && m0 > 0.0, "m0", "positive")
    }

    /// Reference mass `m0`.
    pub fn m0(&self) -> f64 {
        match *self {
            OscillatorProfile::Static { m0, .. }
            | OscillatorProfile::LinearRamp { m0, .. }
            | OscillatorProfile::Sinusoidal { m0, .. }
            | OscillatorProfile::TanhQuench { m0, .. }
            | OscillatorProfile::MassLinearRamp { m0, .. } => m0,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            OscillatorProfile::Static { .. } => "static",
            OscillatorProfile::LinearRamp { .. } => "linear_ramp",
            OscillatorProfile::Sinusoidal { .. } => "sinusoidal",
            OscillatorProfile::TanhQuench { .. } => "tanh_quench",
            OscillatorProfile::MassLinearRamp { .. } => "mass_linear_ramp",
        }
    }

    pub fn is_static(&self) -> bool {
        matches!(self, OscillatorProfile::Static { .. })
    }

    /// `m`, `dm/dt`, `omega` and `d omega/dt` at `t`.
    pub fn sample(&self, t: f64) -> Result<ProfileSample, ProfileError> {
        let s = match *self {
            OscillatorProfile::Static { m0, omega0 } => ProfileSample {
                mass: m0,
                mass_dot: 0.0,
                omega: omega0,
                omega_dot: 0.0,
            },
            OscillatorProfile::LinearRamp {
                m0,
                omega0,
                rate,
                start,
            } => ProfileSample {
                mass: m0,
                mass_dot: 0.0,
                omega: omega0 * (1.0 + rate * (t - start)),
                omega_dot: omega0 * rate,
            },
            OscillatorProfile::Sinusoidal {
                m0,
                omega0,
                depth,
                rate,
            } => {
                let (s, c) = (rate * t).sin_cos();
                ProfileSample {
                    mass: m0,
                    mass_dot: 0.0,
                    omega: omega0 * (1.0 + depth * s),
                    omega_dot: omega0 * depth * rate * c,
                }
            }
            OscillatorProfile::TanhQuench {
                m0,
                omega_initial,
                omega_final,
                t_center,
                width,
            } => {
                let th = ((t - t_center) / width).tanh();
                let half_gap = 0.5 * (omega_final - omega_initial);
                ProfileSample {
                    mass: m0,
                    mass_dot: 0.0,
                    omega: omega_initial + half_gap * (1.0 + th),
                    omega_dot: half_gap * (1.0 - th * th) / width,
                }
            }
            OscillatorProfile::MassLinearRamp {
                m0,
                omega0,
                rate,
                start,
            } => ProfileSample {
                mass: m0 * (1.0 + rate * (t - start)),
                mass_dot: m0 * rate,
                omega: omega0,
                omega_dot: 0.0,
            },
        };
        if !(s.mass.is_finite()
            && s.mass_dot.is_finite()
            && s.omega.is_finite()
            && s.omega_dot.is_finite())
        {
            return Err(ProfileError::NonFinite { t });
        }
        if s.mass <= 0.0 {
            return Err(ProfileError::NonPositiveMass { t, mass: s.mass });
        }
        Ok(s)
    }

    /// Returns `(m(t), omega(t)^2)`.
    pub fn evaluate(&self, t: f64) -> Result<(f64, f64), ProfileError> {
        self.sample(t).map(|s| (s.mass, s.omega_sq()))
    }

    /// Smallest value of `omega` on `[t0, t1]`, evaluated exactly for each
    /// family.
    pub fn omega_min(&self, t0: f64, t1: f64) -> f64 {
        let (a, b) = if t0 <= t1 { (t0, t1) } else { (t1, t0) };
        let omega = |t: f64| self.sample_unchecked_omega(t);
        match *self {
            OscillatorProfile::Static { omega0, .. }
            | OscillatorProfile::MassLinearRamp { omega0, .. } => omega0,
            // monotone families
            OscillatorProfile::LinearRamp { .. } | OscillatorProfile::TanhQuench { .. } => {
                omega(a).min(omega(b))
            }
            OscillatorProfile::Sinusoidal {
                omega0,
                depth,
                rate,
                ..
            } => {
                let (pa, pb) = {
                    let (x, y) = (rate * a, rate * b);
                    if x <= y {
                        (x, y)
                    } else {
                        (y, x)
                    }
                };
                let sin_min = min_sin_on(pa, pb);
                let sin_max = max_sin_on(pa, pb);
                let factor = if depth >= 0.0 {
                    1.0 + depth * sin_min
                } else {
                    1.0 + depth * sin_max
                };
                omega0 * factor
            }
        }
    }

    fn sample_unchecked_omega(&self, t: f64) -> f64 {
        match *self {
            OscillatorProfile::Static { omega0, .. }
            | OscillatorProfile::MassLinearRamp { omega0, .. } => omega0,
            OscillatorProfile::LinearRamp {
                omega0,
                rate,
                start,
                ..
            } => omega0 * (1.0 + rate * (t - start)),
            OscillatorProfile::Sinusoidal {
                omega0,
                depth,
                rate,
                ..
            } => omega0 * (1.0 + depth * (rate * t).sin()),
            OscillatorProfile::TanhQuench {
                omega_initial,
                omega_final,
                t_center,
                width,
                ..
            } => {
                omega_initial
                    + 0.5 * (omega_final - omega_initial) * (1.0 + ((t - t_center) / width).tanh())
            }
        }
    }

    /// Checks `m(t) > 0` at both ends of `[t0, t1]`. Mass is affine or
    /// constant in every family, so the endpoints decide.
    pub fn validate_window(&self, t0: f64, t1: f64) -> Result<(), ProfileError> {
        self.validate()?;
        self.sample(t0)?;
        self.sample(t1)?;
        Ok(())
    }
}

fn min_sin_on(a: f64, b: f64) -> f64 {
    use std::f64::consts::{FRAC_PI_2, TAU};
    // first trough at or after a
    let k = ((a + FRAC_PI_2) / TAU).ceil();
    let trough = -FRAC_PI_2 + TAU * k;
    if trough <= b {
        -1.0
    } else {
        a.sin().min(b.sin())
    }
}

fn max_sin_on(a: f64, b: f64) -> f64 {
    -min_sin_on(-b, -a)
}

/// Evaluates a profile at `t`, returning `(mass, omega_sq)`.
pub fn evaluate_profile(profile: &OscillatorProfile, t: f64) -> Result<(f64, f64), ProfileError> {
    profile.evaluate(t)
}

/// Parses and validates a profile from its JSON text.
pub fn parse_profile(config_fragment: &str) -> Result<OscillatorProfile, ProfileError> {
    let de = &mut serde_json::Deserializer::from_str(config_fragment);
    let profile: OscillatorProfile =
        serde_path_to_error::deserialize(de).map_err(|e| ProfileError::Parse {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
    profile.validate()?;
    Ok(profile)
}
