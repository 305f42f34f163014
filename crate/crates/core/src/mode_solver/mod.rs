//! Complex mode functions of the classical equation of motion
//!
//! ```text
//! u'' + (m'/m) u' + omega^2 u = 0,      m (u u'^* - u^* u') = i
//! ```
//!
//! The mode `u(t)` fixes the invariant ladder operators and, through them,
//! every exact state built in [`crate::states`]. Modes come from the static
//! closed form, the adiabatic (WKB) approximation, or numerical integration,
//! and are squeezed by the Bogoliubov map `u -> cosh r u + e^{-i phi} sinh r u^*`.

mod dopri;
pub mod quadrature;

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use num_complex::Complex64;
use thiserror::Error;

use crate::profiles::{OscillatorProfile, ProfileError};
use dopri::{integrate_dense, Dopri5Error, Dopri5Options};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModeError {
    #[error("m0 and omega0 must be positive (got m0 = {m0}, omega0 = {omega0})")]
    Domain { m0: f64, omega0: f64 },
    #[error("WKB mode is invalid: omega reaches {omega_min} <= 0 on [0, {t}]")]
    WkbInvalid { t: f64, omega_min: f64 },
    #[error("initial mode violates the Wronskian condition (|W - i| = {deviation:.3e})")]
    InitialWronskian { deviation: f64 },
    #[error("time grid must start at the initial time {t0} and be strictly increasing")]
    BadGrid { t0: f64 },
    #[error("rel_tol {0} outside [1e-13, 1e-6]")]
    Tolerance(f64),
    #[error("integration failed after t = {last_t}: {reason}")]
    Integration { last_t: f64, reason: String },
    #[error("profile error during integration after t = {last_t}: {source}")]
    Profile {
        last_t: f64,
        #[source]
        source: ProfileError,
    },
    #[error("phase jump of {jump:.3} rad between t = {t_prev} and t = {t}; refine the time grid")]
    RefinementNeeded { t_prev: f64, t: f64, jump: f64 },
    #[error("theta {theta} is inconsistent with the mode phase at t = {t}")]
    BranchMismatch { t: f64, theta: f64 },
    #[error("squeeze parameter r = {0} must be finite and non-negative")]
    Squeeze(f64),
}

/// Mode value and derivative at one time, with the mass at that time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModePoint {
    pub t: f64,
    pub u: Complex64,
    pub u_dot: Complex64,
    pub mass: f64,
}

impl ModePoint {
    /// `m (u u'^* - u^* u')`; equal to `i` for a properly normalised mode.
    pub fn wronskian(&self) -> Complex64 {
        (self.u * self.u_dot.conj() - self.u.conj() * self.u_dot) * self.mass
    }

    pub fn wronskian_deviation(&self) -> f64 {
        (self.wronskian() - I).norm()
    }

    pub fn rho(&self) -> f64 {
        self.u.norm()
    }
}

/// Diagnostic Wronskian of a mode point. Never used to renormalise.
pub fn wronskian(point: &ModePoint) -> Complex64 {
    point.wronskian()
}

/// Squeeze parameters `(r, phi)` with `mu = cosh r`, `nu = e^{-i phi} sinh r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqueezeParams {
    r: f64,
    phi: f64,
}

impl SqueezeParams {
    pub const NONE: SqueezeParams = SqueezeParams { r: 0.0, phi: 0.0 };

    /// `phi` is reduced into `[0, 2 pi)`.
    pub fn new(r: f64, phi: f64) -> Result<Self, ModeError> {
        if !(r.is_finite() && r >= 0.0) || !phi.is_finite() {
            return Err(ModeError::Squeeze(r));
        }
        let mut phi = phi.rem_euclid(TAU);
        if phi >= TAU {
            phi = 0.0;
        }
        Ok(SqueezeParams { r, phi })
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn mu(&self) -> f64 {
        self.r.cosh()
    }

    pub fn nu(&self) -> Complex64 {
        Complex64::from_polar(self.r.sinh(), -self.phi)
    }
}

/// Bogoliubov map applied to mode points or whole trajectories.
pub trait Squeeze: Sized {
    fn squeezed(&self, sq: SqueezeParams) -> Self;
}

impl Squeeze for ModePoint {
    fn squeezed(&self, sq: SqueezeParams) -> Self {
        let (mu, nu) = (sq.mu(), sq.nu());
        ModePoint {
            t: self.t,
            u: self.u * mu + nu * self.u.conj(),
            u_dot: self.u_dot * mu + nu * self.u_dot.conj(),
            mass: self.mass,
        }
    }
}

impl Squeeze for ModeTrajectory {
    fn squeezed(&self, sq: SqueezeParams) -> Self {
        ModeTrajectory {
            profile: self.profile.clone(),
            samples: self.samples.iter().map(|p| p.squeezed(sq)).collect(),
        }
    }
}

/// `u_nu = mu u + nu u^*`, pointwise.
pub fn apply_squeeze<T: Squeeze>(base: &T, sq: SqueezeParams) -> T {
    base.squeezed(sq)
}

/// Time-ordered mode samples for one profile.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeTrajectory {
    profile: OscillatorProfile,
    samples: Vec<ModePoint>,
}

impl ModeTrajectory {
    pub fn new(profile: OscillatorProfile, samples: Vec<ModePoint>) -> Result<Self, ModeError> {
        let t0 = samples.first().map_or(0.0, |p| p.t);
        if samples.windows(2).any(|w| !(w[1].t > w[0].t)) {
            return Err(ModeError::BadGrid { t0 });
        }
        Ok(ModeTrajectory { profile, samples })
    }

    pub fn profile(&self) -> &OscillatorProfile {
        &self.profile
    }

    pub fn samples(&self) -> &[ModePoint] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|p| p.t).collect()
    }

    pub fn max_wronskian_deviation(&self) -> f64 {
        self.samples
            .iter()
            .map(ModePoint::wronskian_deviation)
            .fold(0.0, f64::max)
    }

    /// Last sample with `t <= time`.
    pub fn sample_at_or_before(&self, time: f64) -> Option<(usize, &ModePoint)> {
        let idx = self.samples.partition_point(|p| p.t <= time);
        idx.checked_sub(1).map(|i| (i, &self.samples[i]))
    }
}

/// `u0(t) = e^{-i omega0 t} / sqrt(2 m0 omega0)`.
pub fn static_mode(m0: f64, omega0: f64, t: f64) -> Result<ModePoint, ModeError> {
    if !(m0 > 0.0 && omega0 > 0.0 && m0.is_finite() && omega0.is_finite()) {
        return Err(ModeError::Domain { m0, omega0 });
    }
    let u = Complex64::from_polar((2.0 * m0 * omega0).sqrt().recip(), -omega0 * t);
    Ok(ModePoint {
        t,
        u,
        u_dot: -I * omega0 * u,
        mass: m0,
    })
}

/// Samples the static closed form on `times`.
pub fn static_trajectory(m0: f64, omega0: f64, times: &[f64]) -> Result<ModeTrajectory, ModeError> {
    let samples = times
        .iter()
        .map(|&t| static_mode(m0, omega0, t))
        .collect::<Result<Vec<_>, _>>()?;
    ModeTrajectory::new(OscillatorProfile::Static { m0, omega0 }, samples)
}

/// Accumulated phase `int_0^t omega(s) ds` by adaptive quadrature.
pub fn wkb_phase(profile: &OscillatorProfile, t: f64) -> Result<f64, ModeError> {
    let omega_min = profile.omega_min(0.0, t);
    if !(omega_min > 0.0) {
        return Err(ModeError::WkbInvalid { t, omega_min });
    }
    // omega_min > 0 guarantees the profile samples are valid in frequency;
    // mass errors surface below.
    profile.sample(0.0).map_err(|source| ModeError::Profile {
        last_t: 0.0,
        source,
    })?;
    let omega = |s: f64| profile.sample(s).map(|p| p.omega).unwrap_or(f64::NAN);
    let scale = omega(t).abs().max(omega(0.0).abs()) * t.abs();
    let phase = quadrature::integrate(omega, 0.0, t, 1e-15 * scale.max(1.0));
    if !phase.is_finite() {
        return Err(ModeError::Profile {
            last_t: 0.0,
            source: ProfileError::NonFinite { t },
        });
    }
    Ok(phase)
}

/// Adiabatic mode `e^{-i int omega} / sqrt(2 m omega)` with the exact time
/// derivative of that closed form.
pub fn wkb_mode(profile: &OscillatorProfile, t: f64) -> Result<ModePoint, ModeError> {
    let phase = wkb_phase(profile, t)?;
    let s = profile
        .sample(t)
        .map_err(|source| ModeError::Profile { last_t: t, source })?;
    let u = Complex64::from_polar((2.0 * s.mass * s.omega).sqrt().recip(), -phase);
    let log_rate = 0.5 * (s.mass_dot / s.mass + s.omega_dot / s.omega);
    Ok(ModePoint {
        t,
        u,
        u_dot: u * Complex64::new(-log_rate, -s.omega),
        mass: s.mass,
    })
}

/// `|u'^2 + omega^2 u^2| / (|u'|^2 + omega^2 |u|^2)`; zero when both vanish.
pub fn diagonalization_residual(point: &ModePoint, omega_sq: f64) -> f64 {
    let num = (point.u_dot * point.u_dot + point.u * point.u * omega_sq).norm();
    let den = point.u_dot.norm_sqr() + omega_sq * point.u.norm_sqr();
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
    /// Largest `|W - i|` accepted for the initial point.
    pub initial_wronskian_tol: f64,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_steps: 10_000_000,
            initial_wronskian_tol: 1e-12,
        }
    }
}

impl EvolveOptions {
    pub fn with_rel_tol(rel_tol: f64) -> Self {
        EvolveOptions {
            rel_tol,
            abs_tol: 1e-2 * rel_tol,
            ..Default::default()
        }
    }
}

/// Integrates the mode equation from `initial` and samples it on `t_grid`.
pub fn evolve_mode(
    profile: &OscillatorProfile,
    initial: &ModePoint,
    t_grid: &[f64],
    rel_tol: f64,
) -> Result<ModeTrajectory, ModeError> {
    evolve_mode_with(
        profile,
        initial,
        t_grid,
        &EvolveOptions::with_rel_tol(rel_tol),
    )
}

pub fn evolve_mode_with(
    profile: &OscillatorProfile,
    initial: &ModePoint,
    t_grid: &[f64],
    opts: &EvolveOptions,
) -> Result<ModeTrajectory, ModeError> {
    if !(1e-13..=1e-6).contains(&opts.rel_tol) {
        return Err(ModeError::Tolerance(opts.rel_tol));
    }
    let deviation = initial.wronskian_deviation();
    if !(deviation <= opts.initial_wronskian_tol) {
        return Err(ModeError::InitialWronskian { deviation });
    }
    let t0 = initial.t;
    let starts_ok = t_grid
        .first()
        .is_some_and(|&t| (t - t0).abs() <= 1e-12 * t0.abs().max(1.0));
    if !starts_ok || t_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(ModeError::BadGrid { t0 });
    }

    let rhs = |t: f64, y: &dopri::State| -> Result<dopri::State, ProfileError> {
        let s = profile.sample(t)?;
        Ok([y[1], -(y[1] * (s.mass_dot / s.mass)) - y[0] * s.omega_sq()])
    };
    let dopts = Dopri5Options {
        rtol: opts.rel_tol,
        atol: opts.abs_tol,
        max_steps: opts.max_steps,
    };
    let mut out_times = t_grid.to_vec();
    out_times[0] = t0;
    let states =
        integrate_dense(rhs, t0, [initial.u, initial.u_dot], &out_times, &dopts).map_err(|e| {
            match e {
                Dopri5Error::Rhs { last_t, source } => ModeError::Profile { last_t, source },
                Dopri5Error::StepUnderflow { last_t } => ModeError::Integration {
                    last_t,
                    reason: "step size underflow".into(),
                },
                Dopri5Error::TooManySteps { last_t } => ModeError::Integration {
                    last_t,
                    reason: "step budget exhausted".into(),
                },
            }
        })?;
    let samples = t_grid
        .iter()
        .zip(states)
        .map(|(&t, y)| {
            let mass = profile
                .sample(t)
                .map_err(|source| ModeError::Profile { last_t: t, source })?
                .mass;
            Ok(ModePoint {
                t,
                u: y[0],
                u_dot: y[1],
                mass,
            })
        })
        .collect::<Result<Vec<_>, ModeError>>()?;
    ModeTrajectory::new(profile.clone(), samples)
}

/// A mode point with its modulus and continuously unwrapped phase,
/// `u = rho e^{-i theta}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarMode {
    pub point: ModePoint,
    pub rho: f64,
    pub theta: f64,
}

impl PolarMode {
    /// Single point with `theta` on the principal branch `(-pi, pi]`.
    pub fn principal(point: ModePoint) -> Self {
        let mut theta = -point.u.arg();
        if theta <= -PI {
            theta += TAU;
        }
        PolarMode {
            point,
            rho: point.u.norm(),
            theta,
        }
    }

    /// Attaches an explicit phase branch; `theta` must reproduce `arg u`
    /// modulo `2 pi`.
    pub fn with_theta(point: ModePoint, theta: f64) -> Result<Self, ModeError> {
        let rho = point.u.norm();
        if (Complex64::from_polar(rho, -theta) - point.u).norm() > 1e-9 * rho.max(f64::MIN_POSITIVE)
        {
            return Err(ModeError::BranchMismatch { t: point.t, theta });
        }
        Ok(PolarMode { point, rho, theta })
    }
}

fn wrap_to_pi(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(TAU) - PI;
    if y <= -PI {
        y + TAU
    } else {
        y
    }
}

/// `rho = |u|` and the unwrapped phase `theta` with `u = rho e^{-i theta}`.
/// The first sample takes the principal value.
pub fn polar_decompose(traj: &ModeTrajectory) -> Result<Vec<PolarMode>, ModeError> {
    let mut out: Vec<PolarMode> = Vec::with_capacity(traj.len());
    for p in traj.samples() {
        let next = match out.last() {
            None => PolarMode::principal(*p),
            Some(prev) => {
                let raw = -p.u.arg();
                let jump = wrap_to_pi(raw - (-prev.point.u.arg()));
                if jump.abs() > FRAC_PI_2 {
                    return Err(ModeError::RefinementNeeded {
                        t_prev: prev.point.t,
                        t: p.t,
                        jump,
                    });
                }
                PolarMode {
                    point: *p,
                    rho: p.u.norm(),
                    theta: prev.theta + jump,
                }
            }
        };
        out.push(next);
    }
    Ok(out)
}

/// Squeezes the modes produced by `generate` and unwraps their phase,
/// bisecting the time grid until the unwrap is unambiguous. Returns one
/// [`PolarMode`] per entry of `times`.
pub fn unwrap_with_refinement<G>(
    times: &[f64],
    sq: SqueezeParams,
    mut generate: G,
) -> Result<Vec<PolarMode>, ModeError>
where
    G: FnMut(&[f64]) -> Result<ModeTrajectory, ModeError>,
{
    let mut grid = times.to_vec();
    let mut stride = 1usize;
    for _ in 0..16 {
        let traj = generate(&grid)?.squeezed(sq);
        match polar_decompose(&traj) {
            Ok(polar) => return Ok(polar.into_iter().step_by(stride).collect()),
            Err(ModeError::RefinementNeeded { .. }) => {
                let mut refined = Vec::with_capacity(2 * grid.len());
                for w in grid.windows(2) {
                    refined.push(w[0]);
                    refined.push(0.5 * (w[0] + w[1]));
                }
                refined.extend(grid.last());
                grid = refined;
                stride *= 2;
            }
            Err(e) => return Err(e),
        }
    }
    Err(ModeError::RefinementNeeded {
        t_prev: times[0],
        t: *times.last().unwrap_or(&times[0]),
        jump: f64::NAN,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn static_mode_at_origin() {
        let p = static_mode(1.0, 1.0, 0.0).unwrap();
        assert!(close(p.u, Complex64::new(FRAC_1_SQRT_2, 0.0), 1e-15));
        assert!(close(p.u_dot, Complex64::new(0.0, -FRAC_1_SQRT_2), 1e-15));
        assert!(close(p.wronskian(), I, 1e-15));
    }

    #[test]
    fn static_mode_closed_form() {
        // u = e^{-i pi} / sqrt(12)
        let p = static_mode(2.0, 3.0, PI / 3.0).unwrap();
        let expected = Complex64::new(-1.0 / 12f64.sqrt(), 0.0);
        assert!(close(p.u, expected, 1e-15));
        assert!((p.u.norm() - 1.0 / 12f64.sqrt()).abs() < 1e-16);
        assert!(static_mode(0.0, 1.0, 0.0).is_err());
        assert!(static_mode(1.0, -1.0, 0.0).is_err());
    }

    #[test]
    fn wronskian_is_bilinear() {
        let mut p = static_mode(1.0, 1.0, 0.4).unwrap();
        p.u *= 2.0;
        p.u_dot *= 2.0;
        assert!(close(wronskian(&p), 4.0 * I, 1e-14));
    }

    #[test]
    fn static_wronskian_any_time() {
        for k in 0..40 {
            let p = static_mode(1.0, 1.0, k as f64 * 0.77).unwrap();
            assert!(p.wronskian_deviation() < 1e-15);
        }
    }

    #[test]
    fn squeeze_identity_and_closed_form() {
        let base = static_mode(1.0, 1.0, 0.0).unwrap();
        assert_eq!(base.squeezed(SqueezeParams::NONE), base);
        let sq = SqueezeParams::new(0.5, 0.0).unwrap();
        let s = apply_squeeze(&base, sq);
        assert!(close(
            s.u,
            Complex64::new(0.5f64.exp() * FRAC_1_SQRT_2, 0.0),
            1e-15
        ));
        // A_nu(0) = 1 / (sqrt(2) |u_nu(0)|) = e^{-r}
        assert!((1.0 / (2f64.sqrt() * s.u.norm()) - (-0.5f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn squeeze_preserves_wronskian() {
        let base = static_mode(1.3, 0.8, 2.1).unwrap();
        for &(r, phi) in &[(0.1, 0.0), (1.0, 1.0), (2.5, 4.0), (5.0, 6.0)] {
            let sq = SqueezeParams::new(r, phi).unwrap();
            assert!(
                (sq.mu().powi(2) - sq.nu().norm_sqr() - 1.0).abs()
                    <= 1e-12 * sq.mu().powi(2).max(1.0)
            );
            let dev = base.squeezed(sq).wronskian_deviation();
            assert!(dev <= 1e-12 * sq.mu().powi(2).max(1.0), "r={r} dev={dev}");
        }
    }

    #[test]
    fn same_phase_squeezes_compose() {
        let base = static_mode(1.0, 1.0, 0.9).unwrap();
        let (a, b) = (0.4, 0.7);
        let twice = base
            .squeezed(SqueezeParams::new(a, 0.0).unwrap())
            .squeezed(SqueezeParams::new(b, 0.0).unwrap());
        let once = base.squeezed(SqueezeParams::new(a + b, 0.0).unwrap());
        assert!(close(twice.u, once.u, 1e-12));
        assert!(close(twice.u_dot, once.u_dot, 1e-12));
    }

    #[test]
    fn phi_is_reduced() {
        let sq = SqueezeParams::new(0.3, -1.0).unwrap();
        assert!((sq.phi() - (TAU - 1.0)).abs() < 1e-15);
        assert!(SqueezeParams::new(-0.1, 0.0).is_err());
    }

    #[test]
    fn wkb_matches_static_for_constant_profile() {
        let profile = OscillatorProfile::Static {
            m0: 1.7,
            omega0: 0.6,
        };
        for &t in &[0.0, 1.0, 13.3, -4.0] {
            let a = wkb_mode(&profile, t).unwrap();
            let b = static_mode(1.7, 0.6, t).unwrap();
            assert!(
                close(a.u, b.u, 1e-12) && close(a.u_dot, b.u_dot, 1e-12),
                "t={t}"
            );
        }
    }

    #[test]
    fn wkb_on_slow_ramp_nearly_diagonalizes() {
        let profile = OscillatorProfile::LinearRamp {
            m0: 1.0,
            omega0: 1.0,
            rate: 1e-4,
            start: 0.0,
        };
        let p = wkb_mode(&profile, 10.0).unwrap();
        let (_, w2) = profile.evaluate(10.0).unwrap();
        let res = diagonalization_residual(&p, w2);
        assert!(res <= 1e-3 && res > 0.0, "{res}");
        // the closed form keeps the Wronskian exactly
        assert!(p.wronskian_deviation() < 1e-14);
        // phase = t + rate t^2 / 2
        let phase = wkb_phase(&profile, 10.0).unwrap();
        assert!((phase - (10.0 + 0.5e-4 * 100.0)).abs() < 1e-13);
    }

    #[test]
    fn wkb_refuses_vanishing_frequency() {
        let profile = OscillatorProfile::Sinusoidal {
            m0: 1.0,
            omega0: 1.0,
            depth: 1.5,
            rate: 1.0,
        };
        assert!(matches!(
            wkb_mode(&profile, 6.0),
            Err(ModeError::WkbInvalid { .. })
        ));
        assert!(wkb_mode(&profile, 0.5).is_ok());
    }

    #[test]
    fn wkb_derivative_matches_finite_difference() {
        let profile = OscillatorProfile::MassLinearRamp {
            m0: 1.0,
            omega0: 1.2,
            rate: 0.3,
            start: 0.0,
        };
        let h = 1e-5;
        let p = wkb_mode(&profile, 2.0).unwrap();
        let fd = (wkb_mode(&profile, 2.0 + h).unwrap().u - wkb_mode(&profile, 2.0 - h).unwrap().u)
            / (2.0 * h);
        assert!(close(p.u_dot, fd, 1e-9));
    }

    #[test]
    fn diagonalization_residual_cases() {
        for k in 0..10 {
            let p = static_mode(1.0, 1.0, 0.3 * k as f64).unwrap();
            assert!(diagonalization_residual(&p, 1.0) < 1e-15);
            let s = p.squeezed(SqueezeParams::new(0.5, 0.0).unwrap());
            assert!(diagonalization_residual(&s, 1.0) > 0.1);
        }
        let free = ModePoint {
            t: 0.0,
            u: Complex64::new(1.0, 0.0),
            u_dot: Complex64::new(0.0, 0.0),
            mass: 1.0,
        };
        assert_eq!(diagonalization_residual(&free, 0.0), 0.0);
    }

    #[test]
    fn evolve_rejects_bad_inputs() {
        let profile = OscillatorProfile::Static {
            m0: 1.0,
            omega0: 1.0,
        };
        let init = static_mode(1.0, 1.0, 0.0).unwrap();
        assert!(matches!(
            evolve_mode(&profile, &init, &[0.0, 1.0], 1e-3),
            Err(ModeError::Tolerance(_))
        ));
        assert!(matches!(
            evolve_mode(&profile, &init, &[0.5, 1.0], 1e-10),
            Err(ModeError::BadGrid { .. })
        ));
        assert!(matches!(
            evolve_mode(&profile, &init, &[0.0, 1.0, 1.0], 1e-10),
            Err(ModeError::BadGrid { .. })
        ));
        let mut bad = init;
        bad.u *= 1.01;
        assert!(matches!(
            evolve_mode(&profile, &bad, &[0.0, 1.0], 1e-10),
            Err(ModeError::InitialWronskian { .. })
        ));
    }

    #[test]
    fn evolve_reports_profile_failure() {
        let profile = OscillatorProfile::MassLinearRamp {
            m0: 1.0,
            omega0: 1.0,
            rate: -0.1,
            start: 0.0,
        };
        let init = wkb_mode(&profile, 0.0).unwrap();
        let err = evolve_mode(&profile, &init, &[0.0, 20.0], 1e-10).unwrap_err();
        // m(t) -> 0 at t = 10: either the step collapses or the profile refuses
        match err {
            ModeError::Profile { last_t, .. } | ModeError::Integration { last_t, .. } => {
                assert!(last_t <= 10.0 && last_t > 5.0, "{last_t}")
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn polar_unwraps_continuously() {
        let times: Vec<f64> = (0..=400).map(|k| k as f64 * 4.0 * PI / 400.0).collect();
        let traj = static_trajectory(1.0, 1.0, &times).unwrap();
        let polar = polar_decompose(&traj).unwrap();
        let last = polar.last().unwrap();
        assert!((last.theta - 4.0 * PI).abs() < 1e-12);
        assert!((last.rho - FRAC_1_SQRT_2).abs() < 1e-15);
        for p in &polar {
            assert!((Complex64::from_polar(p.rho, -p.theta) - p.point.u).norm() <= 1e-14);
        }
    }

    #[test]
    fn polar_of_squeezed_static_mode() {
        let times: Vec<f64> = (0..=200).map(|k| k as f64 * 0.05).collect();
        let (r, phi) = (0.5f64, 0.0);
        let traj = static_trajectory(1.0, 1.0, &times)
            .unwrap()
            .squeezed(SqueezeParams::new(r, phi).unwrap());
        for p in polar_decompose(&traj).unwrap() {
            let t = p.point.t;
            let expected = ((2.0 * r).cosh() + (2.0 * r).sinh() * (2.0 * t).cos()) / 2.0;
            assert!((p.rho * p.rho - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn polar_single_point_is_principal() {
        let p = static_mode(1.0, 1.0, 5.0).unwrap();
        let traj = ModeTrajectory::new(
            OscillatorProfile::Static {
                m0: 1.0,
                omega0: 1.0,
            },
            vec![p],
        )
        .unwrap();
        let polar = polar_decompose(&traj).unwrap();
        assert!((polar[0].theta - (5.0 - TAU)).abs() < 1e-14);
    }

    #[test]
    fn polar_demands_refinement_on_coarse_grid() {
        let traj = static_trajectory(1.0, 1.0, &[0.0, 2.0, 4.0]).unwrap();
        assert!(matches!(
            polar_decompose(&traj),
            Err(ModeError::RefinementNeeded { .. })
        ));
        let polar = unwrap_with_refinement(&[0.0, 2.0, 4.0], SqueezeParams::NONE, |ts| {
            static_trajectory(1.0, 1.0, ts)
        })
        .unwrap();
        assert_eq!(polar.len(), 3);
        assert!((polar[2].theta - 4.0).abs() < 1e-13);
        assert_eq!(polar[1].point.t, 2.0);
    }

    #[test]
    fn with_theta_checks_branch() {
        let p = static_mode(1.0, 1.0, 1.0).unwrap();
        assert!(PolarMode::with_theta(p, 1.0 + TAU).is_ok());
        assert!(PolarMode::with_theta(p, 1.5).is_err());
    }
}
