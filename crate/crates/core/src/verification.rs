//! Independent correctness checks: the time-dependent Schrodinger residual of
//! constructed states, static-oscillator closed forms with the Nieto
//! coefficients, and the classical equation of motion along `x_c(t)`.

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::mode_solver::{
    evolve_mode_with, static_mode, static_trajectory, unwrap_with_refinement, EvolveOptions,
    ModeError, ModePoint, ModeTrajectory, PolarMode, Squeeze, SqueezeParams,
};
use crate::profiles::{OscillatorProfile, ProfileError};
use crate::states::{
    classical_trajectory, dsn_wavefunction, dsn_wavefunction_with, trapezoid, DisplacementPhase,
    GridPolicy, PhaseSpacePoint, StateError, StateSpec, UniformGrid, WaveFunctionGrid,
};
use crate::stencil;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Largest time step accepted by the residual check.
pub const MAX_RESIDUAL_DT: f64 = 1e-3;

/// Largest accepted phase advance `dt <H>/hbar` over one residual step.
pub const MAX_PHASE_ADVANCE: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Mode(#[from] ModeError),
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error("time step {dt} rejected: {reason}")]
    Step { dt: f64, reason: String },
    #[error("t = {t} +/- {dt} lies outside the trajectory span [{start}, {end}]")]
    Span {
        t: f64,
        dt: f64,
        start: f64,
        end: f64,
    },
    #[error("wave functions live on different grids")]
    Shape,
    #[error("invalid input: {0}")]
    Input(String),
}

/// One named check with its residual and tolerance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRecord {
    pub name: String,
    pub inputs: serde_json::Value,
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl CheckRecord {
    /// Passes when `residual <= tolerance`; NaN never passes.
    pub fn new(
        name: impl Into<String>,
        inputs: serde_json::Value,
        residual: f64,
        tolerance: f64,
    ) -> Self {
        CheckRecord {
            name: name.into(),
            inputs,
            residual,
            tolerance,
            passed: residual <= tolerance,
        }
    }

    /// Records a failed computation as a failing check.
    pub fn failed(
        name: impl Into<String>,
        inputs: serde_json::Value,
        tolerance: f64,
        error: &dyn std::fmt::Display,
    ) -> Self {
        let mut inputs = inputs;
        if let serde_json::Value::Object(map) = &mut inputs {
            map.insert("error".into(), serde_json::Value::String(error.to_string()));
        }
        CheckRecord {
            name: name.into(),
            inputs,
            residual: f64::NAN,
            tolerance,
            passed: false,
        }
    }
}

// ---------------------------------------------------------------------------
// Schrodinger residual

/// Relative residual `|| i hbar (psi_+ - psi_-)/(2 dt) - H psi_0 || / || H psi_0 ||`.
pub fn residual_from_states(
    psi_minus: &WaveFunctionGrid,
    psi_0: &WaveFunctionGrid,
    psi_plus: &WaveFunctionGrid,
    mass: f64,
    omega_sq: f64,
    hbar: f64,
    dt: f64,
) -> Result<f64, VerifyError> {
    if psi_minus.grid != psi_0.grid || psi_plus.grid != psi_0.grid {
        return Err(VerifyError::Shape);
    }
    if !(dt > 0.0) || dt > MAX_RESIDUAL_DT {
        return Err(VerifyError::Step {
            dt,
            reason: format!("must lie in (0, {MAX_RESIDUAL_DT:e}]"),
        });
    }
    let grid = psi_0.grid;
    let d2 = stencil::second_derivative(&psi_0.psi, grid.step);
    let h_psi: Vec<Complex64> = psi_0
        .psi
        .iter()
        .zip(&d2)
        .enumerate()
        .map(|(j, (p, dd))| {
            -hbar * hbar / (2.0 * mass) * dd + 0.5 * mass * omega_sq * grid.x(j).powi(2) * p
        })
        .collect();
    let l2 = |v: &mut dyn Iterator<Item = f64>| trapezoid(v, grid.step).sqrt();
    let h_norm = l2(&mut h_psi.iter().map(|z| z.norm_sqr()));
    let psi_norm = l2(&mut psi_0.psi.iter().map(|z| z.norm_sqr()));
    if !(h_norm > 0.0) || !(psi_norm > 0.0) {
        return Err(VerifyError::Input(
            "zero wave function or zero energy".into(),
        ));
    }
    let advance = dt * h_norm / (hbar * psi_norm);
    if advance > MAX_PHASE_ADVANCE {
        return Err(VerifyError::Step {
            dt,
            reason: format!("phase advance {advance:.3} per step exceeds {MAX_PHASE_ADVANCE}"),
        });
    }
    let diff = l2(&mut psi_minus
        .psi
        .iter()
        .zip(&psi_plus.psi)
        .zip(&h_psi)
        .map(|((m, p), h)| (I * hbar * (p - m) / (2.0 * dt) - h).norm_sqr()));
    Ok(diff / h_norm)
}

/// Modes at `t - dt`, `t`, `t + dt`, freshly integrated from the last
/// trajectory sample at or before `t - dt`, squeezed and phase-unwrapped.
pub fn residual_modes(
    traj: &ModeTrajectory,
    sq: SqueezeParams,
    t: f64,
    dt: f64,
) -> Result<[PolarMode; 3], VerifyError> {
    let span = |_| VerifyError::Span {
        t,
        dt,
        start: traj.samples().first().map_or(f64::NAN, |p| p.t),
        end: traj.samples().last().map_or(f64::NAN, |p| p.t),
    };
    let last = traj.samples().last().ok_or_else(|| span(()))?;
    if t + dt > last.t {
        return Err(span(()));
    }
    let (_, start) = traj.sample_at_or_before(t - dt).ok_or_else(|| span(()))?;
    let start = *start;
    let opts = EvolveOptions {
        initial_wronskian_tol: 1e-6,
        ..EvolveOptions::with_rel_tol(1e-12)
    };
    let mut times = vec![start.t];
    for s in [t - dt, t, t + dt] {
        if s > *times.last().unwrap() {
            times.push(s);
        }
    }
    // intermediate samples keep the phase unwrap well resolved
    let lead = times[1] - start.t;
    if lead > 0.1 {
        let k = (lead / 0.1).ceil() as usize;
        let fill: Vec<f64> = (1..k)
            .map(|j| start.t + lead * j as f64 / k as f64)
            .collect();
        times.splice(1..1, fill);
    }
    let profile = traj.profile().clone();
    let polar = unwrap_with_refinement(&times, sq, |grid| {
        evolve_mode_with(&profile, &start, grid, &opts)
    })?;
    let n = polar.len();
    Ok([polar[n - 3], polar[n - 2], polar[n - 1]])
}

/// Relative Schrodinger residual of the displaced-squeezed number state at `t`.
/// `traj` holds the unsqueezed mode; the grid defaults to the state grid at `t`.
pub fn schrodinger_residual(
    spec: &StateSpec,
    traj: &ModeTrajectory,
    t: f64,
    dt: f64,
    grid: Option<&UniformGrid>,
) -> Result<f64, VerifyError> {
    schrodinger_residual_with(spec, traj, t, dt, grid, DisplacementPhase::Weyl)
}

pub fn schrodinger_residual_with(
    spec: &StateSpec,
    traj: &ModeTrajectory,
    t: f64,
    dt: f64,
    grid: Option<&UniformGrid>,
    phase: DisplacementPhase,
) -> Result<f64, VerifyError> {
    if !(dt > 0.0) || dt > MAX_RESIDUAL_DT {
        return Err(VerifyError::Step {
            dt,
            reason: format!("must lie in (0, {MAX_RESIDUAL_DT:e}]"),
        });
    }
    let modes = residual_modes(traj, spec.squeeze, t, dt)?;
    let grid = match grid {
        Some(g) => *g,
        None => {
            let c = classical_trajectory(spec.alpha, &modes[1].point, spec.hbar);
            UniformGrid::for_state(
                spec.n,
                c,
                &modes[1].point,
                spec.hbar,
                &GridPolicy::default(),
            )?
        }
    };
    let psi: Vec<WaveFunctionGrid> = modes
        .iter()
        .map(|m| dsn_wavefunction_with(spec, m, &grid, phase))
        .collect::<Result<_, _>>()?;
    let (mass, omega_sq) = traj.profile().evaluate(t)?;
    residual_from_states(&psi[0], &psi[1], &psi[2], mass, omega_sq, spec.hbar, dt)
}

/// Order `log2(res(dt) / res(dt/2))`.
pub fn convergence_order(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}

// ---------------------------------------------------------------------------
// Static oscillator closed forms

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StaticCoefficients {
    pub a_nu: f64,
    pub b_nu: Complex64,
    pub theta_nu: f64,
}

/// Width, Gaussian coefficient and unwrapped phase of the squeezed static mode.
pub fn static_coefficients(
    sq: SqueezeParams,
    m0: f64,
    omega0: f64,
    hbar: f64,
    t: f64,
) -> Result<StaticCoefficients, VerifyError> {
    if !(m0 > 0.0 && omega0 > 0.0) {
        return Err(ModeError::Domain { m0, omega0 }.into());
    }
    let (c, s, phi) = (sq.r().cosh(), sq.r().sinh(), sq.phi());
    let arg = 2.0 * omega0 * t - phi;
    let a_nu = (m0 * omega0 / hbar).sqrt()
        / ((2.0 * sq.r()).cosh() + (2.0 * sq.r()).sinh() * arg.cos()).sqrt();
    let fwd = Complex64::from_polar(1.0, omega0 * t);
    let mix = Complex64::from_polar(s, phi) / fwd;
    let b_nu = m0 * omega0 / (2.0 * hbar) * (c * fwd - mix) / (c * fwd + mix);
    let theta_nu = omega0 * t - (c + Complex64::from_polar(s, arg)).arg();
    Ok(StaticCoefficients {
        a_nu,
        b_nu,
        theta_nu,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NietoCoefficients {
    pub f2: Complex64,
    pub f3: Complex64,
    pub f4: f64,
    pub a: Complex64,
    pub b: Complex64,
    /// `A^{1/2}` continued from `1` at `t = 0`.
    pub sqrt_a: Complex64,
    /// `(F3 A)^{1/2}` continued from the principal root at `t = 0`.
    pub sqrt_f3_a: Complex64,
}

/// `(F2, F3, F4)` of the squeezed static oscillator.
pub fn nieto_f(sq: SqueezeParams) -> (Complex64, Complex64, f64) {
    let (c, s, phi) = (sq.r().cosh(), sq.r().sinh(), sq.phi());
    let e = Complex64::from_polar(1.0, phi);
    let f2 = (1.0 - I * phi.sin() * s * (c + e * s)) / ((c + phi.cos() * s) * (c + e * s));
    let f3 = (c + e.conj() * s) / (c + e * s);
    let f4 = (c * c + s * s + 2.0 * phi.cos() * c * s).sqrt();
    (f2, f3, f4)
}

fn nieto_a_b(f2: Complex64, f4: f64, t: f64) -> (Complex64, Complex64) {
    let b = t.cos() + I * f2 * t.sin();
    let a = (f4 * f4 * b - 2.0 * I * t.sin()) / (f4 * f4 * b);
    (a, b)
}

/// Square root of `f(t)` continued from the principal root of `f(0)` in
/// steps of at most 0.01.
fn continued_sqrt<F: Fn(f64) -> Complex64>(f: F, t: f64) -> Complex64 {
    let steps = ((t.abs() / 0.01).ceil() as usize).max(1);
    let mut root = f(0.0).sqrt();
    for k in 1..=steps {
        let r = f(t * k as f64 / steps as f64).sqrt();
        root = if (r - root).norm() <= (r + root).norm() {
            r
        } else {
            -r
        };
    }
    root
}

/// Nieto coefficients at time `t` for `m0 = omega0 = hbar = 1`.
pub fn nieto_ab(sq: SqueezeParams, t: f64) -> NietoCoefficients {
    let (f2, f3, f4) = nieto_f(sq);
    let (a, b) = nieto_a_b(f2, f4, t);
    NietoCoefficients {
        f2,
        f3,
        f4,
        a,
        b,
        sqrt_a: continued_sqrt(|s| nieto_a_b(f2, f4, s).0, t),
        sqrt_f3_a: continued_sqrt(|s| f3 * nieto_a_b(f2, f4, s).0, t),
    }
}

/// Residuals of `A_nu(0) F4 = 1`, `B_nu(0) = F2/2`, `e^{-i theta_nu(0)} = F3^{1/2}`.
pub fn nieto_initial_residuals(sq: SqueezeParams) -> Result<[f64; 3], VerifyError> {
    let k = static_coefficients(sq, 1.0, 1.0, 1.0, 0.0)?;
    let (f2, f3, f4) = nieto_f(sq);
    Ok([
        (k.a_nu * f4 - 1.0).abs(),
        (k.b_nu - f2 / 2.0).norm(),
        (Complex64::from_polar(1.0, -k.theta_nu) - f3.sqrt()).norm(),
    ])
}

/// Residuals of the three time-dependent Nieto relations at `t`.
pub fn nieto_evolved_residuals(sq: SqueezeParams, t: f64) -> Result<[f64; 3], VerifyError> {
    let k = static_coefficients(sq, 1.0, 1.0, 1.0, t)?;
    let n = nieto_ab(sq, t);
    let (c, s) = (t.cos(), t.sin());
    Ok([
        (k.a_nu - 1.0 / (n.f4 * n.b * n.sqrt_a)).norm(),
        (k.b_nu - (n.f2 * c + I * s) / (2.0 * (c + I * n.f2 * s))).norm(),
        (Complex64::from_polar(1.0, -k.theta_nu) - n.sqrt_f3_a).norm(),
    ])
}

/// Initial phase-space point of the static trajectory displaced by `alpha`
/// on the squeezed mode.
pub fn static_initial_point(
    alpha: Complex64,
    sq: SqueezeParams,
    m0: f64,
    omega0: f64,
    hbar: f64,
) -> PhaseSpacePoint {
    let k = alpha * sq.r().cosh() + alpha.conj() * Complex64::from_polar(sq.r().sinh(), sq.phi());
    let scale = (2.0 * hbar / (m0 * omega0)).sqrt();
    PhaseSpacePoint {
        x_c: scale * k.re,
        p_c: m0 * omega0 * scale * k.im,
    }
}

fn hermite_polynomial(n: usize, z: Complex64) -> Complex64 {
    let (mut prev, mut cur) = (Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0));
    for k in 0..n {
        let next = 2.0 * z * cur - 2.0 * k as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Static-oscillator wave function assembled from the closed-form
/// coefficients and the harmonic trajectory `x0 cos + p0/(m w) sin`.
#[allow(clippy::too_many_arguments)]
pub fn static_closed_form_wavefunction(
    n: usize,
    sq: SqueezeParams,
    alpha: Complex64,
    m0: f64,
    omega0: f64,
    hbar: f64,
    t: f64,
    grid: &UniformGrid,
) -> Result<WaveFunctionGrid, VerifyError> {
    let k = static_coefficients(sq, m0, omega0, hbar, t)?;
    let start = static_initial_point(alpha, sq, m0, omega0, hbar);
    let (c, s) = ((omega0 * t).cos(), (omega0 * t).sin());
    let x_c = start.x_c * c + start.p_c / (m0 * omega0) * s;
    let p_c = start.p_c * c - m0 * omega0 * start.x_c * s;
    let factorial: f64 = (1..=n).map(|j| j as f64).product();
    let norm = (2f64.powi(n as i32) * factorial).sqrt().recip()
        * (k.a_nu / std::f64::consts::PI.sqrt()).sqrt();
    let phase = Complex64::from_polar(
        norm,
        -k.theta_nu * (n as f64 + 0.5) - x_c * p_c / (2.0 * hbar),
    );
    let psi = grid
        .points()
        .iter()
        .map(|&x| {
            let d = x - x_c;
            phase
                * Complex64::from_polar(1.0, p_c * x / hbar)
                * hermite_polynomial(n, Complex64::new(k.a_nu * d, 0.0))
                * (-k.b_nu * d * d).exp()
        })
        .collect();
    Ok(WaveFunctionGrid {
        t,
        grid: *grid,
        psi,
    })
}

/// Which phase branch the pipeline side of [`crosscheck_static`] uses.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum ThetaBranch {
    #[default]
    Continuous,
    /// Adds `2 pi k` to the unwrapped phase; a negative control.
    Shifted(i32),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StaticCrossCheck {
    pub max_difference: f64,
    pub peak_amplitude: f64,
    pub theta_pipeline: f64,
    pub theta_closed_form: f64,
    /// False when the two phases differ by more than `1e-9` rad.
    pub branch_consistent: bool,
    pub nieto_initial: [f64; 3],
    pub nieto_evolved: [f64; 3],
}

/// The general pipeline against the static closed form, with `m0 = omega0 = hbar = 1`.
pub fn crosscheck_static(
    sq: SqueezeParams,
    n: usize,
    alpha: Complex64,
    t: f64,
    grid: Option<&UniformGrid>,
) -> Result<StaticCrossCheck, VerifyError> {
    crosscheck_static_with(sq, n, alpha, t, grid, ThetaBranch::Continuous)
}

pub fn crosscheck_static_with(
    sq: SqueezeParams,
    n: usize,
    alpha: Complex64,
    t: f64,
    grid: Option<&UniformGrid>,
    branch: ThetaBranch,
) -> Result<StaticCrossCheck, VerifyError> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(VerifyError::Input(format!(
            "t must be finite and non-negative (got {t})"
        )));
    }
    let intervals = (t / 0.1).ceil() as usize;
    let times: Vec<f64> = (0..=intervals)
        .map(|k| t * k as f64 / intervals.max(1) as f64)
        .collect();
    let polar = unwrap_with_refinement(&times, sq, |ts| static_trajectory(1.0, 1.0, ts))?;
    let mut mode = *polar.last().unwrap();
    if let ThetaBranch::Shifted(k) = branch {
        mode.theta += std::f64::consts::TAU * k as f64;
    }
    let spec = StateSpec::new(n, alpha, sq, 1.0)?;
    let grid = match grid {
        Some(g) => *g,
        None => UniformGrid::for_state(
            n,
            classical_trajectory(alpha, &mode.point, 1.0),
            &mode.point,
            1.0,
            &GridPolicy::default(),
        )?,
    };
    let pipeline = dsn_wavefunction(&spec, &mode, &grid)?;
    let closed = static_closed_form_wavefunction(n, sq, alpha, 1.0, 1.0, 1.0, t, &grid)?;
    let max_difference = pipeline
        .psi
        .iter()
        .zip(&closed.psi)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    let peak_amplitude = closed.psi.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let theta_closed_form = static_coefficients(sq, 1.0, 1.0, 1.0, t)?.theta_nu;
    Ok(StaticCrossCheck {
        max_difference,
        peak_amplitude,
        theta_pipeline: mode.theta,
        theta_closed_form,
        branch_consistent: (mode.theta - theta_closed_form).abs() <= 1e-9,
        nieto_initial: nieto_initial_residuals(sq)?,
        nieto_evolved: nieto_evolved_residuals(sq, t)?,
    })
}

// ---------------------------------------------------------------------------
// Classical trajectory

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectoryResidual {
    /// `max |m x'' + m' x' + m w^2 x|` over the largest term magnitude.
    pub equation_of_motion: f64,
    /// `max |p_c - m x_c'|`.
    pub momentum: f64,
}

/// Finite-difference check of the classical equation of motion along
/// `x_c(t)` sampled every `h` on `[initial.t, t_end]`.
pub fn classical_trajectory_residual(
    profile: &OscillatorProfile,
    initial: ModePoint,
    alpha: Complex64,
    sq: SqueezeParams,
    hbar: f64,
    t_end: f64,
    h: f64,
) -> Result<TrajectoryResidual, VerifyError> {
    if !(h > 0.0) || !(t_end - initial.t >= 9.0 * h) {
        return Err(VerifyError::Input(format!(
            "need h > 0 and at least nine samples on [{}, {t_end}] (h = {h})",
            initial.t
        )));
    }
    let count = ((t_end - initial.t) / h).floor() as usize + 1;
    let times: Vec<f64> = (0..count).map(|k| initial.t + k as f64 * h).collect();
    let opts = EvolveOptions {
        initial_wronskian_tol: 1e-6,
        ..EvolveOptions::with_rel_tol(1e-12)
    };
    let modes = evolve_mode_with(profile, &initial, &times, &opts)?;
    let centers: Vec<PhaseSpacePoint> = modes
        .samples()
        .iter()
        .map(|p| classical_trajectory(alpha, &p.squeezed(sq), hbar))
        .collect();
    let xs: Vec<f64> = centers.iter().map(|c| c.x_c).collect();
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    let mut momentum = 0.0f64;
    for j in 4..count - 4 {
        let s = profile.sample(times[j])?;
        let v = stencil::first_derivative_real(&xs, h, j).expect("interior index");
        let acc = stencil::second_derivative_real(&xs, h, j).expect("interior index");
        let terms = [s.mass * acc, s.mass_dot * v, s.mass * s.omega_sq() * xs[j]];
        worst = worst.max(terms.iter().sum::<f64>().abs());
        scale = scale.max(terms.iter().map(|x| x.abs()).sum());
        momentum = momentum.max((centers[j].p_c - s.mass * v).abs());
    }
    Ok(TrajectoryResidual {
        equation_of_motion: if scale > 0.0 { worst / scale } else { 0.0 },
        momentum,
    })
}

/// Static mode helper used by the checks above: `u0` squeezed and put in
/// polar form on the principal branch.
pub fn static_polar(
    sq: SqueezeParams,
    m0: f64,
    omega0: f64,
    t: f64,
) -> Result<PolarMode, VerifyError> {
    Ok(PolarMode::principal(
        static_mode(m0, omega0, t)?.squeezed(sq),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mode_solver::{evolve_mode, wkb_mode};
    use crate::states::{number_wavefunction, quadratic_exponent};
    use std::f64::consts::{PI, TAU};

    fn sq(r: f64, phi: f64) -> SqueezeParams {
        SqueezeParams::new(r, phi).unwrap()
    }

    fn quench() -> OscillatorProfile {
        OscillatorProfile::TanhQuench {
            m0: 1.0,
            omega_initial: 2.0,
            omega_final: 1.0,
            t_center: 5.0,
            width: 0.5,
        }
    }

    fn trajectory(profile: &OscillatorProfile, t_end: f64) -> ModeTrajectory {
        let times: Vec<f64> = (0..=(t_end / 0.05) as usize)
            .map(|k| k as f64 * 0.05)
            .collect();
        let start = wkb_mode(profile, 0.0).unwrap();
        evolve_mode(profile, &start, &times, 1e-10).unwrap()
    }

    #[test]
    fn static_eigenstate_residual() {
        let profile = OscillatorProfile::Static {
            m0: 1.0,
            omega0: 1.0,
        };
        let traj = trajectory(&profile, 3.0);
        let spec = StateSpec::new(0, Complex64::new(0.0, 0.0), SqueezeParams::NONE, 1.0).unwrap();
        let r = schrodinger_residual(&spec, &traj, 1.5, 1e-4, None).unwrap();
        assert!(r <= 1e-7, "{r}");
    }

    #[test]
    fn quench_residual_converges_quadratically() {
        let profile = quench();
        let traj = trajectory(&profile, 8.0);
        let spec = StateSpec::new(2, Complex64::new(1.0, 0.0), sq(0.5, 0.0), 1.0).unwrap();
        let fine = schrodinger_residual(&spec, &traj, 5.0, 1e-4, None).unwrap();
        assert!(fine <= 1e-4, "{fine}");
        let a = schrodinger_residual(&spec, &traj, 5.0, 1e-3, None).unwrap();
        let b = schrodinger_residual(&spec, &traj, 5.0, 5e-4, None).unwrap();
        let order = convergence_order(a, b);
        assert!((order - 2.0).abs() <= 0.2, "order {order} ({a:e}, {b:e})");
    }

    #[test]
    fn residual_negative_controls() {
        // a number state whose dynamical phase is frozen
        let modes: Vec<PolarMode> = [-1e-4, 0.0, 1e-4]
            .iter()
            .map(|&t| {
                let mut m = static_polar(SqueezeParams::NONE, 1.0, 1.0, 0.7 + t).unwrap();
                m.theta = 0.0;
                m
            })
            .collect();
        let grid = UniformGrid::centered(0.0, 12.0, 2048).unwrap();
        let psi: Vec<_> = modes
            .iter()
            .map(|m| number_wavefunction(1, m, 1.0, &grid).unwrap())
            .collect();
        let r = residual_from_states(&psi[0], &psi[1], &psi[2], 1.0, 1.0, 1.0, 1e-4).unwrap();
        assert!(r >= 1e-1, "{r}");

        // the displaced state without its constant displacement phase
        let traj = trajectory(&quench(), 8.0);
        let spec = StateSpec::new(2, Complex64::new(1.0, 0.0), sq(0.5, 0.0), 1.0).unwrap();
        let dropped =
            schrodinger_residual_with(&spec, &traj, 4.0, 1e-4, None, DisplacementPhase::Dropped)
                .unwrap();
        let kept =
            schrodinger_residual_with(&spec, &traj, 4.0, 1e-4, None, DisplacementPhase::Weyl)
                .unwrap();
        assert!(
            dropped >= 1e-1 && kept <= 1e-5,
            "dropped {dropped:e}, kept {kept:e}"
        );
    }

    #[test]
    fn residual_rejects_bad_steps() {
        let profile = OscillatorProfile::Static {
            m0: 1.0,
            omega0: 1.0,
        };
        let traj = trajectory(&profile, 2.0);
        let spec = StateSpec::new(0, Complex64::new(0.0, 0.0), SqueezeParams::NONE, 1.0).unwrap();
        assert!(matches!(
            schrodinger_residual(&spec, &traj, 1.0, 2e-3, None),
            Err(VerifyError::Step { .. })
        ));
        assert!(matches!(
            schrodinger_residual(&spec, &traj, 1.9999, 5e-4, None),
            Err(VerifyError::Span { .. })
        ));
        let far = StateSpec::new(200, Complex64::new(0.0, 0.0), SqueezeParams::NONE, 1.0).unwrap();
        let psi = |t| {
            number_wavefunction(
                200,
                &static_polar(SqueezeParams::NONE, 1.0, 1.0, t).unwrap(),
                1.0,
                &UniformGrid::centered(0.0, 40.0, 8192).unwrap(),
            )
            .unwrap()
        };
        let r = residual_from_states(&psi(0.0), &psi(1e-3), &psi(2e-3), 1.0, 1.0, far.hbar, 1e-3);
        assert!(matches!(r, Err(VerifyError::Step { .. })));
    }

    #[test]
    fn static_coefficient_examples() {
        let k = static_coefficients(SqueezeParams::NONE, 2.0, 3.0, 0.5, 0.8).unwrap();
        assert!((k.a_nu - 12f64.sqrt()).abs() < 1e-14);
        assert!((k.b_nu - Complex64::new(6.0, 0.0)).norm() < 1e-14);
        assert!((k.theta_nu - 2.4).abs() < 1e-14);
        let k = static_coefficients(sq(0.5, 0.0), 1.0, 1.0, 1.0, 0.0).unwrap();
        assert!((k.a_nu - (-0.5f64).exp()).abs() < 1e-15);
        assert!(static_coefficients(SqueezeParams::NONE, -1.0, 1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn static_coefficients_match_the_mode_pipeline() {
        for &(r, phi) in &[(0.3, 0.2), (1.5, 4.0), (0.9, 6.0)] {
            let s = sq(r, phi);
            let times: Vec<f64> = (0..=200).map(|k| k as f64 * 0.05).collect();
            let polar =
                unwrap_with_refinement(&times, s, |ts| static_trajectory(1.3, 0.7, ts)).unwrap();
            for p in polar.iter().step_by(13) {
                let k = static_coefficients(s, 1.3, 0.7, 0.4, p.point.t).unwrap();
                assert!((k.a_nu - 1.0 / ((0.8f64).sqrt() * p.rho)).abs() < 1e-12 * k.a_nu);
                assert!((k.b_nu.re - 1.0 / (1.6 * p.rho * p.rho)).abs() < 1e-12 * k.b_nu.re);
                assert!(
                    (k.b_nu + quadratic_exponent(&p.point, 0.4)).norm() < 1e-12 * k.b_nu.norm()
                );
                assert!((k.theta_nu - p.theta).abs() < 1e-12, "t={}", p.point.t);
            }
        }
    }

    #[test]
    fn nieto_examples() {
        let (f2, f3, f4) = nieto_f(SqueezeParams::NONE);
        assert_eq!(
            (f2, f3, f4),
            (Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0), 1.0)
        );
        assert!((nieto_f(sq(0.5, 0.0)).2 - 0.5f64.exp()).abs() < 1e-15);
        let n = nieto_ab(sq(0.8, 1.0), 0.0);
        assert!((n.a - 1.0).norm() < 1e-15 && (n.b - 1.0).norm() < 1e-15);
        for k in 0..10 {
            let t = k as f64 * 0.7;
            let n = nieto_ab(SqueezeParams::NONE, t);
            assert!((n.b - Complex64::from_polar(1.0, t)).norm() < 1e-14);
            let a_nu = 1.0 / (n.f4 * n.b * n.sqrt_a);
            assert!((a_nu - 1.0).norm() < 1e-14);
        }
        assert!((nieto_f(sq(1.2, 2.5)).1.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn nieto_identities_hold() {
        for &r in &[0.0, 0.25, 0.5, 1.0, 1.5] {
            for j in 0..8 {
                let s = sq(r, j as f64 * TAU / 8.0);
                assert!(nieto_initial_residuals(s)
                    .unwrap()
                    .iter()
                    .all(|&e| e <= 1e-12));
                for k in 0..16 {
                    let t = k as f64 * TAU / 15.0;
                    let e = nieto_evolved_residuals(s, t).unwrap();
                    assert!(e.iter().all(|&x| x <= 1e-10), "r={r} j={j} t={t}: {e:?}");
                }
            }
        }
    }

    #[test]
    fn closed_form_matches_pipeline() {
        let ground =
            crosscheck_static(SqueezeParams::NONE, 0, Complex64::new(0.0, 0.0), 0.0, None).unwrap();
        assert!(ground.max_difference <= 1e-12);
        let c = crosscheck_static(sq(0.5, 1.0), 3, Complex64::new(1.0, 0.5), 2.7, None).unwrap();
        assert!(c.max_difference <= 1e-10, "{}", c.max_difference);
        assert!(c.branch_consistent);
        let late =
            crosscheck_static(sq(1.4, 5.5), 7, Complex64::new(-2.0, 1.0), 31.0, None).unwrap();
        assert!(late.max_difference <= 1e-10, "{}", late.max_difference);
    }

    #[test]
    fn shifted_branch_is_flagged() {
        let c = crosscheck_static_with(
            sq(0.5, 1.0),
            3,
            Complex64::new(1.0, 0.5),
            2.7,
            None,
            ThetaBranch::Shifted(1),
        )
        .unwrap();
        assert!(!c.branch_consistent);
        assert!(c.max_difference > 0.1 * c.peak_amplitude);
        assert!((c.theta_pipeline - c.theta_closed_form - TAU).abs() < 1e-9);
    }

    #[test]
    fn static_initial_point_matches_trajectory() {
        let s = sq(0.7, 2.0);
        let alpha = Complex64::new(0.4, -1.1);
        let mode = static_polar(s, 1.0, 1.0, 0.0).unwrap().point;
        let a = classical_trajectory(alpha, &mode, 1.0);
        let b = static_initial_point(alpha, s, 1.0, 1.0, 1.0);
        assert!((a.x_c - b.x_c).abs() < 1e-14 && (a.p_c - b.p_c).abs() < 1e-14);
    }

    #[test]
    fn classical_trajectory_obeys_equation_of_motion() {
        let profiles = [
            OscillatorProfile::Static {
                m0: 1.0,
                omega0: 1.0,
            },
            OscillatorProfile::MassLinearRamp {
                m0: 1.0,
                omega0: 1.0,
                rate: 0.05,
                start: 0.0,
            },
            OscillatorProfile::Sinusoidal {
                m0: 1.0,
                omega0: 1.0,
                depth: 0.3,
                rate: 1.3,
            },
            quench(),
        ];
        for p in &profiles {
            let start = wkb_mode(p, 0.0).unwrap();
            let r = classical_trajectory_residual(
                p,
                start,
                Complex64::new(1.0, -0.5),
                sq(0.5, 1.0),
                1.0,
                20.0,
                0.025,
            )
            .unwrap();
            assert!(
                r.equation_of_motion <= 1e-6 && r.momentum <= 1e-6,
                "{}: {r:?}",
                p.kind()
            );
        }
    }

    #[test]
    fn check_records() {
        let ok = CheckRecord::new("a", serde_json::json!({}), 1e-9, 1e-8);
        assert!(ok.passed);
        assert!(!CheckRecord::new("b", serde_json::json!({}), f64::NAN, 1.0).passed);
        let f = CheckRecord::failed("c", serde_json::json!({"n": 1}), 1.0, &"boom");
        assert!(!f.passed && f.inputs["error"] == "boom");
        let _ = PI;
    }
}
