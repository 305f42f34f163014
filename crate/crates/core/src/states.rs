//! Exact number-state and displaced-squeezed number-state wave functions on
//! uniform spatial grids.
//!
//! With `u = rho e^{-i theta}` a mode satisfying the Wronskian condition,
//!
//! ```text
//! psi_n(x) = h_n(xi) / sqrt(sqrt(2 hbar) rho) * e^{-i theta (n + 1/2)} * e^{i Im(c) x^2},
//! xi = x / (sqrt(2 hbar) rho),   c = i m conj(u') / (2 hbar conj(u)),
//! ```
//!
//! where `h_n` is the normalized Hermite function. The real part of `c` is
//! `-1/(4 hbar rho^2)` whenever the Wronskian holds, so the Gaussian envelope
//! is carried by `h_n` and the explicit exponential is a pure phase.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::mode_solver::{ModePoint, PolarMode, SqueezeParams};
use crate::stencil;

/// Largest supported number-state index.
pub const N_MAX: usize = 200;

/// Wronskian deviation above which state construction is refused.
pub const WRONSKIAN_GUARD: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StateError {
    #[error("n = {n} exceeds the supported maximum {max}")]
    IndexTooLarge { n: usize, max: usize },
    #[error("hbar must be positive and finite (got {0})")]
    Hbar(f64),
    #[error("mode violates the Wronskian condition (|W - i| = {deviation:.3e})")]
    Wronskian { deviation: f64 },
    #[error("grid too coarse: adjacent samples differ by {ratio:.3} of the peak amplitude")]
    Resolution { ratio: f64 },
    #[error("grid needs {needed} points, above the limit {limit}")]
    GridTooLarge { needed: usize, limit: usize },
    #[error("invalid grid: {0}")]
    Grid(String),
}

/// `x_j = start + j * step` for `j < len`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformGrid {
    pub start: f64,
    pub step: f64,
    pub len: usize,
}

/// Sizing rule for state grids.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPolicy {
    pub min_points: usize,
    /// Half width in units of `sigma = rho sqrt(hbar (2n + 1))`.
    pub half_width_sigmas: f64,
    /// Largest allowed `dx * k_ref`, where `k_ref = (|p_c| + 3 sigma_p) / hbar`.
    pub max_phase_step: f64,
    pub max_points: usize,
}

impl Default for GridPolicy {
    fn default() -> Self {
        GridPolicy {
            min_points: 2048,
            half_width_sigmas: 11.0,
            max_phase_step: 0.2,
            max_points: 1 << 22,
        }
    }
}

impl UniformGrid {
    pub fn new(start: f64, step: f64, len: usize) -> Result<Self, StateError> {
        if len < 2 || !(step > 0.0) || !step.is_finite() || !start.is_finite() {
            return Err(StateError::Grid(format!(
                "need len >= 2 and a positive finite step (len = {len}, step = {step})"
            )));
        }
        Ok(UniformGrid { start, step, len })
    }

    /// `len` points spanning `[center - half_width, center + half_width]`.
    pub fn centered(center: f64, half_width: f64, len: usize) -> Result<Self, StateError> {
        if len < 2 {
            return Err(StateError::Grid(format!(
                "need at least 2 points (got {len})"
            )));
        }
        Self::new(
            center - half_width,
            2.0 * half_width / (len - 1) as f64,
            len,
        )
    }

    /// Grid covering state `n` centred at `center` for the given mode. The
    /// point count is raised above `policy.min_points` when the local
    /// wavenumber demands it.
    pub fn for_state(
        n: usize,
        center: PhaseSpacePoint,
        mode: &ModePoint,
        hbar: f64,
        policy: &GridPolicy,
    ) -> Result<Self, StateError> {
        let spread = (hbar * (2 * n + 1) as f64).sqrt();
        let sigma_x = mode.u.norm() * spread;
        let sigma_p = mode.mass * mode.u_dot.norm() * spread;
        let half = policy.half_width_sigmas * sigma_x;
        let k_ref = (center.p_c.abs() + 3.0 * sigma_p) / hbar;
        let needed = (2.0 * half * k_ref / policy.max_phase_step).ceil() + 1.0;
        if !needed.is_finite() || needed > policy.max_points as f64 {
            return Err(StateError::GridTooLarge {
                needed: if needed.is_finite() {
                    needed as usize
                } else {
                    usize::MAX
                },
                limit: policy.max_points,
            });
        }
        Self::centered(center.x_c, half, policy.min_points.max(needed as usize))
    }

    pub fn x(&self, j: usize) -> f64 {
        self.start + j as f64 * self.step
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len).map(|j| self.x(j)).collect()
    }

    pub fn end(&self) -> f64 {
        self.x(self.len - 1)
    }
}

/// Complex samples of a wave function at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunctionGrid {
    pub t: f64,
    pub grid: UniformGrid,
    pub psi: Vec<Complex64>,
}

impl WaveFunctionGrid {
    pub fn len(&self) -> usize {
        self.psi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.psi.is_empty()
    }

    /// Trapezoid approximation of `int |psi|^2 dx`.
    pub fn norm_sqr(&self) -> f64 {
        trapezoid(self.psi.iter().map(|z| z.norm_sqr()), self.grid.step)
    }

    /// Largest endpoint amplitude relative to the peak amplitude.
    pub fn boundary_ratio(&self) -> f64 {
        let peak = self.psi.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if peak == 0.0 {
            return 0.0;
        }
        let first = self.psi.first().map_or(0.0, |z| z.norm());
        let last = self.psi.last().map_or(0.0, |z| z.norm());
        first.max(last) / peak
    }
}

pub(crate) fn trapezoid<I: Iterator<Item = f64>>(values: I, dx: f64) -> f64 {
    let mut sum = 0.0;
    let mut first = None;
    let mut last = 0.0;
    for v in values {
        if first.is_none() {
            first = Some(v);
        }
        sum += v;
        last = v;
    }
    (sum - 0.5 * (first.unwrap_or(0.0) + last)) * dx
}

/// Displaced-squeezed number state `D(alpha) S(nu) |n>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateSpec {
    pub n: usize,
    pub alpha: Complex64,
    pub squeeze: SqueezeParams,
    pub hbar: f64,
}

impl StateSpec {
    pub fn new(
        n: usize,
        alpha: Complex64,
        squeeze: SqueezeParams,
        hbar: f64,
    ) -> Result<Self, StateError> {
        let spec = StateSpec {
            n,
            alpha,
            squeeze,
            hbar,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), StateError> {
        check_index(self.n)?;
        check_hbar(self.hbar)
    }
}

fn check_index(n: usize) -> Result<(), StateError> {
    if n > N_MAX {
        return Err(StateError::IndexTooLarge { n, max: N_MAX });
    }
    Ok(())
}

fn check_hbar(hbar: f64) -> Result<(), StateError> {
    if !(hbar > 0.0) || !hbar.is_finite() {
        return Err(StateError::Hbar(hbar));
    }
    Ok(())
}

fn check_wronskian(mode: &ModePoint) -> Result<(), StateError> {
    let deviation = mode.wronskian_deviation();
    if !(deviation <= WRONSKIAN_GUARD) {
        return Err(StateError::Wronskian { deviation });
    }
    Ok(())
}

/// Centre of a displaced state in phase space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseSpacePoint {
    pub x_c: f64,
    pub p_c: f64,
}

impl PhaseSpacePoint {
    pub const ORIGIN: PhaseSpacePoint = PhaseSpacePoint { x_c: 0.0, p_c: 0.0 };
}

/// Normalized Hermite function `(2^n n! sqrt(pi))^{-1/2} H_n(xi) e^{-xi^2/2}`.
pub fn weighted_hermite(n: usize, xi: f64) -> f64 {
    // The Gaussian factor is kept as a separate log-scale so neither it nor
    // the polynomial part leaves the f64 range.
    let mut log_scale = -0.5 * xi * xi;
    let mut prev = 0.0;
    let mut cur = PI.powf(-0.25);
    const BIG: f64 = 1e150;
    for k in 0..n {
        let kf = k as f64;
        let next = xi * (2.0 / (kf + 1.0)).sqrt() * cur - (kf / (kf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
        let mag = cur.abs();
        if mag > BIG || (mag < 1.0 / BIG && mag > 0.0) {
            let shift = mag.ln();
            prev /= mag;
            cur /= mag;
            log_scale += shift;
        }
    }
    if cur == 0.0 {
        return 0.0;
    }
    cur.signum() * (cur.abs().ln() + log_scale).exp()
}

/// Coefficient `c` of the quadratic exponent `c (x - x_c)^2`.
pub fn quadratic_exponent(mode: &ModePoint, hbar: f64) -> Complex64 {
    Complex64::new(0.0, 1.0) * mode.mass * mode.u_dot.conj() / (2.0 * hbar * mode.u.conj())
}

/// `Im c` written without the division by `conj(u)`.
fn chirp(mode: &ModePoint, hbar: f64) -> f64 {
    mode.mass * (mode.u_dot * mode.u.conj()).re / (2.0 * hbar * mode.u.norm_sqr())
}

/// Exact number-state wave function for the mode.
pub fn number_wavefunction(
    n: usize,
    mode: &PolarMode,
    hbar: f64,
    grid: &UniformGrid,
) -> Result<WaveFunctionGrid, StateError> {
    check_index(n)?;
    check_hbar(hbar)?;
    check_wronskian(&mode.point)?;
    Ok(evaluate(n, mode, hbar, grid, PhaseSpacePoint::ORIGIN, 0.0))
}

fn evaluate(
    n: usize,
    mode: &PolarMode,
    hbar: f64,
    grid: &UniformGrid,
    center: PhaseSpacePoint,
    constant_phase: f64,
) -> WaveFunctionGrid {
    let width = (2.0 * hbar).sqrt() * mode.rho;
    let amp = width.sqrt().recip();
    let chirp = chirp(&mode.point, hbar);
    let phase0 = -mode.theta * (n as f64 + 0.5) + constant_phase;
    let psi = (0..grid.len)
        .into_par_iter()
        .map(|j| {
            let x = grid.x(j);
            let d = x - center.x_c;
            let h = weighted_hermite(n, d / width);
            let phase = phase0 + chirp * d * d + center.p_c * x / hbar;
            Complex64::from_polar(h * amp, phase)
        })
        .collect();
    WaveFunctionGrid {
        t: mode.point.t,
        grid: *grid,
        psi,
    }
}

/// Phase-space centre `(x_c, p_c)` of a state displaced by `alpha`.
pub fn classical_trajectory(alpha: Complex64, mode: &ModePoint, hbar: f64) -> PhaseSpacePoint {
    let s = hbar.sqrt();
    PhaseSpacePoint {
        x_c: 2.0 * s * (alpha * mode.u).re,
        p_c: 2.0 * s * mode.mass * (alpha * mode.u_dot).re,
    }
}

/// Inverse of [`classical_trajectory`].
pub fn alpha_from_phase_space(point: PhaseSpacePoint, mode: &ModePoint, hbar: f64) -> Complex64 {
    Complex64::new(0.0, 1.0 / hbar.sqrt())
        * (mode.u.conj() * point.p_c - mode.u_dot.conj() * (mode.mass * point.x_c))
}

/// Treatment of the constant phase produced by the displacement operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DisplacementPhase {
    /// Keeps `e^{-i x_c p_c / (2 hbar)}`, required for an exact solution of
    /// the Schrodinger equation.
    #[default]
    Weyl,
    /// Omits it. Only useful as a negative control.
    Dropped,
}

/// Displaced-squeezed number state for an already squeezed mode.
pub fn dsn_wavefunction(
    spec: &StateSpec,
    mode_nu: &PolarMode,
    grid: &UniformGrid,
) -> Result<WaveFunctionGrid, StateError> {
    dsn_wavefunction_with(spec, mode_nu, grid, DisplacementPhase::Weyl)
}

pub fn dsn_wavefunction_with(
    spec: &StateSpec,
    mode_nu: &PolarMode,
    grid: &UniformGrid,
    phase: DisplacementPhase,
) -> Result<WaveFunctionGrid, StateError> {
    spec.validate()?;
    check_wronskian(&mode_nu.point)?;
    let center = classical_trajectory(spec.alpha, &mode_nu.point, spec.hbar);
    let constant = match phase {
        DisplacementPhase::Weyl => -center.x_c * center.p_c / (2.0 * spec.hbar),
        DisplacementPhase::Dropped => 0.0,
    };
    Ok(evaluate(spec.n, mode_nu, spec.hbar, grid, center, constant))
}

/// Applies the annihilation operator `sqrt(hbar) conj(u) d/dx - i m conj(u') x / sqrt(hbar)`
/// by finite differences.
pub fn lower(
    psi: &WaveFunctionGrid,
    mode: &ModePoint,
    hbar: f64,
) -> Result<WaveFunctionGrid, StateError> {
    check_hbar(hbar)?;
    check_resolution(psi)?;
    let s = hbar.sqrt();
    let a = mode.u.conj() * s;
    let b = Complex64::new(0.0, -1.0) * mode.mass * mode.u_dot.conj() / s;
    let d = stencil::first_derivative(&psi.psi, psi.grid.step);
    let out = d
        .iter()
        .zip(&psi.psi)
        .enumerate()
        .map(|(j, (dpsi, p))| a * dpsi + b * psi.grid.x(j) * p)
        .collect();
    Ok(WaveFunctionGrid {
        t: psi.t,
        grid: psi.grid,
        psi: out,
    })
}

fn check_resolution(psi: &WaveFunctionGrid) -> Result<(), StateError> {
    let peak = psi.psi.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if peak == 0.0 {
        return Ok(());
    }
    let jump = psi
        .psi
        .windows(2)
        .map(|w| (w[1] - w[0]).norm())
        .fold(0.0, f64::max);
    let ratio = jump / peak;
    if ratio > 0.5 {
        return Err(StateError::Resolution { ratio });
    }
    Ok(())
}
