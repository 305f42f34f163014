//! Expectation values from quadrature on the spatial grid and from the
//! closed-form moments of displaced-squeezed number states.

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::mode_solver::ModePoint;
use crate::states::{classical_trajectory, trapezoid, StateSpec, WaveFunctionGrid};
use crate::stencil;

/// Largest endpoint-to-peak amplitude ratio accepted by quadrature.
pub const COVERAGE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ObservableError {
    #[error("wave functions live on different grids")]
    Shape,
    #[error(
        "wave function not negligible at the grid boundary (ratio {ratio:.3e} > {COVERAGE_TOL:e})"
    )]
    Coverage { ratio: f64 },
    #[error("wave function has zero norm")]
    ZeroNorm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentSet {
    pub mean_x: f64,
    pub mean_p: f64,
    pub mean_x2: f64,
    pub mean_p2: f64,
    pub var_x: f64,
    pub var_p: f64,
    pub uncertainty_product: f64,
}

impl MomentSet {
    pub fn from_raw(mean_x: f64, mean_p: f64, mean_x2: f64, mean_p2: f64) -> Self {
        let var_x = (mean_x2 - mean_x * mean_x).max(0.0);
        let var_p = (mean_p2 - mean_p * mean_p).max(0.0);
        MomentSet {
            mean_x,
            mean_p,
            mean_x2,
            mean_p2,
            var_x,
            var_p,
            uncertainty_product: (var_x * var_p).sqrt(),
        }
    }

    /// Largest mismatch of the four raw moments, each measured relative to
    /// `max(1, |other|)`.
    pub fn max_relative_difference(&self, other: &MomentSet) -> f64 {
        [
            (self.mean_x, other.mean_x),
            (self.mean_p, other.mean_p),
            (self.mean_x2, other.mean_x2),
            (self.mean_p2, other.mean_p2),
        ]
        .iter()
        .map(|(a, b)| (a - b).abs() / b.abs().max(1.0))
        .fold(0.0, f64::max)
    }
}

/// `int conj(f) g dx` by the trapezoid rule.
pub fn inner_product(
    f: &WaveFunctionGrid,
    g: &WaveFunctionGrid,
) -> Result<Complex64, ObservableError> {
    if f.grid != g.grid || f.psi.len() != g.psi.len() {
        return Err(ObservableError::Shape);
    }
    let n = f.psi.len();
    let mut acc: Complex64 = f.psi.iter().zip(&g.psi).map(|(a, b)| a.conj() * b).sum();
    if n > 0 {
        acc -= 0.5 * (f.psi[0].conj() * g.psi[0] + f.psi[n - 1].conj() * g.psi[n - 1]);
    }
    Ok(acc * f.grid.step)
}

fn check_coverage(psi: &WaveFunctionGrid) -> Result<(), ObservableError> {
    let ratio = psi.boundary_ratio();
    if ratio > COVERAGE_TOL {
        return Err(ObservableError::Coverage { ratio });
    }
    Ok(())
}

/// Position and momentum moments, normalized by the quadrature norm.
pub fn quadrature_moments(psi: &WaveFunctionGrid, hbar: f64) -> Result<MomentSet, ObservableError> {
    check_coverage(psi)?;
    let dx = psi.grid.step;
    let norm = psi.norm_sqr();
    if !(norm > 0.0) {
        return Err(ObservableError::ZeroNorm);
    }
    let x = |j: usize| psi.grid.x(j);
    let mean_x = trapezoid(
        psi.psi.iter().enumerate().map(|(j, z)| x(j) * z.norm_sqr()),
        dx,
    ) / norm;
    let mean_x2 = trapezoid(
        psi.psi
            .iter()
            .enumerate()
            .map(|(j, z)| x(j) * x(j) * z.norm_sqr()),
        dx,
    ) / norm;
    let d = stencil::first_derivative(&psi.psi, dx);
    // <p> = Re int conj(psi) (-i hbar psi') dx
    let mean_p =
        hbar * trapezoid(psi.psi.iter().zip(&d).map(|(z, dz)| (z.conj() * dz).im), dx) / norm;
    let mean_p2 = hbar * hbar * trapezoid(d.iter().map(|dz| dz.norm_sqr()), dx) / norm;
    Ok(MomentSet::from_raw(mean_x, mean_p, mean_x2, mean_p2))
}

/// Closed-form moments of the displaced-squeezed number state built on `mode_nu`.
pub fn analytic_moments(spec: &StateSpec, mode_nu: &ModePoint) -> MomentSet {
    let c = classical_trajectory(spec.alpha, mode_nu, spec.hbar);
    let level = spec.hbar * (2 * spec.n + 1) as f64;
    let m = mode_nu.mass;
    MomentSet::from_raw(
        c.x_c,
        c.p_c,
        level * mode_nu.u.norm_sqr() + c.x_c * c.x_c,
        level * m * m * mode_nu.u_dot.norm_sqr() + c.p_c * c.p_c,
    )
}

/// Energy of the number state `n` of the mode, `hbar m (|u'|^2 + omega^2 |u|^2)(n + 1/2)`.
pub fn analytic_energy(n: usize, mode: &ModePoint, omega_sq: f64, hbar: f64) -> f64 {
    hbar * mode.mass * (mode.u_dot.norm_sqr() + omega_sq * mode.u.norm_sqr()) * (n as f64 + 0.5)
}

/// `<p^2>/(2m) + m omega^2 <x^2>/2` by quadrature.
pub fn quadrature_energy(
    psi: &WaveFunctionGrid,
    mass: f64,
    omega_sq: f64,
    hbar: f64,
) -> Result<f64, ObservableError> {
    let m = quadrature_moments(psi, hbar)?;
    Ok(m.mean_p2 / (2.0 * mass) + 0.5 * mass * omega_sq * m.mean_x2)
}
