use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::mode_solver::{
    evolve_mode_with, polar_decompose, unwrap_with_refinement, EvolveOptions, ModeError, ModePoint,
    ModeTrajectory, PolarMode, SqueezeParams,
};
use crate::observables::{
    analytic_energy, analytic_moments, quadrature_energy, quadrature_moments, MomentSet,
};
use crate::states::{
    classical_trajectory, dsn_wavefunction, lower, number_wavefunction, trapezoid, StateSpec,
    UniformGrid, WaveFunctionGrid,
};
use crate::verification::{
    classical_trajectory_residual, convergence_order, crosscheck_static, schrodinger_residual,
    CheckRecord, StaticCrossCheck,
};

use super::output::{num, write_json, Csv};
use super::scenario::Scenario;
use super::CliError;

const WRONSKIAN_TOL: f64 = 1e-8;
const MOMENT_TOL: f64 = 1e-6;
const FLOOR_TOL: f64 = 1e-6;
const LADDER_TOL: f64 = 1e-6;
const ENERGY_TOL: f64 = 1e-6;
const RESIDUAL_TOL: f64 = 1e-4;
const ORDER_TOL: f64 = 0.2;
const TRAJECTORY_TOL: f64 = 1e-6;
const CLOSED_FORM_TOL: f64 = 1e-10;
const NIETO_INITIAL_TOL: f64 = 1e-12;
const NIETO_EVOLVED_TOL: f64 = 1e-10;
const CONSTANCY_TOL: f64 = 1e-10;
const VERIFY_TIMES: usize = 5;

pub struct Context<'a> {
    pub scenario: &'a Scenario,
    pub out_dir: &'a Path,
}

impl Context<'_> {
    fn options(&self) -> EvolveOptions {
        EvolveOptions::with_rel_tol(self.scenario.tolerances.ode_rel_tol)
    }

    fn trajectory(&self, times: &[f64]) -> Result<ModeTrajectory, ModeError> {
        let initial = self.scenario.initial_mode()?;
        evolve_mode_with(&self.scenario.profile, &initial, times, &self.options())
    }

    /// Squeezed, phase-unwrapped modes at `times`, which must start at `t_start`.
    fn polar_modes(&self, sq: SqueezeParams, times: &[f64]) -> Result<Vec<PolarMode>, ModeError> {
        let initial = self.scenario.initial_mode()?;
        let opts = self.options();
        unwrap_with_refinement(times, sq, |grid| {
            evolve_mode_with(&self.scenario.profile, &initial, grid, &opts)
        })
    }

    fn polar_mode_at(&self, sq: SqueezeParams, t: f64) -> Result<PolarMode, CliError> {
        let tg = &self.scenario.time_grid;
        if !(t >= tg.t_start && t <= tg.t_end) {
            return Err(CliError::Validation(format!(
                "--t must lie in [{}, {}] (got {t})",
                tg.t_start, tg.t_end
            )));
        }
        let mut times: Vec<f64> = tg.times().into_iter().filter(|&s| s < t).collect();
        times.push(t);
        Ok(*self.polar_modes(sq, &times)?.last().expect("non-empty"))
    }

    fn state_grid(&self, spec: &StateSpec, mode: &ModePoint) -> Result<UniformGrid, CliError> {
        let c = classical_trajectory(spec.alpha, mode, spec.hbar);
        Ok(UniformGrid::for_state(
            spec.n,
            c,
            mode,
            spec.hbar,
            &self.scenario.grid_policy(),
        )?)
    }

    fn states(&self) -> Result<Vec<StateSpec>, CliError> {
        (0..self.scenario.states.len())
            .map(|i| self.scenario.state(i))
            .collect()
    }

    fn base_header(&self, spec: &StateSpec) -> Vec<(&'static str, String)> {
        vec![
            ("n", spec.n.to_string()),
            ("alpha_re", num(spec.alpha.re)),
            ("alpha_im", num(spec.alpha.im)),
            ("r", num(spec.squeeze.r())),
            ("phi", num(spec.squeeze.phi())),
            ("hbar", num(spec.hbar)),
            ("profile_hash", self.scenario.profile_hash()),
        ]
    }
}

#[derive(Serialize)]
struct ComplexOut {
    re: f64,
    im: f64,
}

impl From<Complex64> for ComplexOut {
    fn from(z: Complex64) -> Self {
        ComplexOut { re: z.re, im: z.im }
    }
}

#[derive(Serialize)]
struct TrajectoryRow {
    t: f64,
    u: ComplexOut,
    u_dot: ComplexOut,
    wronskian_dev: f64,
    rho: f64,
    theta: f64,
}

pub fn evolve(ctx: &Context) -> Result<(), CliError> {
    let scn = ctx.scenario;
    let traj = ctx.trajectory(&scn.time_grid.times())?;
    let polar =
        polar_decompose(&traj).or_else(|_| ctx.polar_modes(SqueezeParams::NONE, &traj.times()))?;
    if scn.outputs.csv {
        let header = [
            ("profile_hash", scn.profile_hash()),
            ("hbar", num(scn.hbar)),
            ("samples", traj.len().to_string()),
        ];
        let mut csv = Csv::new(
            &header,
            &[
                "t",
                "re_u",
                "im_u",
                "re_u_dot",
                "im_u_dot",
                "wronskian_dev",
                "rho",
                "theta",
            ],
        );
        for p in &polar {
            let m = p.point;
            csv.row(&[
                m.t,
                m.u.re,
                m.u.im,
                m.u_dot.re,
                m.u_dot.im,
                m.wronskian_deviation(),
                p.rho,
                p.theta,
            ]);
        }
        report(csv.write(ctx.out_dir, "trajectory.csv")?);
    }
    if scn.outputs.json {
        let rows: Vec<TrajectoryRow> = polar
            .iter()
            .map(|p| TrajectoryRow {
                t: p.point.t,
                u: p.point.u.into(),
                u_dot: p.point.u_dot.into(),
                wronskian_dev: p.point.wronskian_deviation(),
                rho: p.rho,
                theta: p.theta,
            })
            .collect();
        let doc = json!({
            "profile_hash": scn.profile_hash(),
            "max_wronskian_deviation": traj.max_wronskian_deviation(),
            "samples": rows,
        });
        report(write_json(ctx.out_dir, "trajectory.json", &doc)?);
    }
    Ok(())
}

pub fn wavefunction(
    ctx: &Context,
    state_index: usize,
    n_override: Option<usize>,
    t: Option<f64>,
) -> Result<(), CliError> {
    let scn = ctx.scenario;
    let mut spec = scn.state(state_index)?;
    if let Some(n) = n_override {
        spec = StateSpec::new(n, spec.alpha, spec.squeeze, spec.hbar)
            .map_err(|e| CliError::Validation(format!("--n: {e}")))?;
    }
    let t = t.unwrap_or(scn.time_grid.t_start);
    let mode = ctx.polar_mode_at(spec.squeeze, t)?;
    let grid = ctx.state_grid(&spec, &mode.point)?;
    let psi = dsn_wavefunction(&spec, &mode, &grid)?;
    let stem = format!("wavefunction_state{state_index}_n{}", spec.n);
    if scn.outputs.csv {
        let mut header = vec![("t", num(t))];
        header.extend(ctx.base_header(&spec));
        header.push(("points", grid.len.to_string()));
        let mut csv = Csv::new(&header, &["x", "re_psi", "im_psi", "abs_psi_sq"]);
        for (j, z) in psi.psi.iter().enumerate() {
            csv.row(&[grid.x(j), z.re, z.im, z.norm_sqr()]);
        }
        report(csv.write(ctx.out_dir, &format!("{stem}.csv"))?);
    }
    if scn.outputs.json {
        let doc = json!({
            "t": t,
            "n": spec.n,
            "alpha": ComplexOut::from(spec.alpha),
            "r": spec.squeeze.r(),
            "phi": spec.squeeze.phi(),
            "hbar": spec.hbar,
            "profile_hash": scn.profile_hash(),
            "points": grid.len,
            "x_start": grid.start,
            "dx": grid.step,
            "norm": psi.norm_sqr(),
            "boundary_ratio": psi.boundary_ratio(),
        });
        report(write_json(ctx.out_dir, &format!("{stem}.json"), &doc)?);
    }
    Ok(())
}

#[derive(Serialize)]
struct MomentRecord {
    t: f64,
    n: usize,
    alpha: ComplexOut,
    r: f64,
    phi: f64,
    analytic: MomentSet,
    quadrature: MomentSet,
    max_relative_difference: f64,
    /// Only defined for undisplaced states.
    analytic_energy: Option<f64>,
    quadrature_energy: f64,
}

fn moment_record(
    ctx: &Context,
    spec: &StateSpec,
    mode: &PolarMode,
) -> Result<MomentRecord, CliError> {
    let grid = ctx.state_grid(spec, &mode.point)?;
    let psi = dsn_wavefunction(spec, mode, &grid)?;
    let quadrature = quadrature_moments(&psi, spec.hbar)?;
    let analytic = analytic_moments(spec, &mode.point);
    let (mass, omega_sq) = ctx.scenario.profile.evaluate(mode.point.t)?;
    Ok(MomentRecord {
        t: mode.point.t,
        n: spec.n,
        alpha: spec.alpha.into(),
        r: spec.squeeze.r(),
        phi: spec.squeeze.phi(),
        max_relative_difference: quadrature.max_relative_difference(&analytic),
        analytic,
        quadrature,
        analytic_energy: (spec.alpha == Complex64::new(0.0, 0.0))
            .then(|| analytic_energy(spec.n, &mode.point, omega_sq, spec.hbar)),
        quadrature_energy: quadrature_energy(&psi, mass, omega_sq, spec.hbar)?,
    })
}

pub fn moments(ctx: &Context) -> Result<(), CliError> {
    let scn = ctx.scenario;
    let times = scn.time_grid.times();
    let per_state: Vec<Vec<MomentRecord>> = ctx
        .states()?
        .par_iter()
        .map(|spec| {
            let modes = ctx.polar_modes(spec.squeeze, &times)?;
            modes
                .par_iter()
                .map(|m| moment_record(ctx, spec, m))
                .collect()
        })
        .collect::<Result<_, CliError>>()?;
    let records: Vec<MomentRecord> = per_state.into_iter().flatten().collect();
    if scn.outputs.csv {
        let mut csv = Csv::new(
            &[
                ("profile_hash", scn.profile_hash()),
                ("hbar", num(scn.hbar)),
            ],
            &[
                "t",
                "n",
                "alpha_re",
                "alpha_im",
                "r",
                "phi",
                "mean_x",
                "mean_p",
                "mean_x2",
                "mean_p2",
                "q_mean_x",
                "q_mean_p",
                "q_mean_x2",
                "q_mean_p2",
                "uncertainty_product",
                "max_relative_difference",
            ],
        );
        for r in &records {
            csv.row(&[
                r.t,
                r.n as f64,
                r.alpha.re,
                r.alpha.im,
                r.r,
                r.phi,
                r.analytic.mean_x,
                r.analytic.mean_p,
                r.analytic.mean_x2,
                r.analytic.mean_p2,
                r.quadrature.mean_x,
                r.quadrature.mean_p,
                r.quadrature.mean_x2,
                r.quadrature.mean_p2,
                r.quadrature.uncertainty_product,
                r.max_relative_difference,
            ]);
        }
        report(csv.write(ctx.out_dir, "moments.csv")?);
    }
    if scn.outputs.json {
        let doc =
            json!({ "profile_hash": scn.profile_hash(), "hbar": scn.hbar, "records": records });
        report(write_json(ctx.out_dir, "moments.json", &doc)?);
    }
    Ok(())
}

fn pick(times: &[f64], count: usize) -> Vec<f64> {
    if times.len() <= count {
        return times.to_vec();
    }
    let mut idx: Vec<usize> = (0..count)
        .map(|j| (j as f64 * (times.len() - 1) as f64 / (count - 1) as f64).round() as usize)
        .collect();
    idx.dedup();
    idx.into_iter().map(|i| times[i]).collect()
}

fn state_inputs(spec: &StateSpec, t: Option<f64>) -> serde_json::Value {
    let mut v = json!({
        "n": spec.n,
        "alpha": ComplexOut::from(spec.alpha),
        "r": spec.squeeze.r(),
        "phi": spec.squeeze.phi(),
    });
    if let Some(t) = t {
        v["t"] = json!(t);
    }
    v
}

fn l2_distance(a: &WaveFunctionGrid, b: &[Complex64]) -> f64 {
    trapezoid(
        a.psi.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()),
        a.grid.step,
    )
    .sqrt()
}

/// Checks at one time for one state.
fn point_checks(ctx: &Context, spec: &StateSpec, mode: &PolarMode) -> Vec<CheckRecord> {
    let t = mode.point.t;
    let inputs = state_inputs(spec, Some(t));
    let mut out = Vec::new();
    let quad_tol = ctx.scenario.tolerances.quadrature_tol;
    let built = ctx
        .state_grid(spec, &mode.point)
        .and_then(|g| Ok((g, dsn_wavefunction(spec, mode, &g)?)));
    let (grid, psi) = match built {
        Ok(v) => v,
        Err(e) => {
            out.push(CheckRecord::failed("state_construction", inputs, 0.0, &e));
            return out;
        }
    };
    out.push(CheckRecord::new(
        "normalization",
        inputs.clone(),
        (psi.norm_sqr() - 1.0).abs(),
        quad_tol,
    ));
    match quadrature_moments(&psi, spec.hbar) {
        Ok(q) => {
            let a = analytic_moments(spec, &mode.point);
            out.push(CheckRecord::new(
                "moment_agreement",
                inputs.clone(),
                q.max_relative_difference(&a),
                MOMENT_TOL,
            ));
            let floor = spec.hbar * (spec.n as f64 + 0.5);
            out.push(CheckRecord::new(
                "uncertainty_floor",
                inputs.clone(),
                (floor - q.uncertainty_product).max(0.0),
                FLOOR_TOL,
            ));
        }
        Err(e) => out.push(CheckRecord::failed(
            "moment_agreement",
            inputs.clone(),
            MOMENT_TOL,
            &e,
        )),
    }
    let ladder = (|| -> Result<f64, CliError> {
        let upper = number_wavefunction(spec.n, mode, spec.hbar, &grid)?;
        let lowered = lower(&upper, &mode.point, spec.hbar)?;
        let target: Vec<Complex64> = if spec.n == 0 {
            vec![Complex64::new(0.0, 0.0); grid.len]
        } else {
            let scale = (spec.n as f64).sqrt();
            number_wavefunction(spec.n - 1, mode, spec.hbar, &grid)?
                .psi
                .iter()
                .map(|z| z * scale)
                .collect()
        };
        Ok(l2_distance(&lowered, &target))
    })();
    out.push(match ladder {
        Ok(e) => CheckRecord::new("ladder", inputs.clone(), e, LADDER_TOL),
        Err(e) => CheckRecord::failed("ladder", inputs.clone(), LADDER_TOL, &e),
    });
    if spec.alpha == Complex64::new(0.0, 0.0) {
        let energy = (|| -> Result<f64, CliError> {
            let (mass, omega_sq) = ctx.scenario.profile.evaluate(t)?;
            let a = analytic_energy(spec.n, &mode.point, omega_sq, spec.hbar);
            let q = quadrature_energy(&psi, mass, omega_sq, spec.hbar)?;
            Ok((a - q).abs() / a.abs().max(1.0))
        })();
        out.push(match energy {
            Ok(e) => CheckRecord::new("energy_consistency", inputs.clone(), e, ENERGY_TOL),
            Err(e) => CheckRecord::failed("energy_consistency", inputs.clone(), ENERGY_TOL, &e),
        });
    }
    out
}

fn is_unit_static(scn: &Scenario) -> bool {
    matches!(scn.profile, crate::profiles::OscillatorProfile::Static { m0, omega0 } if m0 == 1.0 && omega0 == 1.0)
        && scn.hbar == 1.0
}

fn state_checks(ctx: &Context, spec: &StateSpec, traj: &ModeTrajectory) -> Vec<CheckRecord> {
    let scn = ctx.scenario;
    let mut out = Vec::new();
    let times = scn.time_grid.times();
    match ctx.polar_modes(spec.squeeze, &times) {
        Ok(modes) => {
            let chosen = pick(&times, VERIFY_TIMES);
            let per_time: Vec<Vec<CheckRecord>> = modes
                .par_iter()
                .filter(|m| chosen.contains(&m.point.t))
                .map(|m| point_checks(ctx, spec, m))
                .collect();
            out.extend(per_time.into_iter().flatten());
        }
        Err(e) => out.push(CheckRecord::failed(
            "mode_unwrap",
            state_inputs(spec, None),
            0.0,
            &e,
        )),
    }

    let tg = &scn.time_grid;
    let t_mid = 0.5 * (tg.t_start + tg.t_end);
    let dt = scn.tolerances.residual_dt;
    let mut inputs = state_inputs(spec, Some(t_mid));
    inputs["dt"] = json!(dt);
    out.push(match schrodinger_residual(spec, traj, t_mid, dt, None) {
        Ok(r) => CheckRecord::new("schrodinger_residual", inputs, r, RESIDUAL_TOL),
        Err(e) => CheckRecord::failed("schrodinger_residual", inputs, RESIDUAL_TOL, &e),
    });
    let mut inputs = state_inputs(spec, Some(t_mid));
    inputs["dt"] = json!([1e-3, 5e-4]);
    let order = schrodinger_residual(spec, traj, t_mid, 1e-3, None).and_then(|a| {
        Ok(convergence_order(
            a,
            schrodinger_residual(spec, traj, t_mid, 5e-4, None)?,
        ))
    });
    out.push(match order {
        Ok(p) => CheckRecord::new("residual_order", inputs, (p - 2.0).abs(), ORDER_TOL),
        Err(e) => CheckRecord::failed("residual_order", inputs, ORDER_TOL, &e),
    });

    let inputs = state_inputs(spec, None);
    let h = (0.025f64).min((tg.t_end - tg.t_start) / 20.0);
    let traj_check = scn.initial_mode().map_err(CliError::from).and_then(|m0| {
        Ok(classical_trajectory_residual(
            &scn.profile,
            m0,
            spec.alpha,
            spec.squeeze,
            spec.hbar,
            tg.t_end,
            h,
        )?)
    });
    match traj_check {
        Ok(r) => {
            out.push(CheckRecord::new(
                "trajectory_equation_of_motion",
                inputs.clone(),
                r.equation_of_motion,
                TRAJECTORY_TOL,
            ));
            out.push(CheckRecord::new(
                "trajectory_momentum",
                inputs,
                r.momentum,
                TRAJECTORY_TOL,
            ));
        }
        Err(e) => out.push(CheckRecord::failed(
            "trajectory_equation_of_motion",
            inputs,
            TRAJECTORY_TOL,
            &e,
        )),
    }

    if is_unit_static(scn) {
        for t in pick(&times, VERIFY_TIMES) {
            out.extend(static_records(spec, t));
        }
    }
    out
}

fn static_records(spec: &StateSpec, t: f64) -> Vec<CheckRecord> {
    let inputs = state_inputs(spec, Some(t));
    match crosscheck_static(spec.squeeze, spec.n, spec.alpha, t, None) {
        Ok(c) => static_check_records(&c, inputs),
        Err(e) => vec![CheckRecord::failed(
            "static_closed_form",
            inputs,
            CLOSED_FORM_TOL,
            &e,
        )],
    }
}

fn static_check_records(c: &StaticCrossCheck, inputs: serde_json::Value) -> Vec<CheckRecord> {
    let mut closed = CheckRecord::new(
        "static_closed_form",
        inputs.clone(),
        c.max_difference,
        CLOSED_FORM_TOL,
    );
    closed.passed &= c.branch_consistent;
    let worst = |v: &[f64; 3]| v.iter().cloned().fold(0.0, f64::max);
    vec![
        closed,
        CheckRecord::new(
            "nieto_initial",
            inputs.clone(),
            worst(&c.nieto_initial),
            NIETO_INITIAL_TOL,
        ),
        CheckRecord::new(
            "nieto_evolved",
            inputs,
            worst(&c.nieto_evolved),
            NIETO_EVOLVED_TOL,
        ),
    ]
}

#[derive(Serialize)]
struct VerifyReport<'a> {
    profile_hash: String,
    passed: bool,
    total: usize,
    failed: usize,
    checks: &'a [CheckRecord],
}

/// Runs the verification suite; returns the number of failed checks.
pub fn verify(ctx: &Context) -> Result<usize, CliError> {
    let scn = ctx.scenario;
    let traj = ctx.trajectory(&scn.time_grid.times())?;
    let mut checks = vec![CheckRecord::new(
        "wronskian",
        json!({ "samples": traj.len() }),
        traj.max_wronskian_deviation(),
        WRONSKIAN_TOL,
    )];
    let states = ctx.states()?;
    let per_state: Vec<Vec<CheckRecord>> = states
        .par_iter()
        .map(|s| state_checks(ctx, s, &traj))
        .collect();
    checks.extend(per_state.into_iter().flatten());

    if scn.profile.is_static() {
        // number-state energies of the unsqueezed mode are conserved
        let (_, omega_sq) = scn.profile.evaluate(scn.time_grid.t_start)?;
        let initial = scn.initial_mode()?;
        let tight = evolve_mode_with(
            &scn.profile,
            &initial,
            &scn.time_grid.times(),
            &EvolveOptions::with_rel_tol(1e-12),
        )?;
        for spec in states.iter().filter(|s| s.squeeze.r() == 0.0) {
            let energies: Vec<f64> = tight
                .samples()
                .iter()
                .map(|p| analytic_energy(spec.n, p, omega_sq, spec.hbar))
                .collect();
            let e0 = energies[0];
            let drift = energies.iter().map(|e| (e - e0).abs()).fold(0.0, f64::max) / e0;
            checks.push(CheckRecord::new(
                "energy_constancy",
                state_inputs(spec, None),
                drift,
                CONSTANCY_TOL,
            ));
        }
    }

    let failed = checks.iter().filter(|c| !c.passed).count();
    for c in checks.iter().filter(|c| !c.passed) {
        eprintln!(
            "FAIL {} residual={:e} tolerance={:e} inputs={}",
            c.name, c.residual, c.tolerance, c.inputs
        );
    }
    let doc = VerifyReport {
        profile_hash: scn.profile_hash(),
        passed: failed == 0,
        total: checks.len(),
        failed,
        checks: &checks,
    };
    report(write_json(ctx.out_dir, "verify_report.json", &doc)?);
    println!(
        "{} of {} checks passed",
        checks.len() - failed,
        checks.len()
    );
    Ok(failed)
}

#[derive(Serialize)]
struct StaticRecord {
    t: f64,
    n: usize,
    alpha: ComplexOut,
    r: f64,
    phi: f64,
    max_difference: f64,
    branch_consistent: bool,
    nieto_initial: [f64; 3],
    nieto_evolved: [f64; 3],
    passed: bool,
}

/// Pipeline against closed form at every time sample; returns the failure count.
pub fn static_compare(ctx: &Context) -> Result<usize, CliError> {
    let scn = ctx.scenario;
    if !is_unit_static(scn) {
        return Err(CliError::Validation(
            "static-compare needs a static profile with m0 = omega0 = 1 and hbar = 1".into(),
        ));
    }
    if scn.time_grid.t_start < 0.0 {
        return Err(CliError::Validation(
            "time_grid.t_start must be non-negative for static-compare".into(),
        ));
    }
    let times = scn.time_grid.times();
    let states = ctx.states()?;
    let jobs: Vec<(StateSpec, f64)> = states
        .iter()
        .flat_map(|s| times.iter().map(move |&t| (*s, t)))
        .collect();
    let records: Vec<StaticRecord> = jobs
        .par_iter()
        .map(|(spec, t)| {
            let c = crosscheck_static(spec.squeeze, spec.n, spec.alpha, *t, None)?;
            let passed = c.max_difference <= CLOSED_FORM_TOL
                && c.branch_consistent
                && c.nieto_initial.iter().all(|&e| e <= NIETO_INITIAL_TOL)
                && c.nieto_evolved.iter().all(|&e| e <= NIETO_EVOLVED_TOL);
            Ok(StaticRecord {
                t: *t,
                n: spec.n,
                alpha: spec.alpha.into(),
                r: spec.squeeze.r(),
                phi: spec.squeeze.phi(),
                max_difference: c.max_difference,
                branch_consistent: c.branch_consistent,
                nieto_initial: c.nieto_initial,
                nieto_evolved: c.nieto_evolved,
                passed,
            })
        })
        .collect::<Result<_, CliError>>()?;
    let failed = records.iter().filter(|r| !r.passed).count();
    if scn.outputs.csv {
        let mut csv = Csv::new(
            &[("profile_hash", scn.profile_hash())],
            &[
                "t",
                "n",
                "alpha_re",
                "alpha_im",
                "r",
                "phi",
                "max_difference",
                "branch_consistent",
                "nieto_initial_max",
                "nieto_evolved_max",
            ],
        );
        for r in &records {
            csv.row(&[
                r.t,
                r.n as f64,
                r.alpha.re,
                r.alpha.im,
                r.r,
                r.phi,
                r.max_difference,
                if r.branch_consistent { 1.0 } else { 0.0 },
                r.nieto_initial.iter().cloned().fold(0.0, f64::max),
                r.nieto_evolved.iter().cloned().fold(0.0, f64::max),
            ]);
        }
        report(csv.write(ctx.out_dir, "static_compare.csv")?);
    }
    if scn.outputs.json {
        let doc = json!({
            "profile_hash": scn.profile_hash(),
            "passed": failed == 0,
            "records": records,
        });
        report(write_json(ctx.out_dir, "static_compare.json", &doc)?);
    }
    println!(
        "{} of {} comparisons passed",
        records.len() - failed,
        records.len()
    );
    Ok(failed)
}

fn report(path: std::path::PathBuf) {
    println!("wrote {}", path.display());
}
