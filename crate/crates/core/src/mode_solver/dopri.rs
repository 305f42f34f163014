//! Dormand-Prince 5(4) with the 4th-order continuous extension, specialised to
//! the two-component complex state `(u, du/dt)`.

use num_complex::Complex64;

pub(crate) type State = [Complex64; 2];

#[derive(Debug, Clone, Copy)]
pub(crate) struct Dopri5Options {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

#[derive(Debug)]
pub(crate) enum Dopri5Error<E> {
    Rhs { last_t: f64, source: E },
    StepUnderflow { last_t: f64 },
    TooManySteps { last_t: f64 },
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

fn axpy(y: &State, terms: &[(f64, &State)], h: f64) -> State {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..2 {
            out[i] += k[i] * (h * c);
        }
    }
    out
}

fn error_norm(err: &State, y0: &State, y1: &State, opts: &Dopri5Options) -> f64 {
    let mut acc = 0.0;
    for i in 0..2 {
        let sc = opts.atol + opts.rtol * y0[i].norm().max(y1[i].norm());
        acc += (err[i].norm() / sc).powi(2);
    }
    (acc / 2.0).sqrt()
}

fn state_norm(y: &State, sc: &State, opts: &Dopri5Options) -> f64 {
    let mut acc = 0.0;
    for i in 0..2 {
        let s = opts.atol + opts.rtol * sc[i].norm();
        acc += (y[i].norm() / s).powi(2);
    }
    (acc / 2.0).sqrt()
}

/// Integrates from `(t0, y0)` and returns the dense-output state at every
/// time in `t_out` (non-decreasing, all `>= t0`).
pub(crate) fn integrate_dense<F, E>(
    mut f: F,
    t0: f64,
    y0: State,
    t_out: &[f64],
    opts: &Dopri5Options,
) -> Result<Vec<State>, Dopri5Error<E>>
where
    F: FnMut(f64, &State) -> Result<State, E>,
{
    let mut out = Vec::with_capacity(t_out.len());
    let mut next = 0;
    while next < t_out.len() && t_out[next] <= t0 {
        out.push(y0);
        next += 1;
    }
    if next == t_out.len() {
        return Ok(out);
    }
    let t_end = *t_out.last().unwrap();

    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y).map_err(|source| Dopri5Error::Rhs { last_t: t, source })?;
    let mut h = initial_step(&mut f, t, &y, &k1, t_end - t0, opts)
        .map_err(|source| Dopri5Error::Rhs { last_t: t, source })?;
    let mut steps = 0usize;
    let mut last_accepted = true;

    while next < t_out.len() {
        if steps >= opts.max_steps {
            return Err(Dopri5Error::TooManySteps { last_t: t });
        }
        steps += 1;
        if h <= 16.0 * f64::EPSILON * t.abs().max(1.0) {
            return Err(Dopri5Error::StepUnderflow { last_t: t });
        }
        let last_step = t + h >= t_end;
        if last_step {
            h = t_end - t;
        }

        let rhs = |e| Dopri5Error::Rhs {
            last_t: t,
            source: e,
        };
        let k2 = f(t + C2 * h, &axpy(&y, &[(A21, &k1)], h)).map_err(rhs)?;
        let k3 = f(t + C3 * h, &axpy(&y, &[(A31, &k1), (A32, &k2)], h)).map_err(rhs)?;
        let k4 = f(
            t + C4 * h,
            &axpy(&y, &[(A41, &k1), (A42, &k2), (A43, &k3)], h),
        )
        .map_err(rhs)?;
        let k5 = f(
            t + C5 * h,
            &axpy(&y, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)], h),
        )
        .map_err(rhs)?;
        let k6 = f(
            t + h,
            &axpy(
                &y,
                &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
                h,
            ),
        )
        .map_err(rhs)?;
        let y1 = axpy(
            &y,
            &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
            h,
        );
        let k7 = f(t + h, &y1).map_err(rhs)?;

        let err_vec = axpy(
            &[Complex64::new(0.0, 0.0); 2],
            &[
                (E1, &k1),
                (E3, &k3),
                (E4, &k4),
                (E5, &k5),
                (E6, &k6),
                (E7, &k7),
            ],
            h,
        );
        let err = error_norm(&err_vec, &y, &y1, opts);

        if err <= 1.0 {
            let t1 = if last_step { t_end } else { t + h };
            // continuous extension coefficients
            let mut r = [[Complex64::new(0.0, 0.0); 2]; 5];
            for i in 0..2 {
                let dy = y1[i] - y[i];
                let bspl = k1[i] * h - dy;
                r[0][i] = y[i];
                r[1][i] = dy;
                r[2][i] = bspl;
                r[3][i] = dy - k7[i] * h - bspl;
                r[4][i] =
                    (k1[i] * D1 + k3[i] * D3 + k4[i] * D4 + k5[i] * D5 + k6[i] * D6 + k7[i] * D7)
                        * h;
            }
            while next < t_out.len() && t_out[next] <= t1 {
                let tq = t_out[next];
                if tq == t1 {
                    out.push(y1);
                } else {
                    let th = (tq - t) / h;
                    let th1 = 1.0 - th;
                    let mut yq = [Complex64::new(0.0, 0.0); 2];
                    for i in 0..2 {
                        yq[i] = r[0][i]
                            + (r[1][i] + (r[2][i] + (r[3][i] + r[4][i] * th1) * th) * th1) * th;
                    }
                    out.push(yq);
                }
                next += 1;
            }
            t = t1;
            y = y1;
            k1 = k7;
            let fac = (0.9 * err.max(1e-10).powf(-0.2)).clamp(0.2, 10.0);
            h *= if last_accepted { fac } else { fac.min(1.0) };
            last_accepted = true;
        } else {
            h *= (0.9 * err.powf(-0.2)).max(0.2);
            last_accepted = false;
        }
    }
    Ok(out)
}

fn initial_step<F, E>(
    f: &mut F,
    t: f64,
    y: &State,
    f0: &State,
    span: f64,
    opts: &Dopri5Options,
) -> Result<f64, E>
where
    F: FnMut(f64, &State) -> Result<State, E>,
{
    let d0 = state_norm(y, y, opts);
    let d1 = state_norm(f0, y, opts);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    let h0 = h0.min(span);
    let y1 = axpy(y, &[(1.0, f0)], h0);
    let f1 = f(t + h0, &y1)?;
    let diff = [f1[0] - f0[0], f1[1] - f0[1]];
    let d2 = state_norm(&diff, y, opts) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    Ok((100.0 * h0).min(h1).min(span))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts(rtol: f64) -> Dopri5Options {
        Dopri5Options {
            rtol,
            atol: rtol * 1e-2,
            max_steps: 1_000_000,
        }
    }

    #[test]
    fn rotates_a_phasor() {
        // y' = -i y  => y = exp(-i t)
        let f = |_t: f64, y: &State| -> Result<State, ()> {
            Ok([
                y[0] * Complex64::new(0.0, -1.0),
                y[1] * Complex64::new(0.0, -2.0),
            ])
        };
        let ts: Vec<f64> = (0..=50).map(|k| k as f64 * 0.37).collect();
        let one = Complex64::new(1.0, 0.0);
        let ys = integrate_dense(f, 0.0, [one, one], &ts, &opts(1e-11)).unwrap();
        for (t, y) in ts.iter().zip(&ys) {
            assert!((y[0] - Complex64::from_polar(1.0, -t)).norm() < 1e-9);
            assert!((y[1] - Complex64::from_polar(1.0, -2.0 * t)).norm() < 1e-9);
        }
    }

    #[test]
    fn dense_output_is_fourth_order_accurate_between_steps() {
        let f = |t: f64, _y: &State| -> Result<State, ()> {
            Ok([Complex64::new(t.cos(), 0.0), Complex64::new(0.0, 0.0)])
        };
        let ts: Vec<f64> = (0..=1000).map(|k| k as f64 * 0.01).collect();
        let z = Complex64::new(0.0, 0.0);
        let ys = integrate_dense(f, 0.0, [z, z], &ts, &opts(1e-10)).unwrap();
        let worst = ts
            .iter()
            .zip(&ys)
            .map(|(t, y)| (y[0].re - t.sin()).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-9, "{worst}");
    }

    #[test]
    fn reports_rhs_failure_time() {
        let f = |t: f64, y: &State| -> Result<State, f64> {
            if t > 2.0 {
                Err(t)
            } else {
                Ok(*y)
            }
        };
        let one = Complex64::new(1.0, 0.0);
        let err = integrate_dense(f, 0.0, [one, one], &[0.0, 5.0], &opts(1e-8)).unwrap_err();
        match err {
            Dopri5Error::Rhs { last_t, source } => {
                assert!(last_t <= 2.0 && source > 2.0);
            }
            _ => panic!("unexpected error"),
        }
    }
}
