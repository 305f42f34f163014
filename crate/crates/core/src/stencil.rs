//! Eighth-order central finite differences on uniform grids. Samples outside
//! the grid are taken as zero, which is exact to the grid-coverage tolerance
//! for the decaying wave functions used here.

use num_complex::Complex64;

const FIRST: [f64; 4] = [4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0];
const SECOND_CENTER: f64 = -205.0 / 72.0;
const SECOND: [f64; 4] = [8.0 / 5.0, -1.0 / 5.0, 8.0 / 315.0, -1.0 / 560.0];

fn at(values: &[Complex64], j: isize) -> Complex64 {
    if j < 0 || j as usize >= values.len() {
        Complex64::new(0.0, 0.0)
    } else {
        values[j as usize]
    }
}

pub fn first_derivative(values: &[Complex64], dx: f64) -> Vec<Complex64> {
    (0..values.len() as isize)
        .map(|j| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (k, c) in FIRST.iter().enumerate() {
                let o = k as isize + 1;
                acc += (at(values, j + o) - at(values, j - o)) * *c;
            }
            acc / dx
        })
        .collect()
}

pub fn second_derivative(values: &[Complex64], dx: f64) -> Vec<Complex64> {
    let h2 = dx * dx;
    (0..values.len() as isize)
        .map(|j| {
            let mut acc = at(values, j) * SECOND_CENTER;
            for (k, c) in SECOND.iter().enumerate() {
                let o = k as isize + 1;
                acc += (at(values, j + o) + at(values, j - o)) * *c;
            }
            acc / h2
        })
        .collect()
}

/// Uniform-grid sample derivatives of real data, used for trajectory checks.
pub fn first_derivative_real(values: &[f64], dx: f64, j: usize) -> Option<f64> {
    if j < 4 || j + 4 >= values.len() {
        return None;
    }
    let d: f64 = FIRST
        .iter()
        .enumerate()
        .map(|(k, c)| c * (values[j + k + 1] - values[j - k - 1]))
        .sum();
    Some(d / dx)
}

pub fn second_derivative_real(values: &[f64], dx: f64, j: usize) -> Option<f64> {
    if j < 4 || j + 4 >= values.len() {
        return None;
    }
    let d: f64 = SECOND
        .iter()
        .enumerate()
        .map(|(k, c)| c * (values[j + k + 1] + values[j - k - 1]))
        .sum::<f64>()
        + SECOND_CENTER * values[j];
    Some(d / (dx * dx))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn differentiates_gaussian_wave_packet() {
        let dx = 0.02;
        let xs: Vec<f64> = (0..1001).map(|j| -10.0 + j as f64 * dx).collect();
        let k = 3.0;
        let f = |x: f64| Complex64::from_polar((-x * x / 2.0).exp(), k * x);
        let vals: Vec<Complex64> = xs.iter().map(|&x| f(x)).collect();
        let d1 = first_derivative(&vals, dx);
        let d2 = second_derivative(&vals, dx);
        for (j, &x) in xs.iter().enumerate() {
            let g = Complex64::new(-x, k);
            let e1 = f(x) * g;
            let e2 = f(x) * (g * g - 1.0);
            assert!((d1[j] - e1).norm() < 1e-9, "x={x}");
            assert!((d2[j] - e2).norm() < 1e-8, "x={x}");
        }
    }

    #[test]
    fn real_stencils_are_exact_on_polynomials() {
        let dx = 0.1;
        let v: Vec<f64> = (0..20).map(|j| (j as f64 * dx).powi(5)).collect();
        let x = 10.0 * dx;
        assert!((first_derivative_real(&v, dx, 10).unwrap() - 5.0 * x.powi(4)).abs() < 1e-10);
        assert!((second_derivative_real(&v, dx, 10).unwrap() - 20.0 * x.powi(3)).abs() < 1e-9);
        assert!(first_derivative_real(&v, dx, 2).is_none());
    }
}
