//! Quadrature helpers shared by the propagator and the oracles.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::grid::GridSpec;

/// `S_i = sum_j g_j exp(-i gamma x_i x_j)` with `x_k` the nodes of `grid`.
///
/// Evaluated exactly (up to rounding) through Bluestein's identity
/// `ij = (i^2 + j^2 - (i-j)^2) / 2`, i.e. one FFT convolution with a chirp.
pub fn chirp_sum(grid: &GridSpec, g: &[Complex64], gamma: f64) -> Vec<Complex64> {
    let n = g.len();
    assert_eq!(n, grid.n_points);
    let h = grid.dx();
    let x0 = grid.x_min;
    let c = gamma * h * h / 2.0;
    let chirp = |k: usize| {
        let k = k as f64;
        Complex64::from_polar(1.0, c * k * k)
    };

    let len = (2 * n - 1).next_power_of_two();
    let mut a = vec![Complex64::new(0.0, 0.0); len];
    for (j, gj) in g.iter().enumerate() {
        a[j] = gj * Complex64::from_polar(1.0, -gamma * x0 * h * j as f64) * chirp(j).conj();
    }
    let mut b = vec![Complex64::new(0.0, 0.0); len];
    b[0] = chirp(0);
    for k in 1..n {
        let ck = chirp(k);
        b[k] = ck;
        b[len - k] = ck;
    }

    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(len);
    let inv = planner.plan_fft_inverse(len);
    fwd.process(&mut a);
    fwd.process(&mut b);
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= y;
    }
    inv.process(&mut a);

    let scale = 1.0 / len as f64;
    (0..n)
        .map(|i| {
            let pre = Complex64::from_polar(1.0, -gamma * (x0 * x0 + x0 * h * i as f64)) * chirp(i).conj();
            pre * a[i] * scale
        })
        .collect()
}

/// Steepness of the erf ramps in [`taper_window`]; the ramp ends deviate
/// from 0 and 1 by `erfc(TAPER_STEEPNESS / 2) / 2`, about 8e-13.
const TAPER_STEEPNESS: f64 = 10.0;

/// A window equal to one in the middle of the grid that falls smoothly to
/// zero over the outer `fraction` of the width at each end.
///
/// Oscillatory integrands with constant modulus (free kernels, products of
/// kernels) are integrated against this window instead of being truncated:
/// as long as the stationary point sits on the plateau, the ramps contribute
/// only exponentially small errors.
pub fn taper_window(grid: &GridSpec, fraction: f64) -> Vec<f64> {
    let width = fraction * (grid.x_max - grid.x_min);
    let ramp = |s: f64| {
        if s >= 1.0 {
            1.0
        } else if s <= 0.0 {
            0.0
        } else {
            0.5 * (1.0 + libm::erf(TAPER_STEEPNESS * (s - 0.5)))
        }
    };
    grid.points()
        .into_iter()
        .map(|x| ramp((x - grid.x_min) / width) * ramp((grid.x_max - x) / width))
        .collect()
}

/// Trapezoid weights `dx * (1/2, 1, ..., 1, 1/2)`.
pub fn trapezoid_weights(grid: &GridSpec) -> Vec<f64> {
    let mut w = vec![grid.dx(); grid.n_points];
    w[0] *= 0.5;
    w[grid.n_points - 1] *= 0.5;
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chirp_sum_matches_direct_sum() {
        let grid = GridSpec::new(-3.0, 5.0, 97).unwrap();
        let xs = grid.points();
        let g: Vec<Complex64> = xs.iter().map(|&x| Complex64::new((-x * x).exp(), 0.3 * x)).collect();
        for gamma in [0.7, -2.3, 40.0] {
            let fast = chirp_sum(&grid, &g, gamma);
            for (i, &xi) in xs.iter().enumerate() {
                let direct: Complex64 = xs
                    .iter()
                    .zip(&g)
                    .map(|(&xj, gj)| gj * Complex64::from_polar(1.0, -gamma * xi * xj))
                    .sum();
                assert!((fast[i] - direct).norm() < 1e-11, "gamma {gamma} i {i}");
            }
        }
    }

    #[test]
    fn window_shape() {
        let grid = GridSpec::new(-10.0, 10.0, 201).unwrap();
        let w = taper_window(&grid, 0.25);
        assert_eq!(w[100], 1.0);
        assert_eq!(w[75], 1.0);
        assert!(w[0] == 0.0 && w[200] == 0.0);
        assert!(w[12] > 0.0 && w[12] < 1.0);
        assert!(w.windows(2).take(100).all(|p| p[1] >= p[0]));
    }

    #[test]
    fn tapered_chirp_integral() {
        // int exp(i x^2 / 2) dx = sqrt(2 pi i)
        let grid = GridSpec::new(-60.0, 60.0, 12001).unwrap();
        let w = taper_window(&grid, 0.4);
        let wt = trapezoid_weights(&grid);
        let sum: Complex64 = grid
            .points()
            .iter()
            .zip(w.iter().zip(&wt))
            .map(|(&x, (&wi, &ti))| Complex64::from_polar(wi * ti, x * x / 2.0))
            .sum();
        let exact = Complex64::new(0.0, 2.0 * std::f64::consts::PI).sqrt();
        assert!((sum - exact).norm() < 1e-7, "{sum} vs {exact}");
    }
}
