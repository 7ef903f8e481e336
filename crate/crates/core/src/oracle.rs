//! Independent numerical references.
//!
//! Nothing here uses the classical solutions except where a reference is
//! explicitly built from kernels (the sliced path integral): the grid
//! evolver and the residual work from the Hamiltonian alone.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::classical::Oscillator;
use crate::error::{GhoError, Result};
use crate::grid::{GridSpec, WavePacket, EDGE_TOLERANCE};
use crate::params::Scenario;
use crate::propagator::{kernel, ComplexAmplitude, KernelQuery, KernelSlice, COMPOSITION_TAPER};
use crate::quadrature::{taper_window, trapezoid_weights};

/// Fourth-order first- and second-derivative stencils at offsets -2..=2.
const D1: [f64; 5] = [1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0, -1.0 / 12.0];
const D2: [f64; 5] = [-1.0 / 12.0, 16.0 / 12.0, -30.0 / 12.0, 16.0 / 12.0, -1.0 / 12.0];

/// Settings of the Crank-Nicolson evolver (the scheme itself is fixed).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolverConfig {
    pub dt: f64,
    pub grid: GridSpec,
}

impl EvolverConfig {
    pub fn new(dt: f64, grid: GridSpec) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(GhoError::InvalidArgument(format!("time step must be positive, got {dt}")));
        }
        grid.validate()?;
        Ok(EvolverConfig { dt, grid })
    }
}

/// A pentadiagonal matrix, row `j` holding columns `j-2..=j+2`.
#[derive(Debug, Clone)]
struct Band {
    rows: Vec<[Complex64; 5]>,
}

impl Band {
    fn mul(&self, v: &[Complex64]) -> Vec<Complex64> {
        let n = v.len();
        (0..n)
            .map(|j| {
                let mut acc = Complex64::new(0.0, 0.0);
                for (o, c) in self.rows[j].iter().enumerate() {
                    let k = j + o;
                    if k >= 2 && k - 2 < n {
                        acc += c * v[k - 2];
                    }
                }
                acc
            })
            .collect()
    }

    /// Gaussian elimination without pivoting; consumes the matrix.
    fn solve(mut self, mut rhs: Vec<Complex64>) -> Result<Vec<Complex64>> {
        let n = rhs.len();
        for i in 0..n {
            let pivot = self.rows[i][2];
            if !(pivot.norm() > 1e-300) || !pivot.is_finite() {
                return Err(GhoError::LinearSolveFailure(format!("zero pivot in row {i}")));
            }
            for r in i + 1..(i + 3).min(n) {
                let factor = self.rows[r][i + 2 - r] / pivot;
                if factor == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for c in i + 1..(i + 3).min(n) {
                    let upper = self.rows[i][c + 2 - i];
                    self.rows[r][c + 2 - r] -= factor * upper;
                }
                let ri = rhs[i];
                rhs[r] -= factor * ri;
            }
        }
        for i in (0..n).rev() {
            let mut acc = rhs[i];
            for (c, &x) in rhs.iter().enumerate().take((i + 3).min(n)).skip(i + 1) {
                acc -= self.rows[i][c + 2 - i] * x;
            }
            rhs[i] = acc / self.rows[i][2];
        }
        if rhs.iter().any(|z| !z.is_finite()) {
            return Err(GhoError::LinearSolveFailure("non-finite solution".into()));
        }
        Ok(rhs)
    }
}

/// The Hamiltonian
/// `p^2/2M - a (x p + p x) + M c x^2 / 2 - (b/M) p + d x + b^2/2M - f`
/// on `grid` at time `t`, with fourth-order stencils cut off at the edges
/// (so the matrix stays Hermitian).
fn hamiltonian(s: &Scenario, t: f64, grid: &GridSpec) -> Band {
    let hbar = s.hbar;
    let m = s.mass.value(t);
    let a = s.a.value(t);
    let b = s.b.value(t);
    let f = s.f.value(t);
    let hc = s.hamiltonian_coefficients(t);
    let dx = grid.dx();
    let xs = grid.points();
    let i = Complex64::i();
    let rows = (0..xs.len())
        .into_par_iter()
        .map(|j| {
            let x = xs[j];
            let mut row = [Complex64::new(0.0, 0.0); 5];
            for (o, slot) in row.iter_mut().enumerate() {
                let k = j as i64 + o as i64 - 2;
                if k < 0 || k >= xs.len() as i64 {
                    continue;
                }
                let xk = xs[k as usize];
                let kinetic = -hbar * hbar / (2.0 * m) * D2[o] / (dx * dx);
                let drift = i * hbar * (a * (x + xk) + b / m) * D1[o] / dx;
                *slot = kinetic + drift;
            }
            row[2] += 0.5 * m * hc.c * x * x + hc.d * x + b * b / (2.0 * m) - f;
            row
        })
        .collect();
    Band { rows }
}

/// Applies `H(t)` to a field sampled on `grid`.
pub fn apply_hamiltonian(s: &Scenario, t: f64, grid: &GridSpec, psi: &[Complex64]) -> Vec<Complex64> {
    hamiltonian(s, t, grid).mul(psi)
}

/// Crank-Nicolson evolution of `packet` to `t_end` with the Hamiltonian at
/// step midpoints. `observe` sees the packet after every step.
pub fn evolve_tdse_observed(
    s: &Scenario,
    packet: &WavePacket,
    t_end: f64,
    cfg: &EvolverConfig,
    mut observe: impl FnMut(&WavePacket) -> Result<()>,
) -> Result<WavePacket> {
    if s.dimension != 1 {
        return Err(GhoError::InvalidArgument("the grid evolver is one-dimensional".into()));
    }
    if packet.grid != cfg.grid {
        return Err(GhoError::GridMismatch(format!("{:?} vs evolver grid {:?}", packet.grid, cfg.grid)));
    }
    s.ensure_contains(packet.t)?;
    s.ensure_contains(t_end)?;
    packet.check_edges(EDGE_TOLERANCE)?;

    let span = t_end - packet.t;
    let steps = (span.abs() / cfg.dt).ceil().max(1.0) as usize;
    let dt = span / steps as f64;
    let i = Complex64::i();
    let mut psi = packet.samples.clone();
    let mut t = packet.t;
    for k in 0..steps {
        let h = hamiltonian(s, t + 0.5 * dt, &cfg.grid);
        let half = i * dt / (2.0 * s.hbar);
        let hpsi = h.mul(&psi);
        let rhs: Vec<Complex64> = psi.iter().zip(&hpsi).map(|(p, hp)| p - half * hp).collect();
        let mut lhs = h;
        for row in lhs.rows.iter_mut() {
            for c in row.iter_mut() {
                *c *= half;
            }
            row[2] += 1.0;
        }
        psi = lhs.solve(rhs)?;
        t = if k + 1 == steps { t_end } else { packet.t + (k + 1) as f64 * dt };
        let current = WavePacket::new(cfg.grid, psi, t)?;
        current.check_edges(EDGE_TOLERANCE)?;
        observe(&current)?;
        psi = current.samples;
    }
    WavePacket::new(cfg.grid, psi, t_end)
}

pub fn evolve_tdse(s: &Scenario, packet: &WavePacket, t_end: f64, cfg: &EvolverConfig) -> Result<WavePacket> {
    evolve_tdse_observed(s, packet, t_end, cfg, |_| Ok(()))
}

/// `n_slices` exact short-time kernels chained by direct quadrature on `grid`
/// (one dimension). Each intermediate integral is weighted by the smooth
/// window of [`crate::quadrature::taper_window`].
pub fn path_integral_oracle(osc: &Oscillator, q: &KernelQuery, n_slices: usize, grid: &GridSpec) -> Result<ComplexAmplitude> {
    if n_slices == 0 {
        return Err(GhoError::InvalidArgument("need at least one slice".into()));
    }
    if n_slices == 1 {
        return kernel(osc, q);
    }
    if osc.scenario.dimension != 1 || q.r_a.len() != 1 || q.r_b.len() != 1 {
        return Err(GhoError::InvalidArgument("the path-integral oracle is one-dimensional".into()));
    }
    grid.validate()?;
    let (x_a, x_b) = (q.r_a[0], q.r_b[0]);
    let dt = (q.t_b - q.t_a) / n_slices as f64;
    let times: Vec<f64> = (0..=n_slices)
        .map(|k| if k == n_slices { q.t_b } else { q.t_a + k as f64 * dt })
        .collect();
    let slices = times
        .windows(2)
        .map(|w| KernelSlice::new(osc, w[0], w[1]))
        .collect::<Result<Vec<_>>>()?;

    let ys = grid.points();
    let h = grid.dx();
    for s in &slices[1..] {
        let qp = s.quadratic_phase();
        let slope = [grid.x_min, grid.x_max]
            .iter()
            .flat_map(|&y| [grid.x_min, grid.x_max].map(|x| qp.slope_a(y, x).abs()))
            .fold(0.0, f64::max);
        if slope * h > PI {
            return Err(GhoError::GridUnderResolved { phase_per_step: slope * h });
        }
    }
    let weights: Vec<f64> = taper_window(grid, COMPOSITION_TAPER)
        .iter()
        .zip(trapezoid_weights(grid))
        .map(|(w, t)| w * t)
        .collect();

    let mut field: Vec<Complex64> = ys.iter().map(|&y| slices[0].eval_1d(x_a, y)).collect();
    for s in &slices[1..n_slices - 1] {
        let qp = s.quadratic_phase();
        let pre = s.prefactor();
        let g: Vec<Complex64> = ys
            .iter()
            .zip(&field)
            .zip(&weights)
            .map(|((&y, f), &w)| f * Complex64::from_polar(w, (qp.alpha_a * y + qp.beta_a) * y))
            .collect();
        field = ys
            .par_iter()
            .map(|&x| {
                // e^{-i gamma x y_j} by repeated multiplication along the grid
                let step = Complex64::from_polar(1.0, -qp.gamma * x * h);
                let mut phasor = Complex64::from_polar(1.0, -qp.gamma * x * ys[0]);
                let mut acc = Complex64::new(0.0, 0.0);
                for gj in &g {
                    acc += gj * phasor;
                    phasor *= step;
                }
                pre * Complex64::from_polar(1.0, (qp.alpha_b * x + qp.beta_b) * x + qp.constant) * acc
            })
            .collect();
    }
    let last = &slices[n_slices - 1];
    Ok(ys
        .iter()
        .zip(&field)
        .zip(&weights)
        .map(|((&y, f), &w)| last.eval_1d(y, x_b) * f * w)
        .sum())
}

/// Time step of the centred difference in [`schrodinger_residual`].
pub const RESIDUAL_DT: f64 = 1e-5;

/// `max |(-i hbar d/dt + H) field| / max |H field|` over interior grid nodes.
///
/// `field(t, xs)` returns the field at time `t` on the positions `xs`.
pub fn schrodinger_residual(
    field: impl Fn(f64, &[f64]) -> Result<Vec<Complex64>>,
    s: &Scenario,
    t: f64,
    grid: &GridSpec,
) -> Result<f64> {
    grid.validate()?;
    let xs = grid.points();
    let before = field(t - RESIDUAL_DT, &xs)?;
    let now = field(t, &xs)?;
    let after = field(t + RESIDUAL_DT, &xs)?;
    let h_psi = apply_hamiltonian(s, t, grid, &now);
    let i = Complex64::i();
    let n = xs.len();
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    for j in 2..n - 2 {
        let dpsi = (after[j] - before[j]) / (2.0 * RESIDUAL_DT);
        let r = -i * s.hbar * dpsi + h_psi[j];
        worst = worst.max(r.norm());
        scale = scale.max(h_psi[j].norm());
    }
    if scale == 0.0 {
        return Err(GhoError::InvalidArgument("H field vanishes on the grid".into()));
    }
    Ok(worst / scale)
}

/// Pointwise residual magnitudes (same normalization) for export.
pub fn residual_map(
    field: impl Fn(f64, &[f64]) -> Result<Vec<Complex64>>,
    s: &Scenario,
    t: f64,
    grid: &GridSpec,
) -> Result<Vec<(f64, f64)>> {
    grid.validate()?;
    let xs = grid.points();
    let before = field(t - RESIDUAL_DT, &xs)?;
    let now = field(t, &xs)?;
    let after = field(t + RESIDUAL_DT, &xs)?;
    let h_psi = apply_hamiltonian(s, t, grid, &now);
    let n = xs.len();
    let scale = h_psi[2..n - 2].iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let i = Complex64::i();
    Ok((2..n - 2)
        .map(|j| {
            let r = -i * s.hbar * (after[j] - before[j]) / (2.0 * RESIDUAL_DT) + h_psi[j];
            (xs[j], r.norm() / scale)
        })
        .collect())
}

pub fn inner_product(p1: &WavePacket, p2: &WavePacket) -> Result<ComplexAmplitude> {
    p1.inner(p2)
}

/// `int p1^* w(x) p2 dx`.
pub fn inner_product_weighted(p1: &WavePacket, p2: &WavePacket, w: impl Fn(f64) -> f64) -> Result<ComplexAmplitude> {
    p1.inner_weighted(p2, w)
}

/// The closed-form kernel of `p^2/2m + m w^2 x^2/2` over elapsed time `t > 0`,
/// with the branch `(i sin wt)^{-1/2}` continued through the focal times.
pub fn mehler_kernel(mass: f64, w: f64, hbar: f64, t: f64, x_a: f64, x_b: f64) -> Result<ComplexAmplitude> {
    let s = (w * t).sin();
    let crossings = (w * t / PI).floor();
    if s.abs() < 1e-12 || !(t > 0.0) {
        return Err(GhoError::InvalidArgument(format!("no closed form at t = {t}")));
    }
    let modulus = (mass * w / (2.0 * PI * hbar * s.abs())).sqrt();
    let phase = mass * w * ((x_a * x_a + x_b * x_b) * (w * t).cos() - 2.0 * x_a * x_b) / (2.0 * hbar * s)
        - PI / 4.0
        - crossings * PI / 2.0;
    Ok(Complex64::from_polar(modulus, phase))
}

/// The closed-form free-particle kernel over elapsed time `t > 0`.
pub fn free_kernel(mass: f64, hbar: f64, t: f64, x_a: f64, x_b: f64) -> Result<ComplexAmplitude> {
    if !(t > 0.0) {
        return Err(GhoError::InvalidArgument(format!("no closed form at t = {t}")));
    }
    let modulus = (mass / (2.0 * PI * hbar * t)).sqrt();
    let phase = mass * (x_b - x_a) * (x_b - x_a) / (2.0 * hbar * t) - PI / 4.0;
    Ok(Complex64::from_polar(modulus, phase))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::Oscillator;
    use crate::ode::SolverTolerance;
    use crate::params::CoefficientFn;
    use crate::propagator::propagate;

    fn gaussian(grid: GridSpec, centre: f64, k: f64) -> WavePacket {
        WavePacket::from_fn(grid, 0.0, |x| {
            Complex64::from_polar(PI.powf(-0.25) * (-(x - centre) * (x - centre) / 2.0).exp(), k * x)
        })
    }

    #[test]
    fn banded_solve_matches_dense_product() {
        let n = 9;
        let rows: Vec<[Complex64; 5]> = (0..n)
            .map(|j| {
                let mut r = [Complex64::new(0.0, 0.0); 5];
                for (o, c) in r.iter_mut().enumerate() {
                    *c = Complex64::new(0.1 * (j + o) as f64, 0.05 * o as f64 - 0.1);
                }
                r[2] = Complex64::new(4.0, 1.0);
                r
            })
            .collect();
        let band = Band { rows };
        let x: Vec<Complex64> = (0..n).map(|j| Complex64::new(j as f64, 1.0 - j as f64)).collect();
        let b = band.mul(&x);
        let solved = band.solve(b).unwrap();
        for (s, e) in solved.iter().zip(&x) {
            assert!((s - e).norm() < 1e-12);
        }
    }

    #[test]
    fn ground_state_is_stationary() {
        let s = Scenario::sho(0.0, 2.0);
        let grid = GridSpec::new(-10.0, 10.0, 1024).unwrap();
        let psi = gaussian(grid, 0.0, 0.0);
        let cfg = EvolverConfig::new(1e-3, grid).unwrap();
        let mut worst_drift = 0.0f64;
        let out = evolve_tdse_observed(&s, &psi, 1.0, &cfg, |p| {
            worst_drift = worst_drift.max((p.norm() - 1.0).abs());
            Ok(())
        })
        .unwrap();
        assert!(worst_drift < 1e-8, "{worst_drift}");
        let overlap = psi.inner(&WavePacket { t: 0.0, ..out.clone() }).unwrap();
        assert!(overlap.norm() > 1.0 - 1e-8);
        assert!((overlap.arg() + 0.5).abs() < 1e-6, "{}", overlap.arg());
    }

    #[test]
    fn free_gaussian_spreads() {
        let s = Scenario::free_particle(0.0, 1.0);
        let grid = GridSpec::new(-15.0, 15.0, 2048).unwrap();
        let psi = gaussian(grid, 0.0, 0.0);
        let out = evolve_tdse(&s, &psi, 1.0, &EvolverConfig::new(1e-3, grid).unwrap()).unwrap();
        assert!((out.variance_x() - 1.0).abs() < 1e-4, "{}", out.variance_x());
    }

    #[test]
    fn driven_centre_follows_classical_path() {
        let mut s = Scenario::sho(0.0, 2.0);
        s.force = CoefficientFn::constant(1.0);
        let grid = GridSpec::new(-10.0, 12.0, 1024).unwrap();
        let psi = gaussian(grid, 0.0, 0.0);
        let cfg = EvolverConfig::new(1e-3, grid).unwrap();
        let mut worst = 0.0f64;
        evolve_tdse_observed(&s, &psi, 2.0, &cfg, |p| {
            worst = worst.max((p.mean_x() - (1.0 - p.t.cos())).abs());
            Ok(())
        })
        .unwrap();
        assert!(worst < 1e-4, "{worst}");
    }

    #[test]
    fn evolver_agrees_with_kernel_propagation() {
        let mut s = Scenario::sho(0.0, 1.0);
        s.frequency = CoefficientFn::sinusoidal(0.1, 2.0, std::f64::consts::FRAC_PI_2, 1.0);
        s.a = CoefficientFn::constant(0.1);
        s.b = CoefficientFn::constant(-0.2);
        let osc = Oscillator::solve_with(&s, SolverTolerance::precise()).unwrap();
        let grid = GridSpec::new(-12.0, 12.0, 2048).unwrap();
        let psi = gaussian(grid, 1.0, 0.5);
        let cn = evolve_tdse(&s, &psi, 1.0, &EvolverConfig::new(1e-3, grid).unwrap()).unwrap();
        let exact = propagate(&osc, &psi, 1.0).unwrap();
        assert!(cn.distance(&exact).unwrap() < 1e-4, "{}", cn.distance(&exact).unwrap());
    }

    #[test]
    fn free_path_integral() {
        let osc = Oscillator::solve(&Scenario::free_particle(0.0, 1.0)).unwrap();
        let q = KernelQuery::scalar(0.0, 0.3, 1.0, -0.4);
        let exact = free_kernel(1.0, 1.0, 1.0, 0.3, -0.4).unwrap();
        assert_eq!(path_integral_oracle(&osc, &q, 1, &GridSpec::new(-1.0, 1.0, 16).unwrap()).unwrap(), kernel(&osc, &q).unwrap());
        let errs: Vec<f64> = [801, 1601, 3201]
            .iter()
            .map(|&n| {
                let grid = GridSpec::new(-12.0, 12.0, n).unwrap();
                (path_integral_oracle(&osc, &q, 4, &grid).unwrap() - exact).norm() / exact.norm()
            })
            .collect();
        assert!(errs[2] < 1e-6, "{errs:?}");
        // spectral convergence: already at round-off on the coarsest resolved grid
        assert!(errs[1] <= errs[0] + 1e-13 && errs[2] <= errs[1] + 1e-13, "{errs:?}");
    }

    #[test]
    fn sho_path_integral() {
        let osc = Oscillator::solve_with(&Scenario::sho(0.0, 1.5), SolverTolerance::precise()).unwrap();
        let grid = GridSpec::new(-16.0, 16.0, 6001).unwrap();
        for (xa, xb) in [(0.3, -0.4), (1.2, 0.9)] {
            let q = KernelQuery::scalar(0.2, xa, 1.2, xb);
            let pi = path_integral_oracle(&osc, &q, 8, &grid).unwrap();
            let k = kernel(&osc, &q).unwrap();
            assert!((pi - k).norm() < 1e-5 * k.norm(), "{pi} vs {k}");
        }
    }

    #[test]
    fn residuals() {
        let s = Scenario::sho(0.0, 2.0);
        let grid = GridSpec::new(-6.0, 6.0, 1201).unwrap();
        let ground = |t: f64, xs: &[f64]| -> Result<Vec<Complex64>> {
            Ok(xs
                .iter()
                .map(|&x| Complex64::from_polar(PI.powf(-0.25) * (-x * x / 2.0).exp(), -t / 2.0))
                .collect())
        };
        assert!(schrodinger_residual(ground, &s, 0.7, &grid).unwrap() < 1e-4);
        let corrupted = |t: f64, xs: &[f64]| -> Result<Vec<Complex64>> {
            Ok(ground(t, xs)?.iter().zip(xs).map(|(v, &x)| v * (1.0 + 0.1 * x)).collect())
        };
        assert!(schrodinger_residual(corrupted, &s, 0.7, &grid).unwrap() > 1e-2);

        let osc = Oscillator::solve(&s).unwrap();
        let slice = |t: f64, xs: &[f64]| -> Result<Vec<Complex64>> {
            let k = KernelSlice::new(&osc, 0.0, t)?;
            Ok(xs.iter().map(|&x| k.eval_1d(0.3, x)).collect())
        };
        let r = schrodinger_residual(slice, &s, 0.7, &GridSpec::new(-5.0, 5.0, 2001).unwrap()).unwrap();
        assert!(r < 1e-4, "{r}");
    }

    #[test]
    fn inner_products() {
        let grid = GridSpec::new(-10.0, 10.0, 512).unwrap();
        let g0 = gaussian(grid, 0.0, 0.0);
        let g1 = WavePacket::from_fn(grid, 0.0, |x| Complex64::new(2f64.sqrt() * x * PI.powf(-0.25) * (-x * x / 2.0).exp(), 0.0));
        assert!((inner_product(&g0, &g0).unwrap().re - 1.0).abs() < 1e-10);
        assert!(inner_product(&g0, &g1).unwrap().norm() < 1e-10);
        assert!(inner_product_weighted(&g0, &g0, |x| x).unwrap().norm() < 1e-10);
        let other = WavePacket::from_fn(GridSpec::new(-10.0, 10.0, 256).unwrap(), 0.0, |_| Complex64::new(0.0, 0.0));
        assert!(matches!(inner_product(&g0, &other), Err(GhoError::GridMismatch(_))));
    }

    #[test]
    fn closed_forms() {
        let k = mehler_kernel(1.0, 1.0, 1.0, std::f64::consts::FRAC_PI_2, 0.0, 0.0).unwrap();
        assert!((k.norm() - (2.0 * PI).powf(-0.5)).abs() < 1e-14);
        assert!((k.arg() + PI / 4.0).abs() < 1e-14);
        let k = free_kernel(1.0, 1.0, 1.0, 0.0, 0.0).unwrap();
        assert!((k.norm() - 0.398942280401).abs() < 1e-11);
    }
}
