//! Uniform spatial grids and complex wave packets sampled on them.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{GhoError, Result};

/// Packets entering expectation values or unitary maps must be this dark at the edges.
pub const EDGE_TOLERANCE: f64 = 1e-8;
/// Packets entering propagation must be this dark at the edges.
pub const PROPAGATION_EDGE_TOLERANCE: f64 = 1e-10;

/// `n_points` equally spaced nodes from `x_min` to `x_max`, both included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub n_points: usize,
}

impl GridSpec {
    pub fn new(x_min: f64, x_max: f64, n_points: usize) -> Result<Self> {
        let g = GridSpec { x_min, x_max, n_points };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x_min.is_finite() && self.x_max.is_finite() && self.x_min < self.x_max) {
            return Err(GhoError::InvalidArgument(format!(
                "grid bounds must satisfy x_min < x_max, got [{}, {}]",
                self.x_min, self.x_max
            )));
        }
        if self.n_points < 16 {
            return Err(GhoError::InvalidArgument(format!(
                "grid needs at least 16 points, got {}",
                self.n_points
            )));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.n_points - 1) as f64
    }

    pub fn x(&self, j: usize) -> f64 {
        self.x_min + j as f64 * self.dx()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n_points).map(|j| self.x(j)).collect()
    }

    /// Same bounds with (roughly) `factor` times finer spacing.
    pub fn refined(&self, factor: usize) -> GridSpec {
        GridSpec {
            n_points: (self.n_points - 1) * factor + 1,
            ..*self
        }
    }

    /// Trapezoidal rule `int f dx` for samples on this grid.
    pub fn integrate<T>(&self, samples: &[T]) -> T
    where
        T: Copy + std::iter::Sum<T> + std::ops::Mul<f64, Output = T> + std::ops::Sub<T, Output = T>,
    {
        let n = samples.len();
        let total: T = samples.iter().copied().sum();
        (total - (samples[0] * 0.5) - (samples[n - 1] * 0.5)) * self.dx()
    }

    fn same_as(&self, other: &GridSpec) -> bool {
        let tol = 1e-12 * (1.0 + self.x_min.abs().max(self.x_max.abs()));
        self.n_points == other.n_points
            && (self.x_min - other.x_min).abs() <= tol
            && (self.x_max - other.x_max).abs() <= tol
    }
}

/// A wave function sampled on a grid at time `t` (one dimension).
#[derive(Debug, Clone, PartialEq)]
pub struct WavePacket {
    pub grid: GridSpec,
    pub samples: Vec<Complex64>,
    pub t: f64,
}

impl WavePacket {
    pub fn new(grid: GridSpec, samples: Vec<Complex64>, t: f64) -> Result<Self> {
        grid.validate()?;
        if samples.len() != grid.n_points {
            return Err(GhoError::GridMismatch(format!(
                "{} samples for a {}-point grid",
                samples.len(),
                grid.n_points
            )));
        }
        Ok(WavePacket { grid, samples, t })
    }

    pub fn from_fn(grid: GridSpec, t: f64, f: impl Fn(f64) -> Complex64) -> Self {
        let samples = grid.points().into_iter().map(f).collect();
        WavePacket { grid, samples, t }
    }

    pub fn try_from_fn(grid: GridSpec, t: f64, f: impl Fn(f64) -> Result<Complex64>) -> Result<Self> {
        let samples = grid.points().into_iter().map(f).collect::<Result<Vec<_>>>()?;
        WavePacket::new(grid, samples, t)
    }

    pub fn points(&self) -> Vec<f64> {
        self.grid.points()
    }

    pub fn norm_sqr(&self) -> f64 {
        let dens: Vec<f64> = self.samples.iter().map(|z| z.norm_sqr()).collect();
        self.grid.integrate(&dens)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn normalized(mut self) -> Self {
        let n = self.norm();
        for z in &mut self.samples {
            *z /= n;
        }
        self
    }

    pub fn scaled(mut self, factor: Complex64) -> Self {
        for z in &mut self.samples {
            *z *= factor;
        }
        self
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest edge amplitude divided by the largest amplitude.
    pub fn edge_ratio(&self) -> f64 {
        let max = self.max_abs();
        if max == 0.0 {
            return 0.0;
        }
        let n = self.samples.len();
        self.samples[0].norm().max(self.samples[n - 1].norm()) / max
    }

    pub fn check_edges(&self, threshold: f64) -> Result<()> {
        let edge_ratio = self.edge_ratio();
        if edge_ratio > threshold {
            Err(GhoError::GridTooNarrow { edge_ratio, threshold })
        } else {
            Ok(())
        }
    }

    pub fn check_compatible(&self, other: &WavePacket) -> Result<()> {
        if !self.grid.same_as(&other.grid) {
            return Err(GhoError::GridMismatch(format!("{:?} vs {:?}", self.grid, other.grid)));
        }
        if (self.t - other.t).abs() > 1e-12 * (1.0 + self.t.abs()) {
            return Err(GhoError::GridMismatch(format!("times differ: {} vs {}", self.t, other.t)));
        }
        Ok(())
    }

    /// `<self|other>` by the trapezoidal rule.
    pub fn inner(&self, other: &WavePacket) -> Result<Complex64> {
        self.check_compatible(other)?;
        let prod: Vec<Complex64> = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| a.conj() * b)
            .collect();
        Ok(self.grid.integrate(&prod))
    }

    /// `<self| w(x) |other>` by the trapezoidal rule.
    pub fn inner_weighted(&self, other: &WavePacket, w: impl Fn(f64) -> f64) -> Result<Complex64> {
        self.check_compatible(other)?;
        let prod: Vec<Complex64> = self
            .samples
            .iter()
            .zip(&other.samples)
            .enumerate()
            .map(|(j, (a, b))| a.conj() * b * w(self.grid.x(j)))
            .collect();
        Ok(self.grid.integrate(&prod))
    }

    /// `||self - other||` (L2).
    pub fn distance(&self, other: &WavePacket) -> Result<f64> {
        self.check_compatible(other)?;
        let diff: Vec<f64> = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| (a - b).norm_sqr())
            .collect();
        Ok(self.grid.integrate(&diff).sqrt())
    }

    /// `<x^k>` for the normalized density.
    pub fn moment(&self, k: i32) -> f64 {
        let xs = self.grid.points();
        let w: Vec<f64> = self.samples.iter().zip(&xs).map(|(z, &x)| z.norm_sqr() * x.powi(k)).collect();
        self.grid.integrate(&w) / self.norm_sqr()
    }

    pub fn mean_x(&self) -> f64 {
        self.moment(1)
    }

    pub fn variance_x(&self) -> f64 {
        let mean = self.mean_x();
        let xs = self.grid.points();
        let w: Vec<f64> = self
            .samples
            .iter()
            .zip(&xs)
            .map(|(z, &x)| z.norm_sqr() * (x - mean).powi(2))
            .collect();
        self.grid.integrate(&w) / self.norm_sqr()
    }

    pub fn with_samples(&self, samples: Vec<Complex64>) -> WavePacket {
        WavePacket {
            grid: self.grid,
            samples,
            t: self.t,
        }
    }

    /// Band-limited (trigonometric) interpolant through the samples.
    pub fn interpolator(&self) -> TrigInterpolant {
        TrigInterpolant::new(self)
    }

    /// `(2 pi sigma^2)^(-1/4) exp(-(x - centre)^2 / (4 sigma^2) + i k x)`, so `Var(x) = sigma^2`.
    pub fn gaussian(grid: GridSpec, t: f64, centre: f64, k: f64, sigma: f64) -> Self {
        let norm = (2.0 * std::f64::consts::PI * sigma * sigma).powf(-0.25);
        WavePacket::from_fn(grid, t, |x| {
            let d = x - centre;
            Complex64::from_polar(norm * (-d * d / (4.0 * sigma * sigma)).exp(), k * x)
        })
    }
}

/// 4th-order first derivative with one-sided closures at the two edge nodes.
pub fn first_derivative(f: &[Complex64], dx: f64) -> Vec<Complex64> {
    let n = f.len();
    assert!(n >= 5, "derivative stencil needs at least 5 points");
    let c = 1.0 / (12.0 * dx);
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for j in 2..n - 2 {
        out[j] = (f[j - 2] - f[j + 2] + (f[j + 1] - f[j - 1]) * 8.0) * c;
    }
    out[0] = (f[0] * -25.0 + f[1] * 48.0 - f[2] * 36.0 + f[3] * 16.0 - f[4] * 3.0) * c;
    out[1] = (f[0] * -3.0 - f[1] * 10.0 + f[2] * 18.0 - f[3] * 6.0 + f[4]) * c;
    let m = n - 1;
    out[m] = -(f[m] * -25.0 + f[m - 1] * 48.0 - f[m - 2] * 36.0 + f[m - 3] * 16.0 - f[m - 4] * 3.0) * c;
    out[m - 1] = -(f[m] * -3.0 - f[m - 1] * 10.0 + f[m - 2] * 18.0 - f[m - 3] * 6.0 + f[m - 4]) * c;
    out
}

/// 4th-order second derivative with one-sided closures at the two edge nodes.
pub fn second_derivative(f: &[Complex64], dx: f64) -> Vec<Complex64> {
    let n = f.len();
    assert!(n >= 6, "derivative stencil needs at least 6 points");
    let c = 1.0 / (12.0 * dx * dx);
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for j in 2..n - 2 {
        out[j] = ((f[j + 1] + f[j - 1]) * 16.0 - (f[j + 2] + f[j - 2]) - f[j] * 30.0) * c;
    }
    let edge0 = |g: &dyn Fn(usize) -> Complex64| {
        (g(0) * 45.0 - g(1) * 154.0 + g(2) * 214.0 - g(3) * 156.0 + g(4) * 61.0 - g(5) * 10.0) * c
    };
    let edge1 = |g: &dyn Fn(usize) -> Complex64| {
        (g(0) * 10.0 - g(1) * 15.0 - g(2) * 4.0 + g(3) * 14.0 - g(4) * 6.0 + g(5)) * c
    };
    out[0] = edge0(&|k| f[k]);
    out[1] = edge1(&|k| f[k]);
    out[n - 1] = edge0(&|k| f[n - 1 - k]);
    out[n - 2] = edge1(&|k| f[n - 1 - k]);
    out
}

/// Trigonometric interpolation of grid samples, treating the grid as one
/// period of length `n dx`. Zero outside `[x_min, x_max]`.
#[derive(Debug, Clone)]
pub struct TrigInterpolant {
    grid: GridSpec,
    /// Coefficients for wavenumbers `-k_max ..= k_max` (Nyquist split for even n).
    coeffs: Vec<Complex64>,
    k_max: i64,
    period: f64,
}

impl TrigInterpolant {
    fn new(packet: &WavePacket) -> Self {
        let n = packet.samples.len();
        let mut buf = packet.samples.clone();
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        let scale = 1.0 / n as f64;
        let k_max = (n / 2) as i64;
        let coeffs = (-k_max..=k_max)
            .map(|k| {
                let idx = k.rem_euclid(n as i64) as usize;
                let c = buf[idx] * scale;
                if n.is_multiple_of(2) && k.abs() == k_max {
                    c * 0.5
                } else {
                    c
                }
            })
            .collect();
        TrigInterpolant {
            grid: packet.grid,
            coeffs,
            k_max,
            period: n as f64 * packet.grid.dx(),
        }
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        if x < self.grid.x_min || x > self.grid.x_max {
            return Complex64::new(0.0, 0.0);
        }
        let theta = 2.0 * std::f64::consts::PI * (x - self.grid.x_min) / self.period;
        let step = Complex64::from_polar(1.0, theta);
        let mut phasor = Complex64::from_polar(1.0, -(self.k_max as f64) * theta);
        let mut acc = Complex64::new(0.0, 0.0);
        for c in &self.coeffs {
            acc += c * phasor;
            phasor *= step;
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian(grid: GridSpec, center: f64, k0: f64) -> WavePacket {
        WavePacket::from_fn(grid, 0.0, |x| {
            Complex64::from_polar(
                std::f64::consts::PI.powf(-0.25) * (-(x - center).powi(2) / 2.0).exp(),
                k0 * x,
            )
        })
    }

    #[test]
    fn grid_validation() {
        assert!(GridSpec::new(0.0, 1.0, 15).is_err());
        assert!(GridSpec::new(1.0, 1.0, 64).is_err());
        let g = GridSpec::new(-1.0, 1.0, 21).unwrap();
        assert!((g.dx() - 0.1).abs() < 1e-15);
        assert_eq!(g.points().len(), 21);
        assert_eq!(g.refined(4).n_points, 81);
    }

    #[test]
    fn gaussian_moments() {
        let p = gaussian(GridSpec::new(-10.0, 10.0, 401).unwrap(), 1.5, 0.7);
        assert!((p.norm() - 1.0).abs() < 1e-12);
        assert!((p.mean_x() - 1.5).abs() < 1e-12);
        assert!((p.variance_x() - 0.5).abs() < 1e-12);
        assert!(p.edge_ratio() < 1e-8);
        assert!(p.check_edges(EDGE_TOLERANCE).is_ok());
        let narrow = gaussian(GridSpec::new(-3.0, 3.0, 101).unwrap(), 0.0, 0.0);
        assert!(matches!(
            narrow.check_edges(EDGE_TOLERANCE),
            Err(GhoError::GridTooNarrow { .. })
        ));
    }

    #[test]
    fn derivatives_are_fourth_order() {
        let errs: Vec<(f64, f64)> = [101usize, 201]
            .iter()
            .map(|&n| {
                let g = GridSpec::new(-1.0, 2.0, n).unwrap();
                let f: Vec<Complex64> = g.points().iter().map(|&x| Complex64::new(x.sin(), x.cos())).collect();
                let d1 = first_derivative(&f, g.dx());
                let d2 = second_derivative(&f, g.dx());
                let e1 = g
                    .points()
                    .iter()
                    .zip(&d1)
                    .map(|(&x, d)| (d - Complex64::new(x.cos(), -x.sin())).norm())
                    .fold(0.0, f64::max);
                let e2 = g
                    .points()
                    .iter()
                    .zip(&d2)
                    .map(|(&x, d)| (d + Complex64::new(x.sin(), x.cos())).norm())
                    .fold(0.0, f64::max);
                (e1, e2)
            })
            .collect();
        // halving dx cuts the error ~16x (allow for the lower-order edge closure)
        assert!(errs[0].0 / errs[1].0 > 14.0, "{errs:?}");
        assert!(errs[0].1 / errs[1].1 > 7.0, "{errs:?}");
        assert!(errs[1].0 < 5e-8 && errs[1].1 < 1e-6, "{errs:?}");
    }

    #[test]
    fn trig_interpolation_is_spectral() {
        let g = GridSpec::new(-10.0, 10.0, 256).unwrap();
        let p = gaussian(g, 0.3, 1.2);
        let interp = p.interpolator();
        for x in [-3.21, -0.05, 0.0, 1.777, 4.4] {
            let exact = Complex64::from_polar(std::f64::consts::PI.powf(-0.25) * (-(x - 0.3f64).powi(2) / 2.0).exp(), 1.2 * x);
            assert!((interp.eval(x) - exact).norm() < 1e-12, "x = {x}");
        }
        assert!((interp.eval(g.x(17)) - p.samples[17]).norm() < 1e-13);
        assert_eq!(interp.eval(11.0), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn mismatched_grids_rejected() {
        let a = gaussian(GridSpec::new(-10.0, 10.0, 256).unwrap(), 0.0, 0.0);
        let b = gaussian(GridSpec::new(-10.0, 10.0, 257).unwrap(), 0.0, 0.0);
        assert!(matches!(a.inner(&b), Err(GhoError::GridMismatch(_))));
        let mut c = a.clone();
        c.t = 1.0;
        assert!(matches!(a.inner(&c), Err(GhoError::GridMismatch(_))));
    }
}
