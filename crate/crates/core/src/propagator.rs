//! The exact kernel `K(b, a)` and the operations built directly on it.
//!
//! In one dimension, with `X = x - x_p` and `D = v_b u_a - u_b v_a`, the
//! kernel is
//!
//! ```text
//! K = (Omega / (2 pi i hbar D))^(1/2) exp(i/hbar [int f + xi + M a x^2 + (b + M x_p') x]_a^b)
//!     exp(i/(2 hbar D) [M_a (u_b v_a' - u_a' v_b) X_a^2 + M_b (u_a v_b' - u_b' v_a) X_b^2 - 2 Omega X_a X_b])
//! ```
//!
//! and the N-dimensional kernel is the product over coordinates (with `xi`
//! and `int f` counted once). The square root is continued from the free
//! short-time branch `e^{-i pi/4}`; every zero of `D` crossed between the two
//! times adds `e^{-i pi/2}` per dimension. Backward kernels are conjugates
//! of forward ones.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::classical::{ClassicalBasis, Oscillator};
use crate::error::{GhoError, Result};
use crate::grid::{GridSpec, WavePacket, PROPAGATION_EDGE_TOLERANCE};
use crate::quadrature::{chirp_sum, taper_window, trapezoid_weights};

pub type ComplexAmplitude = Complex64;

/// `|D|` below this times `max(|u_b|, |v_b|) (|u_a| + |v_a|)` is a caustic.
pub const CAUSTIC_TOLERANCE: f64 = 1e-12;

/// Times closer than this to a zero of `D` are also treated as caustic.
pub const CAUSTIC_TIME_TOLERANCE: f64 = 1e-9;

/// Width of the erf ramps used when integrating kernel products.
pub const COMPOSITION_TAPER: f64 = 0.25;

/// Quadratic phase, in radians, the composition integrand must reach at the
/// edge of a [`composition_grid`].
pub const COMPOSITION_EDGE_PHASE: f64 = 200.0;

#[derive(Debug, Clone, PartialEq)]
pub struct KernelQuery {
    pub t_a: f64,
    pub t_b: f64,
    pub r_a: Vec<f64>,
    pub r_b: Vec<f64>,
}

impl KernelQuery {
    pub fn new(t_a: f64, r_a: impl Into<Vec<f64>>, t_b: f64, r_b: impl Into<Vec<f64>>) -> Self {
        KernelQuery {
            t_a,
            t_b,
            r_a: r_a.into(),
            r_b: r_b.into(),
        }
    }

    pub fn scalar(t_a: f64, x_a: f64, t_b: f64, x_b: f64) -> Self {
        Self::new(t_a, vec![x_a], t_b, vec![x_b])
    }

    /// The query with the roles of `a` and `b` exchanged.
    pub fn swapped(&self) -> Self {
        KernelQuery {
            t_a: self.t_b,
            t_b: self.t_a,
            r_a: self.r_b.clone(),
            r_b: self.r_a.clone(),
        }
    }
}

/// Zeros of `D(t) = v(t) u(t_a) - u(t) v(t_a)` for `t` in `(t_a, t1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CausticReport {
    pub t_a: f64,
    pub times: Vec<f64>,
}

impl CausticReport {
    /// Number of zeros strictly before `t_b`.
    pub fn morse_index(&self, t_b: f64) -> usize {
        self.times.iter().filter(|&&t| t < t_b).count()
    }
}

pub fn caustic_times(basis: &ClassicalBasis, t_a: f64) -> Result<CausticReport> {
    let (_, t1) = basis.span();
    let times = if t_a < t1 { zeros_between(basis, t_a, t1)? } else { Vec::new() };
    Ok(CausticReport { t_a, times })
}

/// Zeros of `D` relative to `start` in `(start, end]`, sorted.
fn zeros_between(basis: &ClassicalBasis, start: f64, end: f64) -> Result<Vec<f64>> {
    let anchor = basis.at(start)?;
    let d = |t: f64| basis.caustic_function(&anchor, t);

    let mut marks = vec![start];
    marks.extend(basis.nodes().iter().copied().filter(|&t| t > start && t < end));
    marks.push(end);
    let mut samples = Vec::with_capacity(4 * marks.len());
    for w in marks.windows(2) {
        for k in 1..=4 {
            samples.push(if k == 4 { w[1] } else { w[0] + (w[1] - w[0]) * k as f64 / 4.0 });
        }
    }

    let mut zeros = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    for &t in &samples {
        let dt = d(t)?;
        if dt == 0.0 {
            zeros.push(t);
        } else if let Some((tp, dp)) = prev {
            if dp != 0.0 && dp.signum() != dt.signum() {
                zeros.push(bisect(&d, tp, dp, t)?);
            }
        }
        prev = Some((t, dt));
    }
    Ok(zeros)
}

fn bisect(d: &impl Fn(f64) -> Result<f64>, mut lo: f64, d_lo: f64, mut hi: f64) -> Result<f64> {
    for _ in 0..200 {
        if hi - lo <= 1e-13 * (1.0 + hi.abs()) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let dm = d(mid)?;
        if dm == 0.0 {
            return Ok(mid);
        }
        if dm.signum() == d_lo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// The phase of a one-dimensional kernel expanded as
/// `alpha_b x_b^2 + beta_b x_b + alpha_a x_a^2 + beta_a x_a - gamma x_a x_b + constant`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticPhase {
    pub alpha_b: f64,
    pub beta_b: f64,
    pub alpha_a: f64,
    pub beta_a: f64,
    pub gamma: f64,
    pub constant: f64,
}

impl QuadraticPhase {
    /// `d(phase)/dx_a`.
    pub fn slope_a(&self, x_a: f64, x_b: f64) -> f64 {
        2.0 * self.alpha_a * x_a + self.beta_a - self.gamma * x_b
    }

    /// `d(phase)/dx_b`.
    pub fn slope_b(&self, x_a: f64, x_b: f64) -> f64 {
        2.0 * self.alpha_b * x_b + self.beta_b - self.gamma * x_a
    }
}

/// Everything about `K(t_b, . ; t_a, .)` that does not depend on positions.
#[derive(Debug, Clone)]
pub struct KernelSlice {
    pub t_a: f64,
    pub t_b: f64,
    dimension: usize,
    denominator: f64,
    morse_index: usize,
    prefactor: Complex64,
    phase0: f64,
    quad_a: f64,
    quad_b: f64,
    cross: f64,
    gauge_a: f64,
    gauge_b: f64,
    lin_a: f64,
    lin_b: f64,
    xp_a: f64,
    xp_b: f64,
}

impl KernelSlice {
    pub fn new(osc: &Oscillator, t_a: f64, t_b: f64) -> Result<Self> {
        let s = &osc.scenario;
        s.ensure_contains(t_a)?;
        s.ensure_contains(t_b)?;
        if t_a == t_b {
            return Err(GhoError::InvalidArgument(format!(
                "equal-time kernel query at t = {t_a}; the kernel is a delta function there"
            )));
        }
        let hbar = s.hbar;
        let n = s.dimension as f64;
        let omega = osc.basis.omega();
        let a = osc.basis.at(t_a)?;
        let b = osc.basis.at(t_b)?;
        let pa = osc.particular.at(t_a)?;
        let pb = osc.particular.at(t_b)?;

        let denominator = b.v * a.u - b.u * a.v;
        let caustic = || GhoError::CausticEncountered { t_a, t_b, denominator };

        // Caustic tests and Morse index on the forward-ordered pair.
        let (early, late) = if t_b > t_a { (&a, &b) } else { (&b, &a) };
        let d_fwd = late.v * early.u - late.u * early.v;
        let d_fwd_dot = late.v_dot * early.u - late.u_dot * early.v;
        let scale = late.u.abs().max(late.v.abs()) * (early.u.abs() + early.v.abs());
        if d_fwd.abs() < CAUSTIC_TOLERANCE * scale || d_fwd.abs() <= CAUSTIC_TIME_TOLERANCE * d_fwd_dot.abs() {
            return Err(caustic());
        }
        let zeros = zeros_between(&osc.basis, early.t, late.t)?;
        if zeros.last().is_some_and(|&z| late.t - z <= CAUSTIC_TIME_TOLERANCE) {
            return Err(caustic());
        }
        let morse_index = zeros.len();
        // Omega / D starts positive after `early` and flips sign at each zero.
        let expected_sign = if morse_index % 2 == 0 { 1.0 } else { -1.0 };
        if (omega / d_fwd).signum() != expected_sign {
            return Err(GhoError::IntegrationFailure(format!(
                "caustic count {morse_index} on [{}, {}] disagrees with the sign of D",
                early.t, late.t
            )));
        }

        let modulus = (omega / (2.0 * PI * hbar * d_fwd)).abs().powf(n / 2.0);
        let branch = -n * (FRAC_PI_4 + FRAC_PI_2 * morse_index as f64);
        let forward = Complex64::from_polar(modulus, branch);
        let prefactor = if t_b > t_a { forward } else { forward.conj() };

        let two_hbar_d = 2.0 * hbar * denominator;
        Ok(KernelSlice {
            t_a,
            t_b,
            dimension: s.dimension,
            denominator,
            morse_index,
            prefactor,
            phase0: (pb.xi - pa.xi + pb.f_integral - pa.f_integral) / hbar,
            quad_a: a.mass * (b.u * a.v_dot - a.u_dot * b.v) / two_hbar_d,
            quad_b: b.mass * (a.u * b.v_dot - b.u_dot * a.v) / two_hbar_d,
            cross: -omega / (hbar * denominator),
            gauge_a: a.mass * s.a.value(t_a) / hbar,
            gauge_b: b.mass * s.a.value(t_b) / hbar,
            lin_a: (s.b.value(t_a) + a.mass * pa.x_dot) / hbar,
            lin_b: (s.b.value(t_b) + b.mass * pb.x_dot) / hbar,
            xp_a: pa.x,
            xp_b: pb.x,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// `v(t_b) u(t_a) - u(t_b) v(t_a)`.
    pub fn denominator(&self) -> f64 {
        self.denominator
    }

    /// Zeros of the denominator crossed between the two times.
    pub fn morse_index(&self) -> usize {
        self.morse_index
    }

    /// The position-independent factor, including the branch phase.
    pub fn prefactor(&self) -> Complex64 {
        self.prefactor
    }

    fn coordinate_phase(&self, x_a: f64, x_b: f64) -> f64 {
        let da = x_a - self.xp_a;
        let db = x_b - self.xp_b;
        (self.gauge_b * x_b + self.lin_b) * x_b - (self.gauge_a * x_a + self.lin_a) * x_a
            + self.quad_a * da * da
            + self.quad_b * db * db
            + self.cross * da * db
    }

    /// Total phase of the kernel at `(r_b, r_a)`, excluding the prefactor branch.
    pub fn phase(&self, r_a: &[f64], r_b: &[f64]) -> f64 {
        self.phase0 + r_a.iter().zip(r_b).map(|(&xa, &xb)| self.coordinate_phase(xa, xb)).sum::<f64>()
    }

    pub fn eval(&self, r_a: &[f64], r_b: &[f64]) -> Result<ComplexAmplitude> {
        if r_a.len() != self.dimension || r_b.len() != self.dimension {
            return Err(GhoError::InvalidArgument(format!(
                "kernel positions have lengths {} and {}, expected {}",
                r_a.len(),
                r_b.len(),
                self.dimension
            )));
        }
        Ok(self.prefactor * Complex64::from_polar(1.0, self.phase(r_a, r_b)))
    }

    /// One-dimensional evaluation without length checks.
    pub fn eval_1d(&self, x_a: f64, x_b: f64) -> ComplexAmplitude {
        self.prefactor * Complex64::from_polar(1.0, self.phase0 + self.coordinate_phase(x_a, x_b))
    }

    pub fn quadratic_phase(&self) -> QuadraticPhase {
        let (xa, xb) = (self.xp_a, self.xp_b);
        QuadraticPhase {
            alpha_b: self.gauge_b + self.quad_b,
            beta_b: self.lin_b - 2.0 * self.quad_b * xb - self.cross * xa,
            alpha_a: self.quad_a - self.gauge_a,
            beta_a: -self.lin_a - 2.0 * self.quad_a * xa - self.cross * xb,
            gamma: -self.cross,
            constant: self.phase0 + self.quad_a * xa * xa + self.quad_b * xb * xb + self.cross * xa * xb,
        }
    }

    /// Largest kernel phase change per input grid step, over the support of
    /// `packet` (input side) and the whole grid (output side).
    pub fn phase_per_step(&self, packet: &WavePacket) -> f64 {
        let q = self.quadratic_phase();
        let (lo, hi) = support(packet);
        let g = &packet.grid;
        let slope = [lo, hi]
            .iter()
            .flat_map(|&y| [g.x_min, g.x_max].map(|x| q.slope_a(y, x).abs()))
            .fold(0.0, f64::max);
        slope * g.dx()
    }

    /// `int K(t_b, x; t_a, y) psi(y) dy` on the packet grid by the trapezoid rule.
    pub fn apply(&self, packet: &WavePacket) -> Result<WavePacket> {
        if self.dimension != 1 {
            return Err(GhoError::InvalidArgument("grid propagation is one-dimensional".into()));
        }
        if (packet.t - self.t_a).abs() > 1e-12 * (1.0 + self.t_a.abs()) {
            return Err(GhoError::InvalidArgument(format!(
                "packet is at t = {} but the kernel starts at {}",
                packet.t, self.t_a
            )));
        }
        packet.check_edges(PROPAGATION_EDGE_TOLERANCE)?;
        let phase_per_step = self.phase_per_step(packet);
        if phase_per_step > PI {
            return Err(GhoError::GridUnderResolved { phase_per_step });
        }

        let q = self.quadratic_phase();
        let grid = packet.grid;
        let xs = grid.points();
        let weights = trapezoid_weights(&grid);
        let g: Vec<Complex64> = xs
            .iter()
            .zip(&packet.samples)
            .zip(&weights)
            .map(|((&y, psi), &w)| psi * Complex64::from_polar(w, (q.alpha_a * y + q.beta_a) * y))
            .collect();
        let sums = chirp_sum(&grid, &g, q.gamma);
        let samples = xs
            .iter()
            .zip(sums)
            .map(|(&x, s)| self.prefactor * Complex64::from_polar(1.0, (q.alpha_b * x + q.beta_b) * x + q.constant) * s)
            .collect();
        WavePacket::new(grid, samples, self.t_b)
    }
}

/// Smallest interval holding every sample above the propagation edge threshold.
fn support(packet: &WavePacket) -> (f64, f64) {
    let cut = PROPAGATION_EDGE_TOLERANCE * packet.max_abs();
    let first = packet.samples.iter().position(|z| z.norm() > cut).unwrap_or(0);
    let last = packet
        .samples
        .iter()
        .rposition(|z| z.norm() > cut)
        .unwrap_or(packet.samples.len() - 1);
    (packet.grid.x(first), packet.grid.x(last))
}

pub fn kernel(osc: &Oscillator, q: &KernelQuery) -> Result<ComplexAmplitude> {
    KernelSlice::new(osc, q.t_a, q.t_b)?.eval(&q.r_a, &q.r_b)
}

/// The retarded Green function: the kernel forward in time, zero backward.
pub fn green_function(osc: &Oscillator, q: &KernelQuery) -> Result<ComplexAmplitude> {
    if q.t_b < q.t_a {
        osc.scenario.ensure_contains(q.t_a)?;
        osc.scenario.ensure_contains(q.t_b)?;
        return Ok(Complex64::new(0.0, 0.0));
    }
    kernel(osc, q)
}

/// Moves a one-dimensional packet from its own time to `t_b`.
pub fn propagate(osc: &Oscillator, packet: &WavePacket, t_b: f64) -> Result<WavePacket> {
    packet.check_edges(PROPAGATION_EDGE_TOLERANCE)?;
    KernelSlice::new(osc, packet.t, t_b)?.apply(packet)
}

/// L2 distance between `packet` and its propagation over `epsilon`.
///
/// For small `epsilon` the kernel is a narrow chirp, so the packet is first
/// resampled (by trigonometric interpolation) onto a grid that resolves it.
pub fn kernel_delta_check(osc: &Oscillator, packet: &WavePacket, epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0) {
        return Err(GhoError::InvalidArgument(format!("epsilon must be positive, got {epsilon}")));
    }
    packet.check_edges(PROPAGATION_EDGE_TOLERANCE)?;
    let slice = KernelSlice::new(osc, packet.t, packet.t + epsilon)?;
    let factor = (slice.phase_per_step(packet) / FRAC_PI_2).ceil().max(1.0) as usize;
    let moved = if factor == 1 {
        slice.apply(packet)?
    } else {
        let fine = packet.grid.refined(factor);
        let interp = packet.interpolator();
        let samples: Vec<Complex64> = fine.points().par_iter().map(|&x| interp.eval(x)).collect();
        let out = slice.apply(&WavePacket::new(fine, samples, packet.t)?)?;
        let coarse = out.samples.iter().step_by(factor).copied().collect();
        WavePacket::new(packet.grid, coarse, out.t)?
    };
    let moved = WavePacket { t: packet.t, ..moved };
    packet.distance(&moved)
}

/// `int K(t_c, x_c; t_b, y) K(t_b, y; t_a, x_a) dy` over `grid` (one dimension).
///
/// The integrand has constant modulus, so it is weighted by a smooth window
/// that is flat over the middle half of the grid.
pub fn compose(osc: &Oscillator, t_a: f64, x_a: f64, t_b: f64, t_c: f64, x_c: f64, grid: &GridSpec) -> Result<ComplexAmplitude> {
    if osc.scenario.dimension != 1 {
        return Err(GhoError::InvalidArgument("composition is one-dimensional".into()));
    }
    grid.validate()?;
    let first = KernelSlice::new(osc, t_a, t_b)?;
    let second = KernelSlice::new(osc, t_b, t_c)?;
    let (q1, q2) = (first.quadratic_phase(), second.quadratic_phase());
    let slope = |y: f64| (q1.slope_b(x_a, y) + q2.slope_a(y, x_c)).abs();
    let phase_per_step = slope(grid.x_min).max(slope(grid.x_max)) * grid.dx();
    if phase_per_step > PI {
        return Err(GhoError::GridUnderResolved { phase_per_step });
    }
    let window = taper_window(grid, COMPOSITION_TAPER);
    let weights = trapezoid_weights(grid);
    Ok(grid
        .points()
        .iter()
        .zip(window.iter().zip(&weights))
        .map(|(&y, (&w, &tw))| second.eval_1d(y, x_c) * first.eval_1d(x_a, y) * (w * tw))
        .sum())
}

/// A grid for [`compose`]: centred on the stationary point of the
/// integrand, at least `2 half_width` wide and wide enough for the
/// quadratic phase to reach [`COMPOSITION_EDGE_PHASE`] at the edges, with at
/// most `pi/4` of phase per step.
pub fn composition_grid(osc: &Oscillator, t_a: f64, x_a: f64, t_b: f64, t_c: f64, x_c: f64, half_width: f64) -> Result<GridSpec> {
    let q1 = KernelSlice::new(osc, t_a, t_b)?.quadratic_phase();
    let q2 = KernelSlice::new(osc, t_b, t_c)?.quadratic_phase();
    let curvature = 2.0 * (q1.alpha_b + q2.alpha_a);
    let offset = q1.beta_b - q1.gamma * x_a + q2.beta_a - q2.gamma * x_c;
    let centre = if curvature.abs() > 1e-8 { -offset / curvature } else { 0.5 * (x_a + x_c) };
    let half_width = half_width.max((2.0 * COMPOSITION_EDGE_PHASE / curvature.abs()).sqrt());
    if !half_width.is_finite() || half_width > 1e4 {
        return Err(GhoError::InvalidArgument(format!(
            "composition integrand curvature {curvature:e} is too flat for a finite grid"
        )));
    }
    let slope = |y: f64| (curvature * y + offset).abs();
    let (lo, hi) = (centre - half_width, centre + half_width);
    let steps = (2.0 * half_width * slope(lo).max(slope(hi)) / FRAC_PI_4).ceil() as usize;
    GridSpec::new(lo, hi, steps.max(64) + 1)
}
