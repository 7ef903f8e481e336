//! Eigenmodes, the maps `U_F` and `U_S`, coherent/squeezed states and the
//! quantum invariant.
//!
//! In one dimension, with `X = x - x_p`, `y = sqrt(Omega/hbar) X / rho` and
//! `theta(t) = arg(u - i v)` continued from `t0`,
//!
//! ```text
//! psi_n = (Omega / (pi hbar rho^2))^(1/4) e^{-y^2/2} H_n(y) / sqrt(2^n n!)
//!         exp(i M rho' X^2 / (2 hbar rho)) exp(i/hbar (xi + int f + M a x^2 + (b + M x_p') x))
//!         e^{i (n + 1/2) theta}
//! ```
//!
//! The eigenmodes need `Omega > 0`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::classical::{BasisPoint, Oscillator, ParticularPoint, RhoValue};
use crate::error::{GhoError, Result};
use crate::grid::{first_derivative, second_derivative, GridSpec, WavePacket, EDGE_TOLERANCE};
use crate::propagator::{ComplexAmplitude, KernelQuery};

/// Largest Hermite degree accepted by [`hermite`].
pub const MAX_HERMITE_DEGREE: usize = 200;

/// Physicists' Hermite polynomial `H_n(y)`.
///
/// # Panics
/// If `n > MAX_HERMITE_DEGREE`.
pub fn hermite(n: usize, y: f64) -> f64 {
    assert!(n <= MAX_HERMITE_DEGREE, "Hermite degree {n} exceeds {MAX_HERMITE_DEGREE}");
    let (mut prev, mut cur) = (0.0, 1.0);
    for k in 0..n {
        let next = 2.0 * y * cur - 2.0 * k as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// `H_k(y) e^{-y^2/2} / sqrt(2^k k!)` for `k = 0..=n_max`.
///
/// The recurrence is run on normalized polynomials with a running log-scale,
/// so nothing overflows before the Gaussian is applied.
pub fn hermite_functions(n_max: usize, y: f64) -> Vec<f64> {
    const BIG: f64 = 1e150;
    let mut out = Vec::with_capacity(n_max + 1);
    let mut log_scale = -0.5 * y * y;
    let (mut prev, mut cur) = (0.0, 1.0);
    out.push(log_scale.exp());
    for k in 0..n_max {
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * y * cur - (kf / (kf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
        if cur.abs() > BIG {
            prev /= BIG;
            cur /= BIG;
            log_scale += BIG.ln();
        }
        out.push(cur * log_scale.exp());
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantumNumbers {
    pub n: Vec<usize>,
}

impl QuantumNumbers {
    pub fn new(n: impl Into<Vec<usize>>) -> Self {
        QuantumNumbers { n: n.into() }
    }

    pub fn scalar(n: usize) -> Self {
        QuantumNumbers { n: vec![n] }
    }

    pub fn dimension(&self) -> usize {
        self.n.len()
    }
}

/// Time-dependent data shared by every eigenmode at one instant.
#[derive(Debug, Clone, Copy)]
struct ModeFrame {
    hbar: f64,
    omega: f64,
    mass: f64,
    a: f64,
    b: f64,
    rho: RhoValue,
    theta: f64,
    point: ParticularPoint,
}

impl ModeFrame {
    fn new(osc: &Oscillator, t: f64) -> Result<Self> {
        osc.scenario.ensure_contains(t)?;
        let omega = osc.basis.omega();
        if omega <= 0.0 {
            return Err(GhoError::InvalidArgument(format!(
                "eigenmodes need a positive Wronskian, got {omega}"
            )));
        }
        let bp: BasisPoint = osc.basis.at(t)?;
        Ok(ModeFrame {
            hbar: osc.hbar(),
            omega,
            mass: bp.mass,
            a: osc.scenario.a.value(t),
            b: osc.scenario.b.value(t),
            rho: bp.rho()?,
            theta: osc.basis.initial_phase() - bp.tau,
            point: osc.particular.at(t)?,
        })
    }

    /// Scaled coordinate `y` for position `x`.
    fn y(&self, x: f64) -> f64 {
        (self.omega / self.hbar).sqrt() * (x - self.point.x) / self.rho.rho
    }

    /// Everything in one coordinate factor except the Hermite function and `e^{i(n+1/2)theta}`.
    fn envelope(&self, x: f64) -> Complex64 {
        let RhoValue { rho, rho_dot } = self.rho;
        let dx = x - self.point.x;
        let norm = (self.omega / (std::f64::consts::PI * self.hbar * rho * rho)).powf(0.25);
        let phase = (self.mass * rho_dot * dx * dx / (2.0 * rho)
            + self.mass * self.a * x * x
            + (self.b + self.mass * self.point.x_dot) * x)
            / self.hbar;
        Complex64::from_polar(norm, phase)
    }

    /// The phase factor counted once per state, not per coordinate.
    fn global(&self) -> Complex64 {
        Complex64::from_polar(1.0, (self.point.xi + self.point.f_integral) / self.hbar)
    }

    fn level(&self, n: usize) -> Complex64 {
        Complex64::from_polar(1.0, (n as f64 + 0.5) * self.theta)
    }

    fn mode_1d(&self, n: usize, x: f64) -> Complex64 {
        self.envelope(x) * hermite_functions(n, self.y(x))[n] * self.level(n)
    }
}

pub fn eigenmode(osc: &Oscillator, qn: &QuantumNumbers, t: f64, r: &[f64]) -> Result<ComplexAmplitude> {
    let dim = osc.scenario.dimension;
    if qn.dimension() != dim || r.len() != dim {
        return Err(GhoError::InvalidArgument(format!(
            "scenario has dimension {dim}, got {} quantum numbers and {} coordinates",
            qn.dimension(),
            r.len()
        )));
    }
    let frame = ModeFrame::new(osc, t)?;
    Ok(qn
        .n
        .iter()
        .zip(r)
        .fold(frame.global(), |acc, (&n, &x)| acc * frame.mode_1d(n, x)))
}

/// The one-dimensional eigenmode `psi_n(t, .)` sampled on `grid`.
pub fn eigenmode_packet(osc: &Oscillator, n: usize, t: f64, grid: GridSpec) -> Result<WavePacket> {
    require_1d(osc)?;
    grid.validate()?;
    let frame = ModeFrame::new(osc, t)?;
    let global = frame.global() * frame.level(n);
    let samples = grid
        .points()
        .par_iter()
        .map(|&x| global * frame.envelope(x) * hermite_functions(n, frame.y(x))[n])
        .collect();
    WavePacket::new(grid, samples, t)
}

/// `sum_{n <= n_max} psi_n(b) psi_n(a)^*`, with every coordinate summed up to `n_max`.
pub fn mode_sum_kernel(osc: &Oscillator, n_max: usize, q: &KernelQuery) -> Result<ComplexAmplitude> {
    let dim = osc.scenario.dimension;
    if q.r_a.len() != dim || q.r_b.len() != dim {
        return Err(GhoError::InvalidArgument(format!("kernel positions must have length {dim}")));
    }
    let fa = ModeFrame::new(osc, q.t_a)?;
    let fb = ModeFrame::new(osc, q.t_b)?;
    let step = Complex64::from_polar(1.0, fb.theta - fa.theta);
    let mut total = fb.global() * fa.global().conj();
    for (&xa, &xb) in q.r_a.iter().zip(&q.r_b) {
        let ha = hermite_functions(n_max, fa.y(xa));
        let hb = hermite_functions(n_max, fb.y(xb));
        let mut phasor = Complex64::from_polar(1.0, 0.5 * (fb.theta - fa.theta));
        let mut sum = Complex64::new(0.0, 0.0);
        for (ya, yb) in ha.iter().zip(&hb) {
            sum += phasor * (ya * yb);
            phasor *= step;
        }
        total *= fb.envelope(xb) * fa.envelope(xa).conj() * sum;
    }
    Ok(total)
}

/// Propagates a packet through the truncated mode expansion:
/// `sum_{n <= n_max} psi_n(t_b) <psi_n(t_a) | packet>`.
pub fn mode_sum_propagate(osc: &Oscillator, packet: &WavePacket, t_b: f64, n_max: usize) -> Result<WavePacket> {
    require_1d(osc)?;
    packet.check_edges(EDGE_TOLERANCE)?;
    let grid = packet.grid;
    let modes_a = (0..=n_max)
        .map(|n| eigenmode_packet(osc, n, packet.t, grid))
        .collect::<Result<Vec<_>>>()?;
    let coefficients = modes_a
        .iter()
        .map(|m| m.inner(packet))
        .collect::<Result<Vec<_>>>()?;
    let mut samples = vec![Complex64::new(0.0, 0.0); grid.n_points];
    for (n, c) in coefficients.iter().enumerate() {
        let mode = eigenmode_packet(osc, n, t_b, grid)?;
        for (s, m) in samples.iter_mut().zip(&mode.samples) {
            *s += c * m;
        }
    }
    WavePacket::new(grid, samples, t_b)
}

/// The `n`-th eigenstate of `p^2/2 + x^2/2`, normalized on `grid`.
pub fn sho_eigenstate(n: usize, grid: GridSpec, hbar: f64) -> Result<WavePacket> {
    grid.validate()?;
    // at least 8 points per oscillation near the centre
    let phase_per_step = ((2 * n + 1) as f64 / hbar).sqrt() * grid.dx();
    if phase_per_step > std::f64::consts::PI / 4.0 {
        return Err(GhoError::GridUnderResolved { phase_per_step });
    }
    let norm = (std::f64::consts::PI * hbar).powf(-0.25);
    let packet = WavePacket::from_fn(grid, 0.0, |x| {
        Complex64::new(norm * hermite_functions(n, x / hbar.sqrt())[n], 0.0)
    });
    packet.check_edges(EDGE_TOLERANCE)?;
    Ok(packet)
}

fn require_1d(osc: &Oscillator) -> Result<()> {
    if osc.scenario.dimension != 1 {
        return Err(GhoError::InvalidArgument(
            "grid states are one-dimensional; use eigenmode() for N > 1".into(),
        ));
    }
    Ok(())
}

/// Samples `f(x)` for every grid point, where `f` is built from the
/// band-limited interpolant of `packet`, and checks that nothing was lost.
fn remap(packet: &WavePacket, t: f64, f: impl Fn(&dyn Fn(f64) -> Complex64, f64) -> Complex64 + Sync) -> Result<WavePacket> {
    packet.check_edges(EDGE_TOLERANCE)?;
    let interp = packet.interpolator();
    let source = |x: f64| interp.eval(x);
    let samples = packet.grid.points().par_iter().map(|&x| f(&source, x)).collect();
    let out = WavePacket::new(packet.grid, samples, t)?;
    let (before, after) = (packet.norm(), out.norm());
    let lost = (after - before).abs() / before.max(f64::MIN_POSITIVE);
    if lost > 1e-6 {
        return Err(GhoError::GridTooNarrow {
            edge_ratio: lost,
            threshold: 1e-6,
        });
    }
    out.check_edges(EDGE_TOLERANCE)?;
    Ok(out)
}

/// `(U_F psi)(x) = e^{i xi/hbar} e^{i M x_p' x / hbar} psi(x - x_p)`.
pub fn apply_u_f(packet: &WavePacket, osc: &Oscillator, t: f64) -> Result<WavePacket> {
    require_1d(osc)?;
    let p = osc.particular.at(t)?;
    let hbar = osc.hbar();
    let k = osc.mass(t) * p.x_dot / hbar;
    let phase0 = p.xi / hbar;
    remap(packet, t, |psi, x| Complex64::from_polar(1.0, phase0 + k * x) * psi(x - p.x))
}

/// `(U_S psi)(x) = e^{i M rho' x^2 / (2 hbar rho)} (Omega/rho^2)^(1/4) psi(sqrt(Omega/rho^2) x)`.
pub fn apply_u_s(packet: &WavePacket, osc: &Oscillator, t: f64) -> Result<WavePacket> {
    require_1d(osc)?;
    let omega = osc.basis.omega();
    if omega <= 0.0 {
        return Err(GhoError::InvalidArgument(format!("U_S needs a positive Wronskian, got {omega}")));
    }
    let RhoValue { rho, rho_dot } = osc.rho(t)?;
    let chirp = osc.mass(t) * rho_dot / (2.0 * osc.hbar() * rho);
    let scale = omega.sqrt() / rho;
    let amp = scale.sqrt();
    remap(packet, t, |psi, x| Complex64::from_polar(amp, chirp * x * x) * psi(scale * x))
}

/// `((u - i v)/rho)^{n+1/2} U_F U_S phi_n`, times the gauge factor
/// `exp(i/hbar (M a x^2 + b x + int f))` of the scenario.
pub fn build_generalized_coherent_state(osc: &Oscillator, n: usize, t: f64, grid: GridSpec) -> Result<WavePacket> {
    require_1d(osc)?;
    let frame = ModeFrame::new(osc, t)?;
    let phi = sho_eigenstate(n, grid, frame.hbar)?;
    let squeezed = apply_u_s(&phi, osc, t)?;
    let moved = apply_u_f(&squeezed, osc, t)?;
    let level = frame.level(n);
    let hbar = frame.hbar;
    let samples = moved
        .points()
        .iter()
        .zip(&moved.samples)
        .map(|(&x, s)| {
            let gauge = (frame.mass * frame.a * x * x + frame.b * x + frame.point.f_integral) / hbar;
            s * level * Complex64::from_polar(1.0, gauge)
        })
        .collect();
    WavePacket::new(grid, samples, t)
}

/// `<psi|I|psi> / <psi|psi>` and the imaginary part of the numerator, which
/// should vanish.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvariantValue {
    pub value: f64,
    pub imaginary: f64,
}

/// Expectation of
/// `I = [ (Omega^2/rho^2 + M^2 rho'^2) X^2 - M rho rho' (X P + P X) + rho^2 P^2 ] / (2 Omega)`
/// with `X = x - x_p`, `P = p - M x_p'`, taken after removing the gauge
/// factor `exp(i/hbar (M a x^2 + b x))` from the packet.
pub fn invariant_expectation(packet: &WavePacket, osc: &Oscillator) -> Result<InvariantValue> {
    require_1d(osc)?;
    packet.check_edges(EDGE_TOLERANCE)?;
    let t = packet.t;
    let hbar = osc.hbar();
    let omega = osc.basis.omega();
    let m = osc.mass(t);
    let (a, b) = (osc.scenario.a.value(t), osc.scenario.b.value(t));
    let RhoValue { rho, rho_dot } = osc.rho(t)?;
    let p = osc.particular.at(t)?;
    let k = m * p.x_dot;

    let xs = packet.points();
    let phi: Vec<Complex64> = xs
        .iter()
        .zip(&packet.samples)
        .map(|(&x, s)| s * Complex64::from_polar(1.0, -(m * a * x * x + b * x) / hbar))
        .collect();
    let d1 = first_derivative(&phi, packet.grid.dx());
    let d2 = second_derivative(&phi, packet.grid.dx());
    let i = Complex64::i();
    let cxx = omega * omega / (rho * rho) + m * m * rho_dot * rho_dot;
    let cxp = m * rho * rho_dot;
    let cpp = rho * rho;

    let integrand: Vec<Complex64> = (0..xs.len())
        .map(|j| {
            let dx = xs[j] - p.x;
            let (f, f1, f2) = (phi[j], d1[j], d2[j]);
            let x2 = f * dx * dx;
            let sym = -2.0 * i * hbar * dx * f1 - i * hbar * f - 2.0 * k * dx * f;
            let p2 = -hbar * hbar * f2 + 2.0 * i * hbar * k * f1 + k * k * f;
            f.conj() * (cxx * x2 - cxp * sym + cpp * p2) / (2.0 * omega)
        })
        .collect();
    let num = packet.grid.integrate(&integrand);
    let den = packet.norm_sqr();
    Ok(InvariantValue {
        value: num.re / den,
        imaginary: num.im / den,
    })
}
