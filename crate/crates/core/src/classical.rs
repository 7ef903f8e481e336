//! Classical solutions of `d/dt(M x') + M w^2 x = F`.
//!
//! Everything quantum in this crate is assembled from two homogeneous
//! solutions `u`, `v` and one particular solution `x_p`. They are integrated
//! in the first-order form `x' = pi / M`, `pi' = -M w^2 x (+ F)`, where
//! `pi = M x'` stays continuous across jumps of a piecewise mass. The phase
//! integrals `tau` and `xi` ride along as extra components.
//!
//! Integration constants: `tau(t0) = 0` and `xi(t0) = 0`. Both only shift a
//! global phase of the states built from them.

use crate::error::{GhoError, Result};
use crate::ode::{DenseTrajectory, SolverTolerance};
use crate::params::{BasisInit, CoefficientFn, ParticularInit, Scenario};

/// Homogeneous solutions `u`, `v` with the Wronskian constant `Omega`.
#[derive(Debug, Clone)]
pub struct ClassicalBasis {
    // [u, M u', v, M v', tau]
    traj: DenseTrajectory,
    mass: CoefficientFn,
    omega: f64,
    init: BasisInit,
    tol: SolverTolerance,
}

/// The basis evaluated at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisPoint {
    pub t: f64,
    pub mass: f64,
    pub u: f64,
    pub u_dot: f64,
    pub v: f64,
    pub v_dot: f64,
    pub tau: f64,
}

impl BasisPoint {
    /// `sqrt(u^2 + v^2)` and its time derivative.
    pub fn rho(&self) -> Result<RhoValue> {
        let rho = self.u.hypot(self.v);
        if rho == 0.0 {
            return Err(GhoError::ZeroRho(self.t));
        }
        Ok(RhoValue {
            rho,
            rho_dot: (self.u * self.u_dot + self.v * self.v_dot) / rho,
        })
    }

    pub fn wronskian(&self) -> f64 {
        self.mass * (self.u * self.v_dot - self.v * self.u_dot)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhoValue {
    pub rho: f64,
    pub rho_dot: f64,
}

/// The driven solution `x_p` with the phase integrals that accompany it.
#[derive(Debug, Clone)]
pub struct ParticularSolution {
    // [x_p, M x_p', xi, int f]
    traj: DenseTrajectory,
    mass: CoefficientFn,
    init: ParticularInit,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParticularPoint {
    pub t: f64,
    pub x: f64,
    pub x_dot: f64,
    /// Summed over all dimensions, so it enters phases directly.
    pub xi: f64,
    /// `int_{t0}^{t} f(z) dz`
    pub f_integral: f64,
}

fn check_span(traj: &DenseTrajectory, t: f64) -> Result<()> {
    let (t0, t1) = traj.span();
    let slack = 1e-12 * (1.0 + t0.abs().max(t1.abs()));
    if t >= t0 - slack && t <= t1 + slack && t.is_finite() {
        Ok(())
    } else {
        Err(GhoError::OutOfInterval { t, t0, t1 })
    }
}

impl ClassicalBasis {
    pub fn solve(s: &Scenario, init: BasisInit) -> Result<Self> {
        Self::solve_with(s, init, SolverTolerance::default())
    }

    pub fn solve_with(s: &Scenario, init: BasisInit, tol: SolverTolerance) -> Result<Self> {
        let t0 = s.t0();
        let m0 = s.mass.value(t0);
        let omega = m0 * (init.u0 * init.v_dot0 - init.v0 * init.u_dot0);
        let scale = m0 * (init.u0 * init.v_dot0).abs().max((init.v0 * init.u_dot0).abs());
        if omega == 0.0 || omega.abs() <= 1e-14 * scale || !omega.is_finite() {
            return Err(GhoError::DegenerateBasis(omega));
        }
        let y0 = [init.u0, m0 * init.u_dot0, init.v0, m0 * init.v_dot0, 0.0];
        let mass = &s.mass;
        let frequency = &s.frequency;
        let traj = DenseTrajectory::integrate(
            |t, start, y, dy| {
                let m = mass.eval_on_segment(t, start).0;
                let w = frequency.eval_on_segment(t, start).0;
                let k = m * w * w;
                dy[0] = y[1] / m;
                dy[1] = -k * y[0];
                dy[2] = y[3] / m;
                dy[3] = -k * y[2];
                dy[4] = omega / (m * (y[0] * y[0] + y[2] * y[2]));
            },
            t0,
            s.t1(),
            &y0,
            &s.breakpoints(),
            tol,
        )?;
        s.check_mass(traj.nodes().iter().copied())?;
        Ok(ClassicalBasis {
            traj,
            mass: s.mass.clone(),
            omega,
            init,
            tol,
        })
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn init(&self) -> BasisInit {
        self.init
    }

    pub fn tolerance(&self) -> SolverTolerance {
        self.tol
    }

    pub fn span(&self) -> (f64, f64) {
        self.traj.span()
    }

    /// Solver nodes, ascending.
    pub fn nodes(&self) -> &[f64] {
        self.traj.nodes()
    }

    /// `arg(u - i v)` at `t0`; the phase of `u - i v` is this minus `tau`.
    pub fn initial_phase(&self) -> f64 {
        (-self.init.v0).atan2(self.init.u0)
    }

    pub fn at(&self, t: f64) -> Result<BasisPoint> {
        check_span(&self.traj, t)?;
        let mut y = [0.0; 5];
        self.traj.eval_into(t, &mut y);
        let m = self.mass.value(t);
        Ok(BasisPoint {
            t,
            mass: m,
            u: y[0],
            u_dot: y[1] / m,
            v: y[2],
            v_dot: y[3] / m,
            tau: y[4],
        })
    }

    /// Largest `|W(t) - Omega| / |Omega|` over the solver nodes.
    pub fn wronskian_drift(&self) -> f64 {
        self.traj
            .node_states()
            .iter()
            .map(|y| ((y[0] * y[3] - y[2] * y[1]) - self.omega).abs() / self.omega.abs())
            .fold(0.0, f64::max)
    }

    /// `v(t) u(t_a) - u(t) v(t_a)`, the denominator of the kernel prefactor.
    pub(crate) fn caustic_function(&self, t_a: &BasisPoint, t: f64) -> Result<f64> {
        let p = self.at(t)?;
        Ok(p.v * t_a.u - p.u * t_a.v)
    }
}

impl ParticularSolution {
    pub fn solve(s: &Scenario, init: ParticularInit) -> Result<Self> {
        Self::solve_with(s, init, SolverTolerance::default())
    }

    pub fn solve_with(s: &Scenario, init: ParticularInit, tol: SolverTolerance) -> Result<Self> {
        let t0 = s.t0();
        let m0 = s.mass.value(t0);
        let y0 = [init.x0, m0 * init.x_dot0, 0.0, 0.0];
        let n = s.dimension as f64;
        let (mass, frequency, force, f) = (&s.mass, &s.frequency, &s.force, &s.f);
        let traj = DenseTrajectory::integrate(
            |t, start, y, dy| {
                let m = mass.eval_on_segment(t, start).0;
                let w = frequency.eval_on_segment(t, start).0;
                let x_dot = y[1] / m;
                dy[0] = x_dot;
                dy[1] = -m * w * w * y[0] + force.eval_on_segment(t, start).0;
                dy[2] = n * 0.5 * m * (w * w * y[0] * y[0] - x_dot * x_dot);
                dy[3] = f.eval_on_segment(t, start).0;
            },
            t0,
            s.t1(),
            &y0,
            &s.breakpoints(),
            tol,
        )?;
        s.check_mass(traj.nodes().iter().copied())?;
        Ok(ParticularSolution {
            traj,
            mass: s.mass.clone(),
            init,
        })
    }

    pub fn init(&self) -> ParticularInit {
        self.init
    }

    pub fn nodes(&self) -> &[f64] {
        self.traj.nodes()
    }

    pub fn at(&self, t: f64) -> Result<ParticularPoint> {
        check_span(&self.traj, t)?;
        let mut y = [0.0; 4];
        self.traj.eval_into(t, &mut y);
        Ok(ParticularPoint {
            t,
            x: y[0],
            x_dot: y[1] / self.mass.value(t),
            xi: y[2],
            f_integral: y[3],
        })
    }
}

pub fn solve_homogeneous_basis(s: &Scenario, init: BasisInit) -> Result<ClassicalBasis> {
    ClassicalBasis::solve(s, init)
}

pub fn solve_particular(s: &Scenario, init: ParticularInit) -> Result<ParticularSolution> {
    ParticularSolution::solve(s, init)
}

/// A scenario together with the classical solutions that describe it.
#[derive(Debug, Clone)]
pub struct Oscillator {
    pub scenario: Scenario,
    pub basis: ClassicalBasis,
    pub particular: ParticularSolution,
}

impl Oscillator {
    /// Solves with the scenario's own initial data, or the defaults.
    pub fn solve(scenario: &Scenario) -> Result<Self> {
        Self::solve_with(scenario, SolverTolerance::default())
    }

    pub fn solve_with(scenario: &Scenario, tol: SolverTolerance) -> Result<Self> {
        let basis = scenario.basis.unwrap_or_else(|| BasisInit::default_for(scenario));
        let particular = scenario.particular.unwrap_or_default();
        Self::with_initial_data(scenario, basis, particular, tol)
    }

    pub fn with_initial_data(
        scenario: &Scenario,
        basis: BasisInit,
        particular: ParticularInit,
        tol: SolverTolerance,
    ) -> Result<Self> {
        scenario.validate()?;
        Ok(Oscillator {
            scenario: scenario.clone(),
            basis: ClassicalBasis::solve_with(scenario, basis, tol)?,
            particular: ParticularSolution::solve_with(scenario, particular, tol)?,
        })
    }

    pub fn hbar(&self) -> f64 {
        self.scenario.hbar
    }

    pub fn mass(&self, t: f64) -> f64 {
        self.scenario.mass.value(t)
    }

    pub fn wronskian(&self, t: f64) -> Result<f64> {
        self.scenario.ensure_contains(t)?;
        Ok(self.basis.at(t)?.wronskian())
    }

    pub fn rho(&self, t: f64) -> Result<RhoValue> {
        self.basis.at(t)?.rho()
    }

    pub fn tau(&self, t: f64) -> Result<f64> {
        Ok(self.basis.at(t)?.tau)
    }

    /// The Lewis invariant of a classical phase-space point `(x, p)` at `t`.
    pub fn classical_invariant(&self, x: f64, p: f64, t: f64) -> Result<f64> {
        let b = self.basis.at(t)?;
        let xp = self.particular.at(t)?;
        let RhoValue { rho, rho_dot } = b.rho()?;
        let omega = self.basis.omega();
        let dx = x - xp.x;
        let dp = p - b.mass * xp.x_dot;
        let cross = b.mass * rho_dot * dx - rho * dp;
        Ok((omega * omega / (rho * rho) * dx * dx + cross * cross) / (2.0 * omega))
    }
}

pub fn wronskian(osc: &Oscillator, t: f64) -> Result<f64> {
    osc.wronskian(t)
}

pub fn rho(basis: &ClassicalBasis, t: f64) -> Result<RhoValue> {
    basis.at(t)?.rho()
}

pub fn tau_map(basis: &ClassicalBasis, t: f64) -> Result<f64> {
    Ok(basis.at(t)?.tau)
}

pub fn classical_invariant(osc: &Oscillator, x: f64, p: f64, t: f64) -> Result<f64> {
    osc.classical_invariant(x, p, t)
}

/// One row of the trajectory export.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRow {
    pub t: f64,
    pub u: f64,
    pub u_dot: f64,
    pub v: f64,
    pub v_dot: f64,
    pub x_p: f64,
    pub x_p_dot: f64,
    pub xi: f64,
    pub rho: f64,
    pub rho_dot: f64,
    pub tau: f64,
}

pub fn trajectory_rows(osc: &Oscillator, times: &[f64]) -> Result<Vec<TrajectoryRow>> {
    times
        .iter()
        .map(|&t| {
            let b = osc.basis.at(t)?;
            let p = osc.particular.at(t)?;
            let r = b.rho()?;
            Ok(TrajectoryRow {
                t,
                u: b.u,
                u_dot: b.u_dot,
                v: b.v,
                v_dot: b.v_dot,
                x_p: p.x,
                x_p_dot: p.x_dot,
                xi: p.xi,
                rho: r.rho,
                rho_dot: r.rho_dot,
                tau: b.tau,
            })
        })
        .collect()
}
