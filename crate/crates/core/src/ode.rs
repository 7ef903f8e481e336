//! Dense-output integration of small first-order systems.
//!
//! Wraps the DOP853 integrator of the `ivp` crate. Every accepted step is
//! kept as an interpolating segment so trajectories can be evaluated at any
//! time with the 7th-order continuous extension. Integration restarts at
//! coefficient breakpoints so no step straddles a discontinuity.

use ivp::dense::{DenseSegment, StepInterpolant};
use ivp::ivp::FirstOrderSystem;
use ivp::methods::DOP853;
use ivp::solout::{ControlFlag, SolOut};

use crate::error::{GhoError, Result};

/// Relative and absolute error tolerances of the classical solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverTolerance {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for SolverTolerance {
    fn default() -> Self {
        SolverTolerance { rtol: 1e-10, atol: 1e-12 }
    }
}

impl SolverTolerance {
    /// Tight setting for closed-form comparisons at the 1e-10 level.
    pub fn precise() -> Self {
        SolverTolerance { rtol: 1e-14, atol: 1e-16 }
    }
}

struct FnSystem<'a, F> {
    rhs: &'a F,
    segment_start: f64,
}

impl<F> FirstOrderSystem for FnSystem<'_, F>
where
    F: Fn(f64, f64, &[f64], &mut [f64]),
{
    fn derivative(&self, x: f64, y: &[f64], dydx: &mut [f64]) {
        (self.rhs)(x, self.segment_start, y, dydx)
    }
}

#[derive(Default)]
struct Collector {
    segments: Vec<DenseSegment>,
    nodes: Vec<f64>,
    states: Vec<Vec<f64>>,
}

impl SolOut for Collector {
    fn solout(
        &mut self,
        xold: f64,
        x: &mut f64,
        y: &mut [f64],
        interpolant: Option<&StepInterpolant<'_>>,
    ) -> ControlFlag {
        match interpolant {
            Some(step) => {
                self.segments.push(step.to_segment());
                self.nodes.push(*x);
                self.states.push(y.to_vec());
            }
            None if self.nodes.is_empty() => {
                self.nodes.push(xold);
                self.states.push(y.to_vec());
            }
            None => {}
        }
        ControlFlag::Continue
    }
}

/// A piecewise-interpolated solution over `[t_start, t_end]`.
#[derive(Debug, Clone)]
pub struct DenseTrajectory {
    dim: usize,
    /// Left endpoint of every segment, ascending.
    lefts: Vec<f64>,
    segments: Vec<DenseSegment>,
    nodes: Vec<f64>,
    states: Vec<Vec<f64>>,
}

impl DenseTrajectory {
    /// Integrates `y' = rhs(t, segment_start, y)` forward from `t_start` to
    /// `t_end`, restarting at each of `breakpoints` that lies strictly inside.
    /// `segment_start` is the left end of the breakpoint-free piece being
    /// integrated, so discontinuous coefficients can select their piece
    /// without looking at `t` (the last stage of a step sits on the boundary).
    pub fn integrate<F>(
        rhs: F,
        t_start: f64,
        t_end: f64,
        y0: &[f64],
        breakpoints: &[f64],
        tol: SolverTolerance,
    ) -> Result<Self>
    where
        F: Fn(f64, f64, &[f64], &mut [f64]),
    {
        if !(t_end > t_start) {
            return Err(GhoError::InvalidArgument(format!(
                "integration interval [{t_start}, {t_end}] is empty"
            )));
        }
        let solver = DOP853 {
            max_steps: 1_000_000,
            ..DOP853::default()
        };
        let mut stops: Vec<f64> = breakpoints.iter().copied().filter(|&b| b > t_start && b < t_end).collect();
        stops.push(t_end);

        let mut out = DenseTrajectory {
            dim: y0.len(),
            lefts: Vec::new(),
            segments: Vec::new(),
            nodes: vec![t_start],
            states: vec![y0.to_vec()],
        };
        let mut left = t_start;
        let mut y = y0.to_vec();
        for stop in stops {
            let mut collector = Collector::default();
            let system = FnSystem {
                rhs: &rhs,
                segment_start: left,
            };
            let result = solver
                .solve(&system, left, &y, stop, tol.rtol.into(), tol.atol.into(), Some(&mut collector))
                .map_err(|e| GhoError::IntegrationFailure(format!("{e:?}")))?;
            if !result.is_ok() {
                return Err(GhoError::IntegrationFailure(format!(
                    "solver stopped with status {:?} on [{left}, {stop}]",
                    result.status
                )));
            }
            let last = collector
                .states
                .last()
                .cloned()
                .ok_or_else(|| GhoError::IntegrationFailure("solver produced no steps".into()))?;
            if last.iter().any(|v| !v.is_finite()) {
                return Err(GhoError::IntegrationFailure(format!("non-finite state near t = {stop}")));
            }
            for seg in collector.segments {
                out.lefts.push(seg.bounds().0);
                out.segments.push(seg);
            }
            // The collector's first node duplicates the restart point.
            out.nodes.extend(collector.nodes.into_iter().skip(1));
            out.states.extend(collector.states.into_iter().skip(1));
            y = last;
            left = stop;
        }
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn span(&self) -> (f64, f64) {
        (self.nodes[0], *self.nodes.last().unwrap())
    }

    /// Accepted step boundaries, ascending, including both ends.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Solver states at [`Self::nodes`].
    pub fn node_states(&self) -> &[Vec<f64>] {
        &self.states
    }

    /// Interpolated state at `t`; at a segment boundary the later segment is used.
    pub fn eval_into(&self, t: f64, out: &mut [f64]) {
        let k = self.lefts.partition_point(|&l| l <= t).saturating_sub(1);
        self.segments[k].interpolate(t, out);
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.eval_into(t, &mut out);
        out
    }
}
