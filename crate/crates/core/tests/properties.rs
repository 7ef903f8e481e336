//! Randomized invariants across scenarios.

use gho_core::classical::Oscillator;
use gho_core::error::GhoError;
use gho_core::grid::{GridSpec, WavePacket};
use gho_core::ode::SolverTolerance;
use gho_core::params::{BasisInit, CoefficientFn, ParticularInit, Scenario};
use gho_core::propagator::{kernel, propagate, KernelQuery};
use gho_core::states::{apply_u_f, apply_u_s, sho_eigenstate};
use proptest::prelude::*;

/// Positive, slowly varying coefficient: sinusoidal or exponential.
fn positive_coefficient() -> impl Strategy<Value = CoefficientFn> {
    prop_oneof![
        (0.8..1.5f64, 0.0..0.3f64, 0.5..3.0f64, 0.0..6.3f64)
            .prop_map(|(offset, amp, w, phase)| CoefficientFn::sinusoidal(amp, w, phase, offset)),
        (0.7..1.4f64, -0.15..0.15f64).prop_map(|(a, r)| CoefficientFn::exponential(a, r)),
    ]
}

fn scenario() -> impl Strategy<Value = Scenario> {
    (
        positive_coefficient(),
        positive_coefficient(),
        -0.5..0.5f64,
        -1.0..1.0f64,
        -0.5..0.5f64,
    )
        .prop_map(|(mass, frequency, f0, x0, v0)| {
            let mut s = Scenario::sho(0.0, 4.0);
            s.mass = mass;
            s.frequency = frequency;
            s.force = CoefficientFn::sinusoidal(f0, 0.9, 0.0, 0.0);
            s.particular = Some(ParticularInit::new(x0, v0));
            s
        })
}

fn solve(s: &Scenario) -> Oscillator {
    Oscillator::solve_with(s, SolverTolerance::precise()).unwrap()
}

fn grid_points(n: usize, t1: f64) -> impl Iterator<Item = f64> {
    (0..=n).map(move |k| t1 * k as f64 / n as f64)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn wronskian_is_constant(s in scenario()) {
        let osc = Oscillator::solve(&s).unwrap();
        let omega = osc.basis.omega();
        for t in grid_points(200, 4.0) {
            prop_assert!((osc.wronskian(t).unwrap() - omega).abs() / omega.abs() < 1e-6);
        }
    }

    #[test]
    fn basis_solves_the_classical_equation(s in scenario(), ts in prop::collection::vec(0.01..3.99f64, 20)) {
        let osc = Oscillator::solve(&s).unwrap();
        let h = 1e-4;
        let momentum = |t: f64| {
            let b = osc.basis.at(t).unwrap();
            (b.mass * b.u_dot, b.mass * b.v_dot)
        };
        for t in ts {
            let b = osc.basis.at(t).unwrap();
            let (m, w) = (s.mass.value(t), s.frequency.value(t));
            let (pu1, pv1) = momentum(t + h);
            let (pu0, pv0) = momentum(t - h);
            let scale = (m * w * w * b.u).abs().max((m * w * w * b.v).abs()).max(1e-3);
            prop_assert!(((pu1 - pu0) / (2.0 * h) + m * w * w * b.u).abs() / scale < 1e-6);
            prop_assert!(((pv1 - pv0) / (2.0 * h) + m * w * w * b.v).abs() / scale < 1e-6);
        }
    }

    #[test]
    fn xi_is_the_lagrangian_integral(s in scenario(), t in 0.01..3.99f64) {
        let osc = Oscillator::solve(&s).unwrap();
        let h = 1e-4;
        let (m, w) = (s.mass.value(t), s.frequency.value(t));
        let p = osc.particular.at(t).unwrap();
        let fd = (osc.particular.at(t + h).unwrap().xi - osc.particular.at(t - h).unwrap().xi) / (2.0 * h);
        let exact = 0.5 * m * (w * w * p.x * p.x - p.x_dot * p.x_dot);
        prop_assert!((fd - exact).abs() <= 1e-5 * exact.abs().max(1e-3));
    }

    #[test]
    fn tau_increases(s in scenario()) {
        let osc = Oscillator::solve(&s).unwrap();
        let taus: Vec<f64> = osc.basis.nodes().iter().map(|&t| osc.tau(t).unwrap()).collect();
        prop_assert!(taus.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn classical_invariant_is_conserved(s in scenario(), c1 in -1.0..1.0f64, c2 in -1.0..1.0f64) {
        let osc = Oscillator::solve(&s).unwrap();
        let values: Vec<f64> = grid_points(100, 4.0).map(|t| {
            let b = osc.basis.at(t).unwrap();
            let p = osc.particular.at(t).unwrap();
            let x = p.x + c1 * b.u + c2 * b.v;
            let x_dot = p.x_dot + c1 * b.u_dot + c2 * b.v_dot;
            osc.classical_invariant(x, b.mass * x_dot, t).unwrap()
        }).collect();
        let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
        prop_assert!(hi - lo <= 1e-6 * values[0].abs().max(1e-9));
    }

    #[test]
    fn conjugation_symmetry(s in scenario(), ta in 0.0..4.0f64, tb in 0.0..4.0f64, xa in -3.0..3.0f64, xb in -3.0..3.0f64) {
        let osc = solve(&s);
        let q = KernelQuery::scalar(ta, xa, tb, xb);
        match (kernel(&osc, &q), kernel(&osc, &q.swapped())) {
            (Ok(k), Ok(back)) => prop_assert!((back - k.conj()).norm() <= 1e-12 * k.norm()),
            (Err(GhoError::CausticEncountered { .. } | GhoError::InvalidArgument(_)), _) => {}
            (a, b) => prop_assert!(false, "{a:?} {b:?}"),
        }
    }

    #[test]
    fn kernel_ignores_basis_choice(
        s in scenario(),
        angle in 0.0..std::f64::consts::TAU,
        scale in 0.3..3.0f64,
        ta in 0.0..2.0f64,
        dt in 0.2..1.5f64,
        xa in -3.0..3.0f64,
        xb in -3.0..3.0f64,
    ) {
        let osc = solve(&s);
        let b = osc.basis.init();
        let (c, sn) = (angle.cos(), angle.sin());
        let alt = BasisInit::new(
            c * b.u0 + sn * b.v0,
            c * b.u_dot0 + sn * b.v_dot0,
            scale * (-sn * b.u0 + c * b.v0),
            scale * (-sn * b.u_dot0 + c * b.v_dot0),
        );
        let other = Oscillator::with_initial_data(&s, alt, ParticularInit::new(0.3, -0.2), SolverTolerance::precise()).unwrap();
        let q = KernelQuery::scalar(ta, xa, ta + dt, xb);
        let (k1, k2) = (kernel(&osc, &q).unwrap(), kernel(&other, &q).unwrap());
        prop_assert!((k1 - k2).norm() <= 1e-10 * k1.norm());
    }

    #[test]
    fn propagation_preserves_norm(s in scenario(), centre in -1.0..1.0f64, k in -1.0..1.0f64, t in 0.3..2.0f64) {
        let osc = solve(&s);
        let grid = GridSpec::new(-14.0, 14.0, 2048).unwrap();
        let psi = WavePacket::gaussian(grid, 0.0, centre, k, 0.7).normalized();
        match propagate(&osc, &psi, t) {
            Ok(out) => prop_assert!((out.norm() - 1.0).abs() < 1e-6),
            Err(GhoError::CausticEncountered { .. }) => {}
            Err(e) => prop_assert!(false, "{e}"),
        }
    }

    #[test]
    fn unitary_maps_preserve_norm(s in scenario(), n in 0usize..6, t in 0.0..4.0f64) {
        let osc = solve(&s);
        let grid = GridSpec::new(-14.0, 14.0, 2048).unwrap();
        let phi = sho_eigenstate(n, grid, s.hbar).unwrap();
        let scaled = apply_u_s(&phi, &osc, t).unwrap();
        prop_assert!((scaled.norm() - phi.norm()).abs() < 1e-12);
        let shifted = apply_u_f(&scaled, &osc, t).unwrap();
        prop_assert!((shifted.norm() - phi.norm()).abs() < 1e-12);
    }

    #[test]
    fn toml_round_trip(s in scenario()) {
        let back = Scenario::from_toml(&s.to_toml()).unwrap();
        prop_assert_eq!(back, s);
    }

    #[test]
    fn hamiltonian_coefficients_without_gauge(s in scenario(), t in 0.0..4.0f64) {
        let h = s.hamiltonian_coefficients(t);
        prop_assert_eq!(h.c, s.frequency.value(t).powi(2));
        prop_assert_eq!(h.d, -s.force.value(t));
    }
}
