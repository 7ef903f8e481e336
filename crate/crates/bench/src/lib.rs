//! Shared fixtures for the benchmarks.

use gho_core::classical::Oscillator;
use gho_core::grid::{GridSpec, WavePacket};
use gho_core::params::{CoefficientFn, Scenario};

/// `w(t) = 1 + 0.1 cos 2t` on `[0, 5]`.
pub fn parametric() -> Scenario {
    let mut s = Scenario::sho(0.0, 5.0);
    s.frequency = CoefficientFn::sinusoidal(0.1, 2.0, 0.0, 1.0);
    s
}

pub fn oscillator() -> Oscillator {
    Oscillator::solve(&parametric()).expect("benchmark scenario solves")
}

pub fn packet(n: usize) -> WavePacket {
    let grid = GridSpec::new(-12.0, 12.0, n).expect("valid grid");
    WavePacket::gaussian(grid, 0.0, 0.5, 0.3, 0.5f64.sqrt())
}
