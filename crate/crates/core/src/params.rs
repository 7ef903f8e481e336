//! Time-dependent coefficients and the scenario they define.
//!
//! A scenario fixes the quadratic Lagrangian
//!
//! ```text
//! L = sum_i [ M x_i'^2 / 2 - M w^2 x_i^2 / 2 + F x_i + d/dt(M a x_i^2) + d/dt(b x_i) ] + f
//! ```
//!
//! through six coefficient functions of time, plus `hbar`, the (isotropic)
//! dimension and the working time interval.

use serde::{Deserialize, Serialize};

use crate::error::{GhoError, Result};

/// Number of uniform samples used when checking `M(t) > 0` at load time.
const MASS_SAMPLES: usize = 2001;

/// A closed set of analytic functions of time with exact first derivatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CoefficientFn {
    Constant {
        value: f64,
    },
    /// `c0 + c1 t + c2 t^2 + ...`
    Polynomial {
        coefficients: Vec<f64>,
    },
    /// `amplitude * cos(omega t + phase) + offset`
    Sinusoidal {
        amplitude: f64,
        omega: f64,
        #[serde(default)]
        phase: f64,
        #[serde(default)]
        offset: f64,
    },
    /// `values[k]` on `[breakpoints[k-1], breakpoints[k])`; right-continuous.
    PiecewiseConstant {
        breakpoints: Vec<f64>,
        values: Vec<f64>,
    },
    /// `amplitude * exp(rate t)`
    Exponential {
        amplitude: f64,
        rate: f64,
    },
}

impl CoefficientFn {
    pub fn constant(value: f64) -> Self {
        CoefficientFn::Constant { value }
    }

    pub fn zero() -> Self {
        CoefficientFn::Constant { value: 0.0 }
    }

    pub fn polynomial(coefficients: impl Into<Vec<f64>>) -> Self {
        CoefficientFn::Polynomial {
            coefficients: coefficients.into(),
        }
    }

    pub fn sinusoidal(amplitude: f64, omega: f64, phase: f64, offset: f64) -> Self {
        CoefficientFn::Sinusoidal {
            amplitude,
            omega,
            phase,
            offset,
        }
    }

    pub fn exponential(amplitude: f64, rate: f64) -> Self {
        CoefficientFn::Exponential { amplitude, rate }
    }

    pub fn piecewise_constant(breakpoints: impl Into<Vec<f64>>, values: impl Into<Vec<f64>>) -> Self {
        CoefficientFn::PiecewiseConstant {
            breakpoints: breakpoints.into(),
            values: values.into(),
        }
    }

    /// Value and first time-derivative at `t`.
    pub fn eval(&self, t: f64) -> (f64, f64) {
        match self {
            CoefficientFn::Constant { value } => (*value, 0.0),
            CoefficientFn::Polynomial { coefficients } => {
                // Horner for the value and the derivative together.
                let mut value = 0.0;
                let mut deriv = 0.0;
                for &c in coefficients.iter().rev() {
                    deriv = deriv * t + value;
                    value = value * t + c;
                }
                (value, deriv)
            }
            CoefficientFn::Sinusoidal {
                amplitude,
                omega,
                phase,
                offset,
            } => {
                let arg = omega * t + phase;
                (amplitude * arg.cos() + offset, -amplitude * omega * arg.sin())
            }
            CoefficientFn::PiecewiseConstant { breakpoints, values } => {
                let k = breakpoints.partition_point(|&b| b <= t);
                (values[k], 0.0)
            }
            CoefficientFn::Exponential { amplitude, rate } => {
                let v = amplitude * (rate * t).exp();
                (v, rate * v)
            }
        }
    }

    /// Like [`Self::eval`], except a piecewise-constant function takes the
    /// piece containing `segment_start` rather than the one containing `t`.
    pub fn eval_on_segment(&self, t: f64, segment_start: f64) -> (f64, f64) {
        match self {
            CoefficientFn::PiecewiseConstant { .. } => self.eval(segment_start),
            _ => self.eval(t),
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        self.eval(t).0
    }

    pub fn derivative(&self, t: f64) -> f64 {
        self.eval(t).1
    }

    /// Discontinuities of the function (empty except for piecewise-constant).
    pub fn breakpoints(&self) -> &[f64] {
        match self {
            CoefficientFn::PiecewiseConstant { breakpoints, .. } => breakpoints,
            _ => &[],
        }
    }

    fn check(&self, name: &str) -> Result<()> {
        let finite = |xs: &[f64]| xs.iter().all(|x| x.is_finite());
        let ok = match self {
            CoefficientFn::Constant { value } => value.is_finite(),
            CoefficientFn::Polynomial { coefficients } => !coefficients.is_empty() && finite(coefficients),
            CoefficientFn::Sinusoidal {
                amplitude,
                omega,
                phase,
                offset,
            } => finite(&[*amplitude, *omega, *phase, *offset]),
            CoefficientFn::PiecewiseConstant { breakpoints, values } => {
                if values.len() != breakpoints.len() + 1 {
                    return Err(GhoError::Validation(format!(
                        "{name}: piecewise_constant needs one more value than breakpoints ({} values, {} breakpoints)",
                        values.len(),
                        breakpoints.len()
                    )));
                }
                if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(GhoError::Validation(format!(
                        "{name}: breakpoints must be strictly increasing"
                    )));
                }
                finite(breakpoints) && finite(values)
            }
            CoefficientFn::Exponential { amplitude, rate } => finite(&[*amplitude, *rate]),
        };
        if ok {
            Ok(())
        } else {
            Err(GhoError::Validation(format!("{name}: parameters must be finite (and non-empty)")))
        }
    }
}

/// Initial data `(u, u', v, v')` at `t0` for the homogeneous basis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisInit {
    pub u0: f64,
    pub u_dot0: f64,
    pub v0: f64,
    pub v_dot0: f64,
}

impl BasisInit {
    pub fn new(u0: f64, u_dot0: f64, v0: f64, v_dot0: f64) -> Self {
        BasisInit { u0, u_dot0, v0, v_dot0 }
    }

    /// `u = 1, u' = 0, v = 0, v' = 1/M(t0)`, which gives `Omega = 1`.
    pub fn default_for(scenario: &Scenario) -> Self {
        BasisInit::new(1.0, 0.0, 0.0, 1.0 / scenario.mass.value(scenario.t0()))
    }
}

/// Initial data `(x_p, x_p')` at `t0` for the particular solution.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParticularInit {
    pub x0: f64,
    pub x_dot0: f64,
}

impl ParticularInit {
    pub fn new(x0: f64, x_dot0: f64) -> Self {
        ParticularInit { x0, x_dot0 }
    }
}

fn default_dimension() -> usize {
    1
}
fn default_hbar() -> f64 {
    1.0
}
fn default_unit() -> CoefficientFn {
    CoefficientFn::constant(1.0)
}

/// A full time-dependent quadratic system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default = "default_dimension")]
    pub dimension: usize,
    #[serde(default = "default_hbar")]
    pub hbar: f64,
    pub interval: [f64; 2],
    #[serde(default = "default_unit")]
    pub mass: CoefficientFn,
    #[serde(default = "default_unit")]
    pub frequency: CoefficientFn,
    #[serde(default = "CoefficientFn::zero")]
    pub force: CoefficientFn,
    #[serde(default = "CoefficientFn::zero")]
    pub a: CoefficientFn,
    #[serde(default = "CoefficientFn::zero")]
    pub b: CoefficientFn,
    #[serde(default = "CoefficientFn::zero")]
    pub f: CoefficientFn,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis: Option<BasisInit>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub particular: Option<ParticularInit>,
}

/// Coefficients `c(t)` and `d(t)` of the Hamiltonian
/// `H = p^2/2M - a(xp+px) + M c x^2/2 - (b/M) p + d x + b^2/2M - f`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HamiltonianCoeffs {
    pub c: f64,
    pub d: f64,
}

impl Scenario {
    /// Unit-mass, unit-frequency oscillator on `[t0, t1]`.
    pub fn sho(t0: f64, t1: f64) -> Self {
        Scenario {
            dimension: 1,
            hbar: 1.0,
            interval: [t0, t1],
            mass: default_unit(),
            frequency: default_unit(),
            force: CoefficientFn::zero(),
            a: CoefficientFn::zero(),
            b: CoefficientFn::zero(),
            f: CoefficientFn::zero(),
            basis: None,
            particular: None,
        }
    }

    /// Unit-mass free particle on `[t0, t1]`.
    pub fn free_particle(t0: f64, t1: f64) -> Self {
        Scenario {
            frequency: CoefficientFn::zero(),
            ..Scenario::sho(t0, t1)
        }
    }

    pub fn t0(&self) -> f64 {
        self.interval[0]
    }

    pub fn t1(&self) -> f64 {
        self.interval[1]
    }

    /// Parses and validates a scenario file.
    pub fn from_toml(text: &str) -> Result<Self> {
        let scenario: Scenario = toml::from_str(text).map_err(|e| GhoError::Parse(e.to_string()))?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serialization cannot fail")
    }

    pub fn validate(&self) -> Result<()> {
        if self.dimension == 0 {
            return Err(GhoError::Validation("dimension must be at least 1".into()));
        }
        if !(self.hbar > 0.0 && self.hbar.is_finite()) {
            return Err(GhoError::Validation(format!("hbar must be positive, got {}", self.hbar)));
        }
        let [t0, t1] = self.interval;
        if !(t0.is_finite() && t1.is_finite() && t0 < t1) {
            return Err(GhoError::Validation(format!("interval must satisfy t0 < t1, got [{t0}, {t1}]")));
        }
        for (name, c) in self.coefficients() {
            c.check(name)?;
        }
        let samples = (0..MASS_SAMPLES)
            .map(|k| t0 + (t1 - t0) * k as f64 / (MASS_SAMPLES - 1) as f64)
            .chain(self.breakpoints());
        self.check_mass(samples)?;
        if let Some(init) = &self.basis {
            let vals = [init.u0, init.u_dot0, init.v0, init.v_dot0];
            if vals.iter().any(|v| !v.is_finite()) {
                return Err(GhoError::Validation("basis initial data must be finite".into()));
            }
        }
        if let Some(init) = &self.particular {
            if !(init.x0.is_finite() && init.x_dot0.is_finite()) {
                return Err(GhoError::Validation("particular initial data must be finite".into()));
            }
        }
        Ok(())
    }

    /// Checks `M(t) > 0` at the given times.
    pub fn check_mass(&self, times: impl IntoIterator<Item = f64>) -> Result<()> {
        for t in times {
            let m = self.mass.value(t);
            if !(m > 0.0 && m.is_finite()) {
                return Err(GhoError::Validation(format!("mass must be positive, M({t}) = {m}")));
            }
        }
        Ok(())
    }

    pub fn coefficients(&self) -> [(&'static str, &CoefficientFn); 6] {
        [
            ("mass", &self.mass),
            ("frequency", &self.frequency),
            ("force", &self.force),
            ("a", &self.a),
            ("b", &self.b),
            ("f", &self.f),
        ]
    }

    /// Sorted breakpoints of all coefficients strictly inside the interval.
    pub fn breakpoints(&self) -> Vec<f64> {
        let [t0, t1] = self.interval;
        let mut out: Vec<f64> = self
            .coefficients()
            .iter()
            .flat_map(|(_, c)| c.breakpoints().iter().copied())
            .filter(|&b| b > t0 && b < t1)
            .collect();
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    pub fn contains(&self, t: f64) -> bool {
        let [t0, t1] = self.interval;
        let slack = 1e-12 * (1.0 + t0.abs().max(t1.abs()));
        t >= t0 - slack && t <= t1 + slack
    }

    pub fn ensure_contains(&self, t: f64) -> Result<()> {
        if self.contains(t) {
            Ok(())
        } else {
            Err(GhoError::OutOfInterval {
                t,
                t0: self.t0(),
                t1: self.t1(),
            })
        }
    }

    pub fn hamiltonian_coefficients(&self, t: f64) -> HamiltonianCoeffs {
        let (m, m_dot) = self.mass.eval(t);
        let w = self.frequency.value(t);
        let (a, a_dot) = self.a.eval(t);
        let (b, b_dot) = self.b.eval(t);
        let force = self.force.value(t);
        HamiltonianCoeffs {
            c: w * w + 4.0 * a * a - 2.0 * a_dot - 2.0 * (m_dot / m) * a,
            d: 2.0 * a * b - b_dot - force,
        }
    }

    /// Whether `a`, `b` and `f` all vanish identically.
    pub fn is_gauge_free(&self) -> bool {
        let zero = CoefficientFn::zero();
        self.a == zero && self.b == zero && self.f == zero
    }

    /// A short stable fingerprint of the scenario, used in export headers.
    pub fn fingerprint(&self) -> String {
        use sha2::{Digest, Sha256};
        let digest = Sha256::digest(self.to_toml().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

pub fn eval_coefficient(f: &CoefficientFn, t: f64) -> (f64, f64) {
    f.eval(t)
}

pub fn load_scenario(config_text: &str) -> Result<Scenario> {
    Scenario::from_toml(config_text)
}

pub fn hamiltonian_coefficients(s: &Scenario, t: f64) -> HamiltonianCoeffs {
    s.hamiltonian_coefficients(t)
}
