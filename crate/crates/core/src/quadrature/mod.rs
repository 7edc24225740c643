//! Integration engines: adaptive cubature on the 3-simplex, iε extrapolation,
//! two-body phase-space Monte Carlo and fixed Gauss rules.

mod extrapolate;
mod gauss;
mod phase_space;
mod simplex;

pub use extrapolate::{extrapolate_eps, extrapolate_eps_report, EpsExtrapolation, Parity};
pub use gauss::{gauss_legendre, integrate_interval, integrate_interval_complex, SphereRule};
pub(crate) use phase_space::pool;
pub use phase_space::{phase_space_2body, two_body_measure, worker_count, BLOCK_SIZE};
pub use simplex::{integrate_simplex, integrate_simplex_with, SimplexOptions, SimplexRegion};

use crate::C64;

/// Result of an integrator: a complex value, an error estimate and whether the
/// requested accuracy was reached.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LoopValue {
    pub value: C64,
    pub abs_error: f64,
    pub converged: bool,
}

impl LoopValue {
    pub fn new(value: C64, abs_error: f64, converged: bool) -> Self {
        Self {
            value,
            abs_error: abs_error.abs(),
            converged,
        }
    }

    /// An exactly known value.
    pub fn exact(value: C64) -> Self {
        Self::new(value, 0.0, true)
    }

    pub fn zero() -> Self {
        Self::exact(C64::new(0.0, 0.0))
    }

    pub fn real(value: f64, abs_error: f64, converged: bool) -> Self {
        Self::new(C64::new(value, 0.0), abs_error, converged)
    }

    /// Multiplies value and error by a complex constant.
    pub fn scale(self, c: C64) -> Self {
        Self::new(self.value * c, self.abs_error * c.norm(), self.converged)
    }

    /// Sum of two estimates with independent errors.
    pub fn add_independent(self, other: Self) -> Self {
        Self::new(
            self.value + other.value,
            self.abs_error.hypot(other.abs_error),
            self.converged && other.converged,
        )
    }

    pub fn re(&self) -> f64 {
        self.value.re
    }

    pub fn im(&self) -> f64 {
        self.value.im
    }

    /// Whether `other` agrees with this value within `k` combined standard
    /// errors, with a relative floor for zero-variance estimates.
    pub fn agrees_with(&self, other: &Self, k: f64, rel_floor: f64) -> bool {
        let scale = self.value.norm().max(other.value.norm());
        let allowed = k * self.abs_error.hypot(other.abs_error) + rel_floor * scale;
        (self.value - other.value).norm() <= allowed
    }
}
