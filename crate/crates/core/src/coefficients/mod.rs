//! Scalar coefficients of the scattering generators.

mod bubble;
mod decay;
mod loop_a;
mod pair;

pub use bubble::{bubble_absorptive, bubble_absorptive_analytic};
pub use decay::{decay_rate_closed, decay_rate_numeric, NUMERIC_TO_CLOSED_DECAY_RATIO};
pub use loop_a::{im_loop_a, loop_a, loop_a_report, mass_squared, LoopAReport, SIMPLEX_MEASURE_NORMALIZATION};
pub use pair::{pair_amplitude, pair_kernel, pair_kernel_cm, propagator, PairKernelPoint};

/// Step function with `θ(0) = 0`.
pub(crate) fn theta(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        0.0
    }
}
