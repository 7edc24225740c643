//! GKSL generators obtained from relativistic scattering in a scalar model
//! where a system field `φ` (mass `m_s`) couples to an environment field `χ`
//! (mass `m_E`) through `λ φ χ²`.
//!
//! The crate computes the scalar coefficients of the generators (decay rate,
//! pair-annihilation kernel, one-loop box function, bubble absorptive part),
//! assembles the generators on a finite momentum grid with at most two
//! particles, evolves density matrices with the resulting scattering map and
//! checks the structural identities: trace preservation, complete positivity,
//! the unitarity sum rule and Poincaré covariance.
//!
//! Conventions: natural units, metric `diag(-1, 1, 1, 1)`, so an on-shell
//! momentum of mass `m` has `p² = -m²` and the Mandelstam `s` is negative for
//! physical kinematics.

pub mod coefficients;
pub mod error;
pub mod kinematics;
pub mod lindblad;
pub mod params;
pub mod probability;
pub mod quadrature;
pub mod symmetry;

pub use error::{Error, Result};
pub use kinematics::{FourVector, Mandelstam};
pub use params::ModelParams;
pub use quadrature::LoopValue;

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
