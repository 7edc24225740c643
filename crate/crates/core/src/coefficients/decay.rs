use std::f64::consts::PI;

use crate::error::{invalid, Result};
use crate::kinematics::FourVector;
use crate::params::ModelParams;
use crate::quadrature::{phase_space_2body, LoopValue};
use crate::C64;

use super::theta;

/// Ratio of the phase-space route to the closed form of the decay rate.
///
/// The closed form is implemented as printed, `(λ²/m_s) sqrt(m_s² - 4m_E²)`.
/// Integrating the phase-space definition `(λ²/4π) ∫ d³k₁d³k₂/(E₁E₂) δ⁴`
/// gives half of it; an independent rectangular-grid integration in the test
/// suite confirms the value.
pub const NUMERIC_TO_CLOSED_DECAY_RATIO: f64 = 0.5;

/// Closed-form decay rate `(λ²/m_s) sqrt(m_s² - 4m_E²) θ(m_s² - 4m_E²)`.
pub fn decay_rate_closed(params: &ModelParams) -> f64 {
    let gap = params.m_s * params.m_s - 4.0 * params.m_e * params.m_e;
    if params.m_s <= 0.0 || theta(gap) == 0.0 {
        return 0.0;
    }
    params.lambda * params.lambda / params.m_s * gap.sqrt()
}

/// Decay rate from the phase-space integral, evaluated for the on-shell
/// momentum `p`. Lorentz invariant, so independent of `p` within errors.
pub fn decay_rate_numeric(params: &ModelParams, p: FourVector) -> Result<LoopValue> {
    params.validate()?;
    check_on_shell(&p, params.m_s)?;
    let prefactor = params.lambda * params.lambda / (4.0 * PI);
    let measure = phase_space_2body(p, params.m_e, |_, _| C64::new(1.0, 0.0), params.mc_samples, params.seed)?;
    Ok(measure.scale(C64::new(prefactor, 0.0)))
}

pub(crate) fn check_on_shell(p: &FourVector, mass: f64) -> Result<()> {
    let scale = (p.t * p.t).max(mass * mass).max(f64::MIN_POSITIVE);
    if mass <= 0.0 || p.t <= 0.0 || (p.square() + mass * mass).abs() > 1e-9 * scale {
        return Err(invalid(format!("momentum {p:?} is not on shell with mass {mass}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::on_shell;

    #[test]
    fn closed_form_examples() {
        assert_eq!(decay_rate_closed(&ModelParams::new(1.0, 1.0, 0.6)), 0.0);
        assert_eq!(decay_rate_closed(&ModelParams::new(1.0, 1.0, 0.5)), 0.0);
        let g = decay_rate_closed(&ModelParams::new(1.0, 1.0, 0.1));
        assert!((g - 0.96f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn numeric_is_half_of_closed() {
        let params = ModelParams::new(1.0, 1.0, 0.1).with_samples(5000);
        let v = decay_rate_numeric(&params, on_shell([0.3, -0.1, 0.6], 1.0)).unwrap();
        let ratio = v.re() / decay_rate_closed(&params);
        assert!((ratio - NUMERIC_TO_CLOSED_DECAY_RATIO).abs() < 1e-12);
    }

    #[test]
    fn off_shell_rejected() {
        let params = ModelParams::new(1.0, 1.0, 0.1).with_samples(5000);
        assert!(decay_rate_numeric(&params, FourVector::new(2.0, 0.0, 0.0, 0.0)).is_err());
    }
}
