use std::f64::consts::PI;

use crate::error::Result;
use crate::params::ModelParams;
use crate::quadrature::{extrapolate_eps, integrate_interval, LoopValue};

/// Absorptive part `-Re ℬ(s)` of the χ bubble
/// `ℬ = 1/(2(2π)³) ∫ d⁴q / ([q² + m_E² - iε][(q-p)² + m_E² - iε])`, `p² = s`.
///
/// After Wick rotation and one Feynman parameter the finite, ε-dependent
/// part is `-Re ℬ = (1/16π) ∫₀¹ dx arg-angle(ε, Δ(x))` with
/// `Δ = m_E² + x(1-x)s`, which tends to `π θ(-Δ)` as ε → 0. The sign is the
/// one that makes the unitarity right-hand side nonnegative. Exactly zero
/// below the two-particle cut `-s <= 4m_E²`.
pub fn bubble_absorptive(s: f64, params: &ModelParams) -> Result<LoopValue> {
    params.validate()?;
    let m2 = params.m_e * params.m_e;
    if -s <= 4.0 * m2 {
        return Ok(LoopValue::zero());
    }
    let beta = (1.0 - 4.0 * m2 / -s).sqrt();
    let roots = [0.5 * (1.0 - beta), 0.5 * (1.0 + beta)];
    let delta = move |x: f64| m2 + x * (1.0 - x) * s;
    extrapolate_eps(
        |rel_eps| {
            let eps = rel_eps * m2;
            let v = integrate_interval(|x| eps.atan2(delta(x)), 0.0, 1.0, &roots, params.tol, 1e-15)?;
            Ok(v.scale((1.0 / (16.0 * PI)).into()))
        },
        &params.epsilon_schedule,
    )
}

/// Closed form of the ε → 0 limit of [`bubble_absorptive`]:
/// `sqrt(1 - 4m_E²/(-s))/16` above the cut.
pub fn bubble_absorptive_analytic(s: f64, m_e: f64) -> f64 {
    let r = 1.0 - 4.0 * m_e * m_e / -s;
    if -s <= 4.0 * m_e * m_e {
        0.0
    } else {
        r.sqrt() / 16.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn below_cut_is_zero() {
        let params = ModelParams::new(0.2, 3.0, 1.0);
        assert_eq!(bubble_absorptive(-3.9, &params).unwrap(), LoopValue::zero());
    }

    #[test]
    fn matches_analytic_limit() {
        let params = ModelParams::new(0.2, 3.0, 1.0);
        let v = bubble_absorptive(-9.0, &params).unwrap();
        let exact = bubble_absorptive_analytic(-9.0, 1.0);
        assert!(v.re() > 0.0);
        assert!((v.re() - exact).abs() < 1e-3 * exact, "{v:?} vs {exact}");
    }
}
