use std::f64::consts::PI;

use crate::coefficients::bubble_absorptive;
use crate::error::Result;
use crate::kinematics::on_shell;
use crate::params::ModelParams;
use crate::quadrature::{phase_space_2body, LoopValue};
use crate::C64;

/// Relative deviation accepted by [`sum_rule_check`].
pub const SUM_RULE_TOLERANCE: f64 = 0.02;

/// One-loop unitarity check of the decay channel for a single momentum.
#[derive(Clone, Debug)]
pub struct SumRuleEntry {
    pub momentum: [f64; 3],
    /// `½ Σ_β |⟨β|T|p⟩|²`, identical-particle factor included in `Σ_β`.
    pub rhs: LoopValue,
    pub relative_deviation: f64,
}

#[derive(Clone, Debug)]
pub struct SumRuleReport {
    /// `Im T̂₀ = 2 λ² (-Re ℬ(-m_s²))`.
    pub lhs: LoopValue,
    pub entries: Vec<SumRuleEntry>,
    pub max_relative_deviation: f64,
    pub passed: bool,
}

/// Compares the imaginary part of the one-loop forward amplitude with the
/// phase-space sum over χχ final states, for every given three-momentum of
/// the decaying scalar. Below threshold both sides vanish exactly.
pub fn sum_rule_check(params: &ModelParams, momenta: &[[f64; 3]]) -> Result<SumRuleReport> {
    params.validate()?;
    let s = -params.m_s * params.m_s;
    let bubble = bubble_absorptive(s, params)?;
    let lhs = bubble.scale(C64::new(2.0 * params.lambda * params.lambda, 0.0));
    let lam2 = params.lambda * params.lambda;

    let mut entries = Vec::with_capacity(momenta.len());
    for &momentum in momenta {
        let p = on_shell(momentum, params.m_s);
        // |⟨k1 k2|T|p⟩|² E1 E2 ω = λ²/(4π); the ½ is the identical-particle
        // factor of the final-state sum and the outer ½ the one of the rule.
        let sum = phase_space_2body(
            p,
            params.m_e,
            |k1, k2| {
                let t2 = lam2 / (4.0 * PI * k1.t * k2.t * p.t);
                C64::new(0.5 * t2 * k1.t * k2.t * p.t, 0.0)
            },
            params.mc_samples,
            params.seed,
        )?;
        let rhs = sum.scale(C64::new(0.5, 0.0));
        let relative_deviation = relative_deviation(lhs.re(), rhs.re());
        entries.push(SumRuleEntry {
            momentum,
            rhs,
            relative_deviation,
        });
    }
    let max_relative_deviation = entries.iter().map(|e| e.relative_deviation).fold(0.0, f64::max);
    Ok(SumRuleReport {
        lhs,
        entries,
        max_relative_deviation,
        passed: max_relative_deviation <= SUM_RULE_TOLERANCE,
    })
}

fn relative_deviation(lhs: f64, rhs: f64) -> f64 {
    let scale = lhs.abs().max(rhs.abs());
    if scale == 0.0 {
        0.0
    } else {
        (lhs - rhs).abs() / scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn holds_above_and_below_threshold() {
        for m_s in [3.0, 1.5] {
            let params = ModelParams::new(0.2, m_s, 1.0).with_samples(20_000);
            let report = sum_rule_check(&params, &[[0.0; 3], [1.2, -0.3, 0.4]]).unwrap();
            assert!(report.passed, "{report:?}");
        }
    }
}
