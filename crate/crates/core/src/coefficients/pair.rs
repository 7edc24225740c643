use crate::error::{invalid, Result};
use crate::kinematics::{on_shell, FourVector};
use crate::params::ModelParams;
use crate::quadrature::{phase_space_2body, LoopValue, SphereRule};
use crate::C64;

use super::decay::check_on_shell;

/// Feynman propagator `1/(q² + m² - iε)`.
pub fn propagator(q: FourVector, mass: f64, eps: f64) -> C64 {
    C64::new(q.square() + mass * mass, -eps).inv()
}

/// Summed exchange amplitude `D(p₂ - k₂) + D(p₂ - k₁)` of the annihilation
/// kernel.
pub fn pair_amplitude(p2: FourVector, k1: &FourVector, k2: &FourVector, m_e: f64, eps: f64) -> C64 {
    propagator(p2 - *k2, m_e, eps) + propagator(p2 - *k1, m_e, eps)
}

/// Kinematic point `(p₁, p₂, p̄₂)` of the annihilation kernel; `p̄₁` follows
/// from momentum conservation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairKernelPoint {
    pub p1: FourVector,
    pub p2: FourVector,
    pub pbar2: FourVector,
}

impl PairKernelPoint {
    /// Validates that all four momenta are on shell with mass `m_s`.
    pub fn new(p1: FourVector, p2: FourVector, pbar2: FourVector, m_s: f64) -> Result<Self> {
        let point = Self { p1, p2, pbar2 };
        for p in [p1, p2, pbar2] {
            check_on_shell(&p, m_s)?;
        }
        check_on_shell(&point.pbar1(), m_s).map_err(|_| invalid("p̄₁ = p₁ + p₂ - p̄₂ is not on shell"))?;
        Ok(point)
    }

    /// Back-to-back pair `(q, -q)` annihilating against `(q̄, -q̄)` in the CM
    /// frame; requires `|q| = |q̄|`.
    pub fn center_of_mass(q: [f64; 3], qbar: [f64; 3], m_s: f64) -> Result<Self> {
        let neg = |v: [f64; 3]| v.map(|c| -c);
        Self::new(on_shell(q, m_s), on_shell(neg(q), m_s), on_shell(neg(qbar), m_s), m_s)
    }

    pub fn pbar1(&self) -> FourVector {
        self.p1 + self.p2 - self.pbar2
    }

    pub fn total(&self) -> FourVector {
        self.p1 + self.p2
    }

    /// Applies the same map to every momentum.
    pub fn map<F>(&self, f: F) -> Result<Self>
    where
        F: Fn(FourVector) -> Result<FourVector>,
    {
        Ok(Self {
            p1: f(self.p1)?,
            p2: f(self.p2)?,
            pbar2: f(self.pbar2)?,
        })
    }

    fn above_threshold(&self, m_e: f64) -> bool {
        -self.total().square() > 4.0 * m_e * m_e
    }
}

/// Annihilation kernel `γ(p₁, p₂, p̄₂)` by phase-space Monte Carlo in the frame
/// of the given momenta.
///
/// The propagators are evaluated at the smallest iε of the schedule. The
/// estimate is repeated at the next iε and a warning is logged if the two
/// differ by more than 1%.
pub fn pair_kernel(point: &PairKernelPoint, params: &ModelParams) -> Result<LoopValue> {
    params.validate()?;
    if !point.above_threshold(params.m_e) {
        return Ok(LoopValue::zero());
    }
    let eps = params.epsilons();
    let n = eps.len();
    let run = |e: f64| {
        phase_space_2body(
            point.total(),
            params.m_e,
            |k1, k2| {
                pair_amplitude(point.p2, k1, k2, params.m_e, e)
                    * pair_amplitude(point.pbar2, k1, k2, params.m_e, e).conj()
            },
            params.mc_samples,
            params.seed,
        )
    };
    let fine = run(eps[n - 1])?;
    let coarse = run(eps[n - 2])?;
    if (fine.value - coarse.value).norm() > 0.01 * fine.value.norm() {
        log::warn!(
            "pair kernel changes by more than 1% between iε = {:e} and {:e}",
            eps[n - 2],
            eps[n - 1]
        );
    }
    Ok(fine)
}

/// Annihilation kernel in the CM frame by product Gauss quadrature over the
/// solid angle of `k₁`. The error estimate compares against a rule with half
/// the nodes in each direction.
pub fn pair_kernel_cm(point: &PairKernelPoint, params: &ModelParams) -> Result<LoopValue> {
    params.validate()?;
    let total = point.total();
    if total.three_norm() > 1e-10 * total.t.max(1.0) {
        return Err(invalid("pair_kernel_cm needs p₁ + p₂ at rest"));
    }
    if !point.above_threshold(params.m_e) {
        return Ok(LoopValue::zero());
    }
    let eps = params.smallest_epsilon();
    let [nt, np] = params.angular_nodes;
    let fine = cm_angular(point, params.m_e, eps, &SphereRule::new(nt, np));
    let coarse = cm_angular(
        point,
        params.m_e,
        eps,
        &SphereRule::new((nt / 2).max(2), (np / 2).max(2)),
    );
    let error = (fine - coarse).norm();
    Ok(LoopValue::new(fine, error, true))
}

fn cm_angular(point: &PairKernelPoint, m_e: f64, eps: f64, rule: &SphereRule) -> C64 {
    let s = point.total().square();
    let energy = 0.5 * (-s).sqrt();
    let k = (energy * energy - m_e * m_e).sqrt();
    let velocity = ((s + 4.0 * m_e * m_e) / s).sqrt();
    let sum: C64 = rule
        .directions
        .iter()
        .zip(&rule.weights)
        .map(|(d, w)| {
            let k1 = FourVector::new(energy, k * d[0], k * d[1], k * d[2]);
            let k2 = FourVector::new(energy, -k1.x, -k1.y, -k1.z);
            pair_amplitude(point.p2, &k1, &k2, m_e, eps) * pair_amplitude(point.pbar2, &k1, &k2, m_e, eps).conj() * *w
        })
        .sum();
    sum * (0.5 * velocity)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> ModelParams {
        ModelParams::new(0.2, 0.5, 1.0).with_samples(200_000)
    }

    #[test]
    fn below_threshold_is_zero() {
        // sqrt(-s) = 1.9 m_E
        let m_s = 0.5;
        let e = 0.95_f64;
        let q = (e * e - m_s * m_s).sqrt();
        let point = PairKernelPoint::center_of_mass([q, 0.0, 0.0], [0.0, q, 0.0], m_s).unwrap();
        assert_eq!(pair_kernel(&point, &params()).unwrap(), LoopValue::zero());
        assert_eq!(pair_kernel_cm(&point, &params()).unwrap(), LoopValue::zero());
    }

    #[test]
    fn diagonal_is_positive_and_routes_agree() {
        let point = PairKernelPoint::center_of_mass([1.3, 0.2, -0.4], [1.3, 0.2, -0.4], 0.5).unwrap();
        let mc = pair_kernel(&point, &params()).unwrap();
        let cm = pair_kernel_cm(&point, &params()).unwrap();
        assert!(cm.re() > 0.0);
        assert!(cm.im().abs() < 1e-12 * cm.re());
        assert!(mc.agrees_with(&cm, 3.0, 1e-9), "{mc:?} vs {cm:?}");
    }

    #[test]
    fn off_cm_rejected() {
        let m_s = 0.5;
        let p1 = on_shell([1.0, 0.0, 0.0], m_s);
        let p2 = on_shell([0.0, 1.0, 0.0], m_s);
        let point = PairKernelPoint::new(p1, p2, p1, m_s).unwrap();
        assert!(pair_kernel_cm(&point, &params()).is_err());
    }

    #[test]
    fn non_conserving_point_rejected() {
        let m_s = 0.5;
        let p1 = on_shell([1.0, 0.0, 0.0], m_s);
        let p2 = on_shell([-1.0, 0.0, 0.0], m_s);
        let pbar2 = on_shell([0.0, 2.0, 0.0], m_s);
        assert!(PairKernelPoint::new(p1, p2, pbar2, m_s).is_err());
    }
}
