//! Poincaré-invariance checks of the continuum coefficients and of generator
//! matrix elements transported with the one-particle transformation rule
//! `U a†_p U† = sqrt(ω_Λp/ω_p) e^{-i(Λp)·a} a†_Λp`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::coefficients::{decay_rate_numeric, im_loop_a, pair_kernel, PairKernelPoint};
use crate::error::{invalid, Result};
use crate::kinematics::{mandelstam, on_shell, unit_axis, FourVector};
use crate::params::ModelParams;
use crate::quadrature::{pool, LoopValue};
use crate::C64;

/// Number of standard deviations accepted by every comparison.
pub const SIGMA_LEVEL: f64 = 3.0;

/// Relative floor added to error bars, covering rounding in quantities whose
/// integrator error estimate is exactly zero.
pub const RELATIVE_FLOOR: f64 = 1e-10;

/// Relative tolerance on the Mandelstam invariants of a transformed point.
pub const MANDELSTAM_TOLERANCE: f64 = 1e-9;

/// `x ↦ Λ x + a` with `Λ = boost ∘ rotation`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PoincareElement {
    /// Rapidity and unit axis.
    pub boost: Option<(f64, [f64; 3])>,
    /// Unit axis and angle.
    pub rotation: Option<([f64; 3], f64)>,
    pub translation: FourVector,
}

impl PoincareElement {
    pub fn identity() -> Self {
        Self {
            boost: None,
            rotation: None,
            translation: FourVector::default(),
        }
    }

    pub fn pure_boost(rapidity: f64, axis: [f64; 3]) -> Result<Self> {
        Self::identity().with_boost(rapidity, axis)
    }

    pub fn pure_rotation(axis: [f64; 3], angle: f64) -> Result<Self> {
        Self::identity().with_rotation(axis, angle)
    }

    pub fn pure_translation(a: FourVector) -> Self {
        Self {
            translation: a,
            ..Self::identity()
        }
    }

    pub fn with_boost(mut self, rapidity: f64, axis: [f64; 3]) -> Result<Self> {
        if !rapidity.is_finite() {
            return Err(invalid("rapidity must be finite"));
        }
        self.boost = Some((rapidity, unit_axis(axis)?));
        Ok(self)
    }

    pub fn with_rotation(mut self, axis: [f64; 3], angle: f64) -> Result<Self> {
        if !angle.is_finite() {
            return Err(invalid("rotation angle must be finite"));
        }
        self.rotation = Some((unit_axis(axis)?, angle));
        Ok(self)
    }

    /// Random boost (rapidity in `[-1.5, 1.5]`), rotation and translation
    /// (components in `[-5, 5]`).
    pub fn random<R: Rng>(rng: &mut R) -> Self {
        let boost = (rng.gen_range(-1.5..1.5), random_axis(rng));
        let rotation = (random_axis(rng), rng.gen_range(-PI..PI));
        let mut a = || rng.gen_range(-5.0..5.0);
        Self {
            boost: Some(boost),
            rotation: Some(rotation),
            translation: FourVector::new(a(), a(), a(), a()),
        }
    }

    /// `Λ p`.
    pub fn transform(&self, p: FourVector) -> Result<FourVector> {
        let mut v = p;
        if let Some((axis, angle)) = self.rotation {
            v = v.rotate(axis, angle)?;
        }
        if let Some((eta, axis)) = self.boost {
            v = v.boost(eta, axis)?;
        }
        Ok(v)
    }

    /// Factor acquired by a generator coefficient multiplying
    /// `a_{p_in...} ρ a†_{p_out...}`: `Π sqrt(ω_p/ω_Λp) · e^{i(ΣΛp_in - ΣΛp_out)·a}`.
    pub fn transport_factor(&self, incoming: &[FourVector], outgoing: &[FourVector]) -> Result<C64> {
        let mut weight = 1.0;
        let mut phase = 0.0;
        for (momenta, sign) in [(incoming, 1.0), (outgoing, -1.0)] {
            for p in momenta {
                let lp = self.transform(*p)?;
                weight *= (p.t / lp.t).sqrt();
                phase += sign * lp.dot(&self.translation);
            }
        }
        Ok(C64::from_polar(weight, phase))
    }
}

fn random_axis<R: Rng>(rng: &mut R) -> [f64; 3] {
    let c: f64 = rng.gen_range(-1.0..1.0);
    let phi: f64 = rng.gen_range(0.0..2.0 * PI);
    let s = (1.0 - c * c).sqrt();
    let v = [s * phi.cos(), s * phi.sin(), c];
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    v.map(|x| x / n)
}

/// One comparison between a quantity and its transformed counterpart.
#[derive(Clone, Debug)]
pub struct InvarianceCheck {
    pub name: String,
    pub trial: usize,
    pub original: LoopValue,
    pub transformed: LoopValue,
    pub passed: bool,
}

impl InvarianceCheck {
    fn compare(name: &str, trial: usize, original: LoopValue, transformed: LoopValue) -> Self {
        let passed = original.agrees_with(&transformed, SIGMA_LEVEL, RELATIVE_FLOOR);
        Self {
            name: name.to_owned(),
            trial,
            original,
            transformed,
            passed,
        }
    }

    /// Compares moduli only; used where phases legitimately change.
    fn compare_modulus(name: &str, trial: usize, original: LoopValue, transformed: LoopValue) -> Self {
        let modulus = |v: LoopValue| LoopValue::real(v.value.norm(), v.abs_error, v.converged);
        let passed = modulus(original).agrees_with(&modulus(transformed), SIGMA_LEVEL, RELATIVE_FLOOR);
        Self {
            name: name.to_owned(),
            trial,
            original,
            transformed,
            passed,
        }
    }

    /// Difference in units of the combined error bar.
    pub fn deviation_sigmas(&self) -> f64 {
        let err = (self.original.abs_error.powi(2) + self.transformed.abs_error.powi(2)).sqrt()
            + RELATIVE_FLOOR * self.original.value.norm().max(self.transformed.value.norm());
        let diff = (self.original.value - self.transformed.value).norm();
        if diff == 0.0 {
            0.0
        } else {
            diff / err
        }
    }
}

#[derive(Clone, Debug)]
pub struct SymmetryReport {
    pub element: PoincareElement,
    pub checks: Vec<InvarianceCheck>,
}

impl SymmetryReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn worst_deviation(&self) -> f64 {
        self.checks
            .iter()
            .map(InvarianceCheck::deviation_sigmas)
            .fold(0.0, f64::max)
    }
}

fn trial_rng(params: &ModelParams, salt: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed ^ salt);
    rng.set_stream(trial as u64);
    rng
}

/// Decay rate at random on-shell momenta and at their images, plus the
/// transported decay-kernel element `γ(p)/ω_p`.
pub fn check_decay_invariance(g: &PoincareElement, params: &ModelParams, trials: usize) -> Result<SymmetryReport> {
    if trials == 0 {
        return Err(invalid("at least one trial is needed"));
    }
    params.validate()?;
    if params.m_s <= 0.0 {
        return Err(invalid("decay checks need m_s > 0"));
    }
    let results: Vec<Result<Vec<InvarianceCheck>>> = pool().install(|| {
        (0..trials)
            .into_par_iter()
            .map(|trial| {
                let mut rng = trial_rng(params, 0xdeca, trial);
                let scale = 2.0 * params.m_s;
                let p = on_shell(std::array::from_fn(|_| rng.gen_range(-scale..scale)), params.m_s);
                let lp = g.transform(p)?;
                let trial_params = params.clone().with_seed(params.seed.wrapping_add(trial as u64));
                let rate = decay_rate_numeric(&trial_params, p)?;
                let rate_t = decay_rate_numeric(&trial_params, lp)?;
                let element = rate.scale(C64::new(1.0 / p.t, 0.0));
                let transported = element.scale(g.transport_factor(&[p], &[p])?);
                let recomputed = rate_t.scale(C64::new(1.0 / lp.t, 0.0));
                Ok(vec![
                    InvarianceCheck::compare("decay_rate", trial, rate, rate_t),
                    InvarianceCheck::compare("decay_element", trial, transported, recomputed),
                    InvarianceCheck::compare_modulus("decay_element_modulus", trial, transported, recomputed),
                ])
            })
            .collect()
    });
    collect_report(*g, results)
}

/// Pair-annihilation kernel, `Im 𝒜` and the transported dissipator and
/// Hamiltonian elements at random above-threshold points and their images.
/// The Mandelstam invariants are checked first.
pub fn check_pair_invariance(g: &PoincareElement, params: &ModelParams, trials: usize) -> Result<SymmetryReport> {
    if trials == 0 {
        return Err(invalid("at least one trial is needed"));
    }
    params.validate()?;
    if params.m_s <= 0.0 {
        return Err(invalid("pair checks need m_s > 0"));
    }
    let results: Vec<Result<Vec<InvarianceCheck>>> = pool().install(|| {
        (0..trials)
            .into_par_iter()
            .map(|trial| pair_trial(g, params, trial))
            .collect()
    });
    collect_report(*g, results)
}

fn pair_trial(g: &PoincareElement, params: &ModelParams, trial: usize) -> Result<Vec<InvarianceCheck>> {
    let mut rng = trial_rng(params, 0xa1a1, trial);
    let (m_s, m_e) = (params.m_s, params.m_e);
    // CM energy per particle between 1.1 m_E and 3 m_E, then a random frame
    let omega = rng.gen_range(1.1 * m_e..3.0 * m_e).max(1.01 * m_s);
    let k = (omega * omega - m_s * m_s).sqrt();
    let q = random_axis(&mut rng).map(|c| c * k);
    let qbar = random_axis(&mut rng).map(|c| c * k);
    let frame = PoincareElement::identity().with_boost(rng.gen_range(-1.0..1.0), random_axis(&mut rng))?;
    let point = PairKernelPoint::center_of_mass(q, qbar, m_s)?.map(|p| frame.transform(p))?;
    let image = point.map(|p| g.transform(p))?;

    let man = mandelstam(point.p1, point.p2, point.pbar1(), point.pbar2);
    let man_t = mandelstam(image.p1, image.p2, image.pbar1(), image.pbar2);
    let mut checks = Vec::new();
    for (name, a, b) in [
        ("mandelstam_s", man.s, man_t.s),
        ("mandelstam_t", man.t, man_t.t),
        ("mandelstam_u", man.u, man_t.u),
    ] {
        let tol = MANDELSTAM_TOLERANCE * man.s.abs().max(m_e * m_e);
        let mut check = InvarianceCheck::compare(
            name,
            trial,
            LoopValue::real(a, 0.0, true),
            LoopValue::real(b, 0.0, true),
        );
        check.passed = (a - b).abs() <= tol;
        checks.push(check);
    }
    if checks.iter().any(|c| !c.passed) {
        return Ok(checks);
    }

    let trial_params = params.clone().with_seed(params.seed.wrapping_add(trial as u64));
    let gamma = pair_kernel(&point, &trial_params)?;
    let gamma_t = pair_kernel(&image, &trial_params)?;
    let im_a = im_loop_a(&man, params)?;
    let im_a_t = im_loop_a(&man_t, params)?;

    let incoming = [point.p1, point.p2];
    let outgoing = [point.pbar1(), point.pbar2];
    let energies = |p: &PairKernelPoint| (p.p1.t * p.p2.t * p.pbar1().t * p.pbar2.t).sqrt();
    let factor = g.transport_factor(&incoming, &outgoing)?;
    let element = |v: LoopValue, p: &PairKernelPoint| v.scale(C64::new(1.0 / energies(p), 0.0));

    checks.push(InvarianceCheck::compare("pair_kernel", trial, gamma, gamma_t));
    checks.push(InvarianceCheck::compare("im_loop_a", trial, im_a, im_a_t));
    let diss = element(gamma, &point).scale(factor);
    let diss_t = element(gamma_t, &image);
    checks.push(InvarianceCheck::compare("pair_dissipator_element", trial, diss, diss_t));
    checks.push(InvarianceCheck::compare_modulus(
        "pair_dissipator_modulus",
        trial,
        diss,
        diss_t,
    ));
    let ham = element(im_a, &point).scale(factor);
    let ham_t = element(im_a_t, &image);
    checks.push(InvarianceCheck::compare("pair_hamiltonian_element", trial, ham, ham_t));
    Ok(checks)
}

fn collect_report(element: PoincareElement, results: Vec<Result<Vec<InvarianceCheck>>>) -> Result<SymmetryReport> {
    let mut checks = Vec::new();
    for r in results {
        checks.extend(r?);
    }
    Ok(SymmetryReport { element, checks })
}

/// `count` random Poincaré elements, each checked with one decay and one
/// pair trial. `decay_params` needs `m_s > 2m_E` for a nonzero rate.
pub fn poincare_suite(
    decay_params: &ModelParams,
    pair_params: &ModelParams,
    count: usize,
    seed: u64,
) -> Result<Vec<SymmetryReport>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let elements: Vec<PoincareElement> = (0..count).map(|_| PoincareElement::random(&mut rng)).collect();
    elements
        .iter()
        .enumerate()
        .map(|(i, g)| {
            let dp = decay_params
                .clone()
                .with_seed(decay_params.seed.wrapping_add(1000 * i as u64));
            let pp = pair_params
                .clone()
                .with_seed(pair_params.seed.wrapping_add(1000 * i as u64));
            let mut report = check_decay_invariance(g, &dp, 1)?;
            report.checks.extend(check_pair_invariance(g, &pp, 1)?.checks);
            Ok(report)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair_params() -> ModelParams {
        let mut p = ModelParams::new(0.2, 0.5, 1.0).with_samples(20_000);
        p.tol = 1e-5;
        p
    }

    #[test]
    fn identity_is_exact() {
        let g = PoincareElement::identity();
        let report = check_decay_invariance(&g, &ModelParams::new(0.2, 3.0, 1.0).with_samples(5_000), 2).unwrap();
        assert!(report.passed());
        assert!(report.checks.iter().all(|c| c.original.value == c.transformed.value));
        let report = check_pair_invariance(&g, &pair_params(), 1).unwrap();
        assert!(
            report.checks.iter().all(|c| c.original.value == c.transformed.value),
            "{report:?}"
        );
    }

    #[test]
    fn translation_only_changes_phases() {
        let g = PoincareElement::pure_translation(FourVector::new(0.3, -1.0, 2.0, 0.5));
        let report = check_pair_invariance(&g, &pair_params(), 1).unwrap();
        assert!(report.passed(), "{report:?}");
    }

    #[test]
    fn random_boost_passes() {
        let g = PoincareElement::pure_boost(0.9, [0.0, 0.6, 0.8]).unwrap();
        assert!(
            check_decay_invariance(&g, &ModelParams::new(0.2, 3.0, 1.0).with_samples(5_000), 3)
                .unwrap()
                .passed()
        );
        let report = check_pair_invariance(&g, &pair_params(), 1).unwrap();
        assert!(report.passed(), "{report:?}");
    }

    #[test]
    fn transport_weights() {
        let g = PoincareElement::pure_boost(0.5, [1.0, 0.0, 0.0]).unwrap();
        let p = on_shell([0.0; 3], 2.0);
        let f = g.transport_factor(&[p], &[]).unwrap();
        assert!((f.norm() - (1.0 / 0.5_f64.cosh()).sqrt()).abs() < 1e-15);
    }
}
