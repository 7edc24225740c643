//! Pair-annihilation probability of a two-branch superposed incident state,
//! its closed form, and the energy scan comparing the two.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::coefficients::{pair_kernel, pair_kernel_cm, PairKernelPoint};
use crate::error::{invalid, Result};
use crate::kinematics::{dot3, norm3};
use crate::params::ModelParams;
use crate::quadrature::{pool, LoopValue};
use crate::C64;

/// Relative closed-form versus numeric difference counted as agreement.
pub const AGREEMENT_LEVEL: f64 = 0.1;

/// `(|q, -q⟩ + e^{iδ} |q̄, -q̄⟩)/sqrt(N)` with `q ⊥ q̄` and `|q| = |q̄|`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SuperposedPairState {
    pub q: [f64; 3],
    pub qbar: [f64; 3],
    pub delta: f64,
}

impl SuperposedPairState {
    pub fn new(q: [f64; 3], qbar: [f64; 3], delta: f64) -> Result<Self> {
        let (nq, nb) = (norm3(q), norm3(qbar));
        if !(nq > 0.0 && nq.is_finite() && nb.is_finite()) {
            return Err(invalid("branch momenta must be nonzero and finite"));
        }
        if (nq - nb).abs() > 1e-9 * nq {
            return Err(invalid(format!("branch momenta differ in magnitude: {nq} vs {nb}")));
        }
        if dot3(q, qbar).abs() > 1e-9 * nq * nb {
            return Err(invalid("branch momenta must be orthogonal"));
        }
        if !delta.is_finite() {
            return Err(invalid("relative phase must be finite"));
        }
        Ok(Self { q, qbar, delta })
    }

    /// The scan configuration: `q` along x, `q̄` along y, each particle with
    /// energy `x m_E`.
    pub fn at_energy(x: f64, delta: f64, params: &ModelParams) -> Result<Self> {
        let omega = x * params.m_e;
        let k2 = omega * omega - params.m_s * params.m_s;
        if k2.is_nan() || k2 <= 0.0 {
            return Err(invalid(format!(
                "x = {x} leaves no room for momentum at m_s = {}",
                params.m_s
            )));
        }
        let k = k2.sqrt();
        Self::new([k, 0.0, 0.0], [0.0, k, 0.0], delta)
    }

    fn momentum(&self) -> f64 {
        norm3(self.q)
    }

    /// `s = -(2ω)²`.
    pub fn s(&self, m_s: f64) -> f64 {
        let k = self.momentum();
        -4.0 * (k * k + m_s * m_s)
    }
}

/// Finite stand-ins for the singular normalizations: `δ³(0) = V/(2π)³` and
/// `δ⁴(0) = V T/(2π)⁴`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Regulators {
    pub volume: f64,
    pub time: f64,
}

impl Regulators {
    pub fn new(volume: f64, time: f64) -> Result<Self> {
        if !(volume > 0.0 && time > 0.0 && volume.is_finite() && time.is_finite()) {
            return Err(invalid("volume and time regulators must be positive"));
        }
        Ok(Self { volume, time })
    }

    pub fn delta3_at_zero(&self) -> f64 {
        self.volume / (2.0 * PI).powi(3)
    }

    pub fn delta4_at_zero(&self) -> f64 {
        self.volume * self.time / (2.0 * PI).powi(4)
    }

    /// Norm `N = ⟨branch|branch⟩ + ⟨branch̄|branch̄⟩ = 2 δ³(0)²`.
    pub fn state_normalization(&self) -> f64 {
        2.0 * self.delta3_at_zero().powi(2)
    }
}

impl Default for Regulators {
    fn default() -> Self {
        Self { volume: 1.0, time: 1.0 }
    }
}

/// How the annihilation kernel is integrated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum KernelRoute {
    /// Phase-space Monte Carlo with `mc_samples` samples.
    #[default]
    MonteCarlo,
    /// Product Gauss rule over CM directions.
    Angular,
}

/// The three distinct kernels of the two-branch state: both branches
/// diagonal and the interference kernel `γ(q, -q, -q̄)`.
#[derive(Clone, Copy, Debug)]
pub struct BranchKernels {
    pub aa: LoopValue,
    pub bb: LoopValue,
    pub ab: LoopValue,
}

impl BranchKernels {
    pub fn compute(state: &SuperposedPairState, params: &ModelParams, route: KernelRoute) -> Result<Self> {
        let m_s = params.m_s;
        let kernel = |q, qbar| -> Result<LoopValue> {
            let point = PairKernelPoint::center_of_mass(q, qbar, m_s)?;
            match route {
                KernelRoute::MonteCarlo => pair_kernel(&point, params),
                KernelRoute::Angular => pair_kernel_cm(&point, params),
            }
        };
        Ok(Self {
            aa: kernel(state.q, state.q)?,
            bb: kernel(state.qbar, state.qbar)?,
            ab: kernel(state.q, state.qbar)?,
        })
    }

    /// `γ_AA + γ_BB + 2 Re(e^{-iδ} γ_AB)` with a linear error bound.
    pub fn combination(&self, delta: f64) -> LoopValue {
        let phase = C64::from_polar(1.0, -delta);
        let value = self.aa.re() + self.bb.re() + 2.0 * (phase * self.ab.value).re;
        let error = self.aa.abs_error + self.bb.abs_error + 2.0 * self.ab.abs_error;
        let converged = self.aa.converged && self.bb.converged && self.ab.converged;
        LoopValue::real(value, error, converged)
    }
}

/// `⟨0|𝒟[ρ]|0⟩` for the superposed state. Each branch expands into four
/// ordered momentum assignments with equal kernels, hence the factor 4:
/// `P = (4λ⁴/(2π)⁴) δ⁴(0) 4 [γ_AA + γ_BB + 2 Re(e^{-iδ} γ_AB)] / (N ω²)`.
pub fn annihilation_probability(
    state: &SuperposedPairState,
    params: &ModelParams,
    regulators: &Regulators,
    route: KernelRoute,
) -> Result<LoopValue> {
    params.validate()?;
    let kernels = BranchKernels::compute(state, params, route)?;
    Ok(probability_from_kernels(state, &kernels, params, regulators))
}

pub fn probability_from_kernels(
    state: &SuperposedPairState,
    kernels: &BranchKernels,
    params: &ModelParams,
    regulators: &Regulators,
) -> LoopValue {
    let omega2 = -state.s(params.m_s) / 4.0;
    let factor = reduced_prefactor(params) / omega2 * regulators.delta4_at_zero() / regulators.state_normalization();
    kernels.combination(state.delta).scale(C64::new(factor, 0.0))
}

/// `4λ⁴/(2π)⁴` times the assignment multiplicity 4.
fn reduced_prefactor(params: &ModelParams) -> f64 {
    16.0 * params.lambda.powi(4) / (2.0 * PI).powi(4)
}

/// Relative flux `u = 2 sqrt(s(s + 4m_s²))/(-s)` of the incident pair.
pub fn relative_flux(s: f64, m_s: f64) -> f64 {
    2.0 * (s * (s + 4.0 * m_s * m_s)).max(0.0).sqrt() / -s
}

/// Dimensionless `m_E² σ` from a probability: `m_E² N P/(δ⁴(0) u)`.
pub fn sigma_from_probability(
    p: LoopValue,
    state: &SuperposedPairState,
    params: &ModelParams,
    regulators: &Regulators,
) -> LoopValue {
    let s = state.s(params.m_s);
    let factor = params.m_e * params.m_e * regulators.state_normalization()
        / (regulators.delta4_at_zero() * relative_flux(s, params.m_s));
    p.scale(C64::new(factor, 0.0))
}

/// Numeric `m_E² σ` at `x = sqrt(-s)/(2m_E)`. Regulator independent.
pub fn sigma_numeric(x: f64, delta: f64, params: &ModelParams, route: KernelRoute) -> Result<LoopValue> {
    let state = SuperposedPairState::at_energy(x, delta, params)?;
    let regulators = Regulators::default();
    let p = annihilation_probability(&state, params, &regulators, route)?;
    Ok(sigma_from_probability(p, &state, params, &regulators))
}

/// Closed-form `m_E² σ` at `x = sqrt(-s)/(2m_E)`:
/// `m_E² (λ/π)⁴ (16π/(-s)) sqrt((s+4m_E²)/s) {…} / ((s+2m_s²)² u)` above the
/// χχ threshold, zero at and below it.
///
/// `1 - a` is computed in the cancellation-free form
/// `(4m_s⁴ - 4s m_E² - 16 m_s² m_E²)/(s + 2m_s²)²`, and `L/sqrt(a)` with
/// `L = ln((1+√a)/(1-√a))` by its series when `a` is small.
pub fn sigma_closed(x: f64, delta: f64, params: &ModelParams) -> Result<f64> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(invalid(format!("x must be positive, got {x}")));
    }
    params.validate()?;
    let (ms2, me2) = (params.m_s * params.m_s, params.m_e * params.m_e);
    let s = -4.0 * x * x * me2;
    if -s <= 4.0 * me2 {
        return Ok(0.0);
    }
    let d = s + 2.0 * ms2;
    let a = (s + 4.0 * ms2) * (s + 4.0 * me2) / (d * d);
    let one_minus_a = (4.0 * ms2 * ms2 - 4.0 * s * me2 - 16.0 * ms2 * me2) / (d * d);
    if !(a >= 0.0 && one_minus_a > 0.0) {
        return Err(invalid(format!("closed form is singular at x = {x} (a = {a})")));
    }
    let r = a.sqrt();
    // L / sqrt(a) = 2 atanh(r)/r
    let log_over_root = 2.0 * atanh_over_arg(r, one_minus_a);
    let bracket = 16.0 / one_minus_a + 8.0 * log_over_root + delta.cos() * (11.0 - a) / 2.0 * log_over_root;
    let velocity = ((s + 4.0 * me2) / s).sqrt();
    let u = relative_flux(s, params.m_s);
    let value = me2 * (params.lambda / PI).powi(4) * 16.0 * PI / -s * velocity / (d * d) * bracket / u;
    Ok(value)
}

/// `atanh(r)/r` given `1 - r²` computed without cancellation.
fn atanh_over_arg(r: f64, one_minus_r2: f64) -> f64 {
    if r < 1e-4 {
        let r2 = r * r;
        1.0 + r2 / 3.0 + r2 * r2 / 5.0
    } else {
        // atanh(r) = ½ ln(1 + 2r/(1 - r)), 1 - r = (1 - r²)/(1 + r)
        0.5 * (2.0 * r * (1.0 + r) / one_minus_r2).ln_1p() / r
    }
}

/// One `(x, δ)` point of the scan.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScanRow {
    pub x: f64,
    pub delta: f64,
    pub sigma_closed: f64,
    pub sigma_numeric: f64,
    pub numeric_error: f64,
}

impl ScanRow {
    pub fn above_threshold(&self) -> bool {
        self.x > 1.0
    }

    /// Closed form over numeric, when both are nonzero.
    pub fn ratio(&self) -> Option<f64> {
        (self.sigma_numeric != 0.0 && self.sigma_closed != 0.0).then(|| self.sigma_closed / self.sigma_numeric)
    }

    /// Agreement at the [`AGREEMENT_LEVEL`].
    pub fn agrees(&self) -> bool {
        let scale = self.sigma_closed.abs().max(self.sigma_numeric.abs());
        scale == 0.0 || (self.sigma_closed - self.sigma_numeric).abs() <= AGREEMENT_LEVEL * scale
    }
}

/// `steps` evenly spaced energies in `[x_min, x_max]` times every phase.
/// Kernels are computed once per energy; rows are ordered by energy, then by
/// phase.
pub fn sigma_scan(
    x_min: f64,
    x_max: f64,
    steps: usize,
    deltas: &[f64],
    params: &ModelParams,
    route: KernelRoute,
) -> Result<Vec<ScanRow>> {
    if !(x_min > 0.0 && x_min < x_max && x_max.is_finite()) {
        return Err(invalid(format!("scan needs 0 < x_min < x_max, got [{x_min}, {x_max}]")));
    }
    if steps < 2 {
        return Err(invalid("scan needs at least 2 steps"));
    }
    if deltas.is_empty() || deltas.iter().any(|d| !d.is_finite()) {
        return Err(invalid("scan needs at least one finite phase"));
    }
    params.validate()?;
    let xs: Vec<f64> = (0..steps)
        .map(|i| x_min + (x_max - x_min) * i as f64 / (steps - 1) as f64)
        .collect();
    let blocks: Vec<Result<Vec<ScanRow>>> =
        pool().install(|| xs.par_iter().map(|&x| scan_energy(x, deltas, params, route)).collect());
    let mut rows = Vec::with_capacity(steps * deltas.len());
    for b in blocks {
        rows.extend(b?);
    }
    Ok(rows)
}

fn scan_energy(x: f64, deltas: &[f64], params: &ModelParams, route: KernelRoute) -> Result<Vec<ScanRow>> {
    let kernels = match SuperposedPairState::at_energy(x, 0.0, params) {
        Ok(state) if x > 1.0 => Some((state, BranchKernels::compute(&state, params, route)?)),
        _ => None,
    };
    let regulators = Regulators::default();
    deltas
        .iter()
        .map(|&delta| {
            let (numeric, error) = match &kernels {
                Some((state, k)) => {
                    let state = SuperposedPairState { delta, ..*state };
                    let p = probability_from_kernels(&state, k, params, &regulators);
                    let sigma = sigma_from_probability(p, &state, params, &regulators);
                    (sigma.re(), sigma.abs_error)
                }
                None => (0.0, 0.0),
            };
            Ok(ScanRow {
                x,
                delta,
                sigma_closed: sigma_closed(x, delta, params)?,
                sigma_numeric: numeric,
                numeric_error: error,
            })
        })
        .collect()
}

/// Aggregate closed-form versus numeric comparison over the above-threshold
/// rows of a scan.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScanSummary {
    pub above_threshold_rows: usize,
    /// Fraction of above-threshold rows agreeing at [`AGREEMENT_LEVEL`].
    pub agreeing_fraction: f64,
    /// Median of closed/numeric, the systematic factor if there is one.
    pub median_ratio: f64,
    /// Half the interquartile range of the ratio relative to its median.
    pub ratio_spread: f64,
}

impl ScanSummary {
    pub fn from_rows(rows: &[ScanRow]) -> Self {
        let above: Vec<&ScanRow> = rows.iter().filter(|r| r.above_threshold()).collect();
        let agreeing = above.iter().filter(|r| r.agrees()).count();
        let mut ratios: Vec<f64> = above.iter().filter_map(|r| r.ratio()).collect();
        ratios.sort_by(f64::total_cmp);
        let quantile = |p: f64| -> f64 {
            if ratios.is_empty() {
                return f64::NAN;
            }
            let pos = p * (ratios.len() - 1) as f64;
            let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
            ratios[lo] + (ratios[hi] - ratios[lo]) * (pos - lo as f64)
        };
        let median = quantile(0.5);
        Self {
            above_threshold_rows: above.len(),
            agreeing_fraction: if above.is_empty() {
                0.0
            } else {
                agreeing as f64 / above.len() as f64
            },
            median_ratio: median,
            ratio_spread: 0.5 * (quantile(0.75) - quantile(0.25)) / median.abs(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> ModelParams {
        let mut p = ModelParams::new(0.2, 0.02, 1.0).with_samples(20_000);
        p.angular_nodes = [32, 16];
        p
    }

    #[test]
    fn closed_form_threshold_and_decay() {
        let p = params();
        assert_eq!(sigma_closed(0.9, 0.0, &p).unwrap(), 0.0);
        assert_eq!(sigma_closed(1.0, 0.0, &p).unwrap(), 0.0);
        let near = sigma_closed(1.0 + 1e-10, 0.0, &p).unwrap();
        assert!(near >= 0.0 && near < 1e-3 * sigma_closed(1.2, 0.0, &p).unwrap());
        let (a, b) = (sigma_closed(3.0, 0.0, &p).unwrap(), sigma_closed(4.0, 0.0, &p).unwrap());
        assert!(a > b && b > 0.0);
        assert!(sigma_closed(1.5, 0.0, &p).unwrap() > sigma_closed(1.5, PI, &p).unwrap());
    }

    #[test]
    fn numeric_is_regulator_independent() {
        let p = params();
        let state = SuperposedPairState::at_energy(1.6, 0.4, &p).unwrap();
        let k = BranchKernels::compute(&state, &p, KernelRoute::Angular).unwrap();
        let sig =
            |r: Regulators| sigma_from_probability(probability_from_kernels(&state, &k, &p, &r), &state, &p, &r).re();
        let (a, b) = (
            sig(Regulators::new(1.0, 1.0).unwrap()),
            sig(Regulators::new(64.0, 10.0).unwrap()),
        );
        assert!((a - b).abs() <= 1e-13 * a.abs());
    }

    #[test]
    fn phase_dependence_is_linear_in_cosine() {
        let p = params();
        let state = SuperposedPairState::at_energy(1.8, 0.0, &p).unwrap();
        let k = BranchKernels::compute(&state, &p, KernelRoute::Angular).unwrap();
        let at = |d: f64| k.combination(d).re();
        let mid = 0.5 * (at(0.0) + at(PI));
        assert!((at(PI / 2.0) - mid).abs() < 1e-12 * mid.abs().max(1e-300));
        assert!(at(0.0) >= at(PI));
    }

    #[test]
    fn below_threshold_scan_rows_vanish() {
        let rows = sigma_scan(0.5, 0.95, 4, &[0.0, PI], &params(), KernelRoute::MonteCarlo).unwrap();
        assert_eq!(rows.len(), 8);
        assert!(rows.iter().all(|r| r.sigma_closed == 0.0 && r.sigma_numeric == 0.0));
    }

    #[test]
    fn invalid_states_rejected() {
        assert!(SuperposedPairState::new([1.0, 0.0, 0.0], [0.5, 0.5, 0.0], 0.0).is_err());
        assert!(SuperposedPairState::new([1.0, 0.0, 0.0], [0.0, 2.0, 0.0], 0.0).is_err());
        assert!(sigma_scan(2.0, 1.0, 3, &[0.0], &params(), KernelRoute::Angular).is_err());
    }
}
