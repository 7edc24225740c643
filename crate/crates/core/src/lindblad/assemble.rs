use std::collections::{BTreeMap, HashMap};
use std::f64::consts::{PI, SQRT_2};

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::coefficients::{decay_rate_closed, decay_rate_numeric, im_loop_a, pair_amplitude};
use crate::error::{invalid, Result};
use crate::kinematics::{FourVector, Mandelstam};
use crate::lindblad::generator::{GeneratorMatrices, KernelBlock};
use crate::lindblad::grid::{BasisState, FockBasis};
use crate::lindblad::sparse::SparseMatrix;
use crate::params::ModelParams;
use crate::quadrature::{pool, LoopValue, SphereRule};
use crate::C64;

/// Where the invariant decay rate comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum DecayRateSource {
    #[default]
    Closed,
    /// Phase-space Monte Carlo at rest; carries the numeric normalization.
    Numeric,
}

/// Annihilation operator `a_n` of mode `n` on the truncated Fock space.
pub fn annihilation(basis: &FockBasis, n: usize) -> SparseMatrix {
    let one = C64::new(1.0, 0.0);
    let mut entries = vec![(0, basis.index_of(BasisState::One(n)).unwrap(), one)];
    for m in 0..basis.modes().len() {
        let two = basis.index_of(BasisState::Two(n, m)).unwrap();
        let target = basis.index_of(BasisState::One(m)).unwrap();
        let amp = if m == n { SQRT_2 } else { 1.0 };
        entries.push((target, two, C64::new(amp, 0.0)));
    }
    SparseMatrix::from_entries(basis.dim(), entries)
}

/// Decay generator of the scalar: `L_n = sqrt(Γ_n) a_n` with the box rate
/// `Γ_n = γ t_eff/(2π ω_n)` and no Hamiltonian part.
pub fn assemble_decay(basis: &FockBasis, params: &ModelParams, source: DecayRateSource) -> Result<GeneratorMatrices> {
    params.validate()?;
    if params.m_s <= 0.0 {
        return Err(invalid("the decay generator needs m_s > 0"));
    }
    let (gamma, converged) = match source {
        DecayRateSource::Closed => (decay_rate_closed(params), true),
        DecayRateSource::Numeric => {
            let v = decay_rate_numeric(params, FourVector::new(params.m_s, 0.0, 0.0, 0.0))?;
            (v.re(), v.converged)
        }
    };
    let t = basis.grid.t_eff;
    let n = basis.modes().len();
    let jump_basis: Vec<_> = (0..n).map(|k| annihilation(basis, k)).collect();
    let kernel = (0..n)
        .map(|k| {
            let omega = basis.four_momentum(k, params.m_s).t;
            KernelBlock {
                members: vec![k],
                matrix: DMatrix::from_element(1, 1, C64::new(gamma * t / (2.0 * PI * omega), 0.0)),
            }
        })
        .collect();
    GeneratorMatrices::from_parts(
        basis.dim(),
        SparseMatrix::new(basis.dim()),
        jump_basis,
        kernel,
        converged,
    )
}

/// Two-particle state entering the pair generator.
#[derive(Clone, Copy, Debug)]
struct PairState {
    index: usize,
    p1: FourVector,
    p2: FourVector,
    /// Multiplicity of the ordered momentum sum: 2 for distinct modes,
    /// sqrt(2) for a doubly occupied mode.
    weight: f64,
}

impl PairState {
    fn total(&self) -> FourVector {
        self.p1 + self.p2
    }

    fn energy_product(&self) -> f64 {
        self.p1.t * self.p2.t
    }
}

/// Pair-annihilation generator `φφ → χχ` on the box.
///
/// Two-particle states are grouped by total integer momentum and energy bin
/// `floor(E / (2π/t_eff))`. Within a group the dissipative kernel is the
/// Gram matrix of the exchange amplitude over final-state directions, so it
/// is positive semidefinite by construction, and the Hamiltonian couples
/// every pair of members through `Im 𝒜` at symmetrized invariants.
pub fn assemble_pair(basis: &FockBasis, params: &ModelParams) -> Result<GeneratorMatrices> {
    params.validate()?;
    let (m_s, m_e) = (params.m_s, params.m_e);
    if m_s <= 0.0 {
        return Err(invalid("the pair generator needs m_s > 0"));
    }
    if m_s >= 2.0 * m_e {
        return Err(invalid(
            "the pair generator needs m_s < 2 m_E (no single-particle decay)",
        ));
    }
    let grid = basis.grid;
    let dim = basis.dim();
    let bin = grid.energy_bin();

    let mut groups: BTreeMap<([i32; 3], i64), Vec<PairState>> = BTreeMap::new();
    for (index, state) in basis.states().iter().enumerate() {
        let BasisState::Two(i, j) = *state else { continue };
        let (p1, p2) = (basis.four_momentum(i, m_s), basis.four_momentum(j, m_s));
        let (ni, nj) = (basis.modes()[i], basis.modes()[j]);
        let key = (
            [ni[0] + nj[0], ni[1] + nj[1], ni[2] + nj[2]],
            ((p1.t + p2.t) / bin).floor() as i64,
        );
        let weight = if i == j { SQRT_2 } else { 2.0 };
        groups.entry(key).or_default().push(PairState { index, p1, p2, weight });
    }
    let groups: Vec<Vec<PairState>> = groups.into_values().collect();

    let volume_factor = (2.0 * PI / grid.box_length).powi(3) * grid.t_eff / (2.0 * PI);
    let lambda4 = params.lambda.powi(4);
    let dissipative = 4.0 * lambda4 / (2.0 * PI).powi(4) * volume_factor;
    let coherent = 2.0 * lambda4 / (2.0 * PI).powi(6) * volume_factor;

    // Im 𝒜 for every distinct set of invariants, evaluated once.
    let mut keys: Vec<[u64; 3]> = Vec::new();
    let mut pair_keys = Vec::new();
    for group in &groups {
        for (r, a) in group.iter().enumerate() {
            for b in &group[r..] {
                let key = invariant_key(&symmetrized_invariants(a, b));
                keys.push(key);
                pair_keys.push((
                    a.index,
                    b.index,
                    a.weight * b.weight / (a.energy_product() * b.energy_product()).sqrt(),
                    key,
                ));
            }
        }
    }
    keys.sort_unstable();
    keys.dedup();
    log::info!("pair generator: {} distinct invariant sets", keys.len());
    let values: Vec<Result<LoopValue>> = pool().install(|| {
        keys.par_iter()
            .map(|k| {
                im_loop_a(
                    &Mandelstam::new(f64::from_bits(k[0]), f64::from_bits(k[1]), f64::from_bits(k[2])),
                    params,
                )
            })
            .collect()
    });
    let mut im_a: HashMap<[u64; 3], LoopValue> = HashMap::with_capacity(keys.len());
    for (k, v) in keys.iter().zip(values) {
        im_a.insert(*k, v?);
    }
    let mut converged = im_a.values().all(|v| v.converged);
    if !converged {
        log::warn!("some box-function values did not converge");
    }

    let mut h_entries = Vec::new();
    for (a, b, factor, key) in pair_keys {
        let v = C64::new(-coherent * factor * im_a[&key].re(), 0.0);
        h_entries.push((b, a, v));
        if a != b {
            h_entries.push((a, b, v.conj()));
        }
    }
    let hamiltonian = SparseMatrix::from_entries(dim, h_entries);

    let rule = SphereRule::new(params.angular_nodes[0], params.angular_nodes[1]);
    let eps = params.smallest_epsilon();
    let blocks: Vec<Option<DMatrix<C64>>> = pool().install(|| {
        groups
            .par_iter()
            .map(|g| gram_kernel(g, &rule, m_e, eps).map(|m| m * C64::new(dissipative, 0.0)))
            .collect()
    });

    let mut jump_basis = Vec::new();
    let mut kernel = Vec::new();
    for (group, block) in groups.iter().zip(blocks) {
        let Some(matrix) = block else { continue };
        let start = jump_basis.len();
        for a in group {
            jump_basis.push(SparseMatrix::from_entries(dim, [(0, a.index, C64::new(1.0, 0.0))]));
        }
        kernel.push(KernelBlock {
            members: (start..jump_basis.len()).collect(),
            matrix,
        });
    }
    if kernel
        .iter()
        .any(|b| b.matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()))
    {
        converged = false;
    }
    GeneratorMatrices::from_parts(dim, hamiltonian, jump_basis, kernel, converged)
}

/// `s` averaged over initial and final pair, `t` and `u` over both ways of
/// matching their members, so the result is symmetric in `a ↔ b`.
fn symmetrized_invariants(a: &PairState, b: &PairState) -> Mandelstam {
    let s = 0.5 * (a.total().square() + b.total().square());
    let t = 0.5 * ((a.p1 - b.p1).square() + (a.p2 - b.p2).square());
    let u = 0.5 * ((a.p1 - b.p2).square() + (a.p2 - b.p1).square());
    Mandelstam::new(s, t, u)
}

/// Cache key invariant under `t ↔ u`.
fn invariant_key(m: &Mandelstam) -> [u64; 3] {
    let (lo, hi) = if m.t <= m.u { (m.t, m.u) } else { (m.u, m.t) };
    [m.s.to_bits(), lo.to_bits(), hi.to_bits()]
}

/// Gram matrix `Σ_w w (β/2) F_a F_b* / sqrt(ω_a1 ω_a2 ω_b1 ω_b2)`, with
/// `F_a = D(p_a2 - k2) + D(p_a2 - k1)`, over the final-state directions of the
/// group's mean total momentum. `None` below the χχ threshold.
fn gram_kernel(group: &[PairState], rule: &SphereRule, m_e: f64, eps: f64) -> Option<DMatrix<C64>> {
    let n = group.len() as f64;
    let energy = group.iter().map(|a| a.total().t).sum::<f64>() / n;
    let first = group[0].total();
    let total = FourVector::new(energy, first.x, first.y, first.z);
    let s = total.square();
    if -s <= 4.0 * m_e * m_e {
        return None;
    }
    let half = 0.5 * (-s).sqrt();
    let k = (half * half - m_e * m_e).sqrt();
    let velocity = ((s + 4.0 * m_e * m_e) / s).sqrt();
    let to_lab = FourVector::rest_frame_boost(&total);
    let lift = |v: FourVector| match to_lab {
        Some((eta, axis)) => v.boost(eta, axis).expect("unit axis"),
        None => v,
    };

    let size = group.len();
    let mut gram = DMatrix::<C64>::zeros(size, size);
    let mut f = vec![C64::new(0.0, 0.0); size];
    for (d, w) in rule.directions.iter().zip(&rule.weights) {
        let k1 = lift(FourVector::new(half, k * d[0], k * d[1], k * d[2]));
        let k2 = lift(FourVector::new(half, -k * d[0], -k * d[1], -k * d[2]));
        for (fa, a) in f.iter_mut().zip(group) {
            *fa = pair_amplitude(a.p2, &k1, &k2, m_e, eps) * (a.weight / a.energy_product().sqrt());
        }
        let scale = w * 0.5 * velocity;
        for r in 0..size {
            for c in 0..size {
                gram[(r, c)] += f[r] * f[c].conj() * scale;
            }
        }
    }
    Some(gram)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lindblad::grid::MomentumGrid;

    #[test]
    fn annihilation_on_pairs() {
        let basis = FockBasis::new(MomentumGrid::new(4.0, 1, 10.0).unwrap());
        let a = annihilation(&basis, 3).to_dense();
        let two = basis.index_of(BasisState::Two(3, 3)).unwrap();
        let one = basis.index_of(BasisState::One(3)).unwrap();
        assert!((a[(one, two)].re - SQRT_2).abs() < 1e-15);
        assert_eq!(a[(0, one)].re, 1.0);
        let mixed = basis.index_of(BasisState::Two(3, 7)).unwrap();
        let seven = basis.index_of(BasisState::One(7)).unwrap();
        assert_eq!(a[(seven, mixed)].re, 1.0);
    }

    #[test]
    fn decay_rates_follow_box_dictionary() {
        let basis = FockBasis::new(MomentumGrid::new(4.0, 1, 10.0).unwrap());
        let params = ModelParams::new(0.2, 3.0, 1.0);
        let gen = assemble_decay(&basis, &params, DecayRateSource::Closed).unwrap();
        let gamma = decay_rate_closed(&params);
        let block = &gen.kernel[0];
        let omega = basis.four_momentum(block.members[0], 3.0).t;
        assert!((block.matrix[(0, 0)].re - gamma * 10.0 / (2.0 * PI * omega)).abs() < 1e-15);
        assert_eq!(gen.lindblad_ops.len(), basis.modes().len());
        assert_eq!(gen.hamiltonian.nnz(), 0);
    }

    #[test]
    fn pair_generator_is_consistent() {
        let basis = FockBasis::new(MomentumGrid::new(4.0, 1, 10.0).unwrap());
        let mut params = ModelParams::new(0.2, 1.5, 1.0);
        params.tol = 1e-6;
        params.angular_nodes = [16, 8];
        let gen = assemble_pair(&basis, &params).unwrap();
        assert!(gen.hamiltonian.hermiticity_defect() < 1e-15);
        assert!(gen.min_kernel_eigenvalue >= -1e-8 * gen.kernel_scale());
        assert!(!gen.kernel.is_empty());
        assert!(!gen.lindblad_ops.is_empty());
    }
}
