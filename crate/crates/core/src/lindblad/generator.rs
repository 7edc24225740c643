use nalgebra::{Cholesky, DMatrix};

use crate::error::{Error, Result};
use crate::lindblad::density::DensityMatrix;
use crate::lindblad::sparse::SparseMatrix;
use crate::C64;

/// Eigenvalues of a kernel block below `-KERNEL_NEGATIVE_TOLERANCE · max`
/// make the block non-positive.
pub const KERNEL_NEGATIVE_TOLERANCE: f64 = 1e-8;

/// Eigenvalues below `KERNEL_DROP_TOLERANCE · max` produce no jump operator.
pub const KERNEL_DROP_TOLERANCE: f64 = 1e-12;

/// Upper bound on `‖L[ρ]‖_F · dt` accepted by [`evolve_step`].
pub const STEP_GUARD: f64 = 0.1;

/// Hermitian block of the dissipative kernel acting on a subset of the jump
/// basis: the term `Σ_ab Γ_ab A_a ρ A_b†` with `a, b` ranging over `members`.
#[derive(Clone, Debug)]
pub struct KernelBlock {
    pub members: Vec<usize>,
    pub matrix: DMatrix<C64>,
}

/// Matrices of the generator
/// `L[ρ] = -i[M, ρ] + Σ_ab Γ_ab (A_a ρ A_b† - ½{A_b† A_a, ρ})`.
///
/// The kernel is diagonalized block by block into jump operators
/// `L_k = sqrt(λ_k) Σ_a V_ak A_a`, which is what [`apply_generator`] uses.
#[derive(Clone, Debug)]
pub struct GeneratorMatrices {
    pub dim: usize,
    /// Hermitian part `M`.
    pub hamiltonian: SparseMatrix,
    /// Elementary operators `A_a`.
    pub jump_basis: Vec<SparseMatrix>,
    pub kernel: Vec<KernelBlock>,
    /// `L_k` from the kernel eigendecomposition.
    pub lindblad_ops: Vec<SparseMatrix>,
    /// `Σ_k L_k† L_k`.
    pub anticommutator: SparseMatrix,
    /// Smallest kernel eigenvalue found over all blocks.
    pub min_kernel_eigenvalue: f64,
    /// False if any coefficient behind the matrices failed to converge.
    pub converged: bool,
}

impl GeneratorMatrices {
    /// Checks the kernel for positivity and builds the jump operators.
    pub fn from_parts(
        dim: usize,
        hamiltonian: SparseMatrix,
        jump_basis: Vec<SparseMatrix>,
        kernel: Vec<KernelBlock>,
        converged: bool,
    ) -> Result<Self> {
        for a in &jump_basis {
            if a.dim != dim {
                return Err(Error::ShapeMismatch {
                    expected: dim,
                    found: a.dim,
                });
            }
        }
        if hamiltonian.dim != dim {
            return Err(Error::ShapeMismatch {
                expected: dim,
                found: hamiltonian.dim,
            });
        }
        let spectra: Vec<(DMatrix<C64>, Vec<f64>)> = kernel.iter().map(|b| block_eigen(&b.matrix)).collect();
        let (min, max) = spectra
            .iter()
            .flat_map(|(_, vals)| vals.iter().copied())
            .fold((f64::INFINITY, 0.0_f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
        let min = if min.is_finite() { min } else { 0.0 };
        if min < -KERNEL_NEGATIVE_TOLERANCE * max || (max == 0.0 && min < 0.0) {
            return Err(Error::KernelNotPsd { min, max });
        }

        let mut lindblad_ops = Vec::new();
        for (block, (vectors, values)) in kernel.iter().zip(&spectra) {
            for (k, &lam) in values.iter().enumerate() {
                if lam <= KERNEL_DROP_TOLERANCE * max {
                    continue;
                }
                let amp = lam.sqrt();
                let terms = block.members.iter().enumerate().flat_map(|(r, &a)| {
                    let coeff = vectors[(r, k)] * amp;
                    jump_basis[a].entries().iter().map(move |&(i, j, v)| (i, j, coeff * v))
                });
                lindblad_ops.push(SparseMatrix::from_entries(dim, terms.collect::<Vec<_>>()));
            }
        }
        let anticommutator = SparseMatrix::from_entries(
            dim,
            lindblad_ops
                .iter()
                .flat_map(|l| l.adjoint().product(l).entries().to_vec())
                .collect::<Vec<_>>(),
        );
        Ok(Self {
            dim,
            hamiltonian,
            jump_basis,
            kernel,
            lindblad_ops,
            anticommutator,
            min_kernel_eigenvalue: min,
            converged,
        })
    }

    /// Full kernel matrix over the jump basis.
    pub fn kernel_dense(&self) -> DMatrix<C64> {
        let n = self.jump_basis.len();
        let mut g = DMatrix::zeros(n, n);
        for block in &self.kernel {
            for (r, &a) in block.members.iter().enumerate() {
                for (c, &b) in block.members.iter().enumerate() {
                    g[(a, b)] += block.matrix[(r, c)];
                }
            }
        }
        g
    }

    /// Largest kernel eigenvalue, the scale of the dissipative part.
    pub fn kernel_scale(&self) -> f64 {
        self.kernel
            .iter()
            .flat_map(|b| block_eigen(&b.matrix).1)
            .fold(0.0, f64::max)
    }
}

/// Eigenvectors (columns) and eigenvalues of a Hermitian block.
fn block_eigen(m: &DMatrix<C64>) -> (DMatrix<C64>, Vec<f64>) {
    if m.nrows() == 1 {
        return (DMatrix::from_element(1, 1, C64::new(1.0, 0.0)), vec![m[(0, 0)].re]);
    }
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let eig = h.symmetric_eigen();
    (eig.eigenvectors, eig.eigenvalues.iter().copied().collect())
}

/// `L[X]` for an arbitrary square matrix `X` of the generator's dimension.
pub fn apply_generator_to(gen: &GeneratorMatrices, x: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    if x.nrows() != gen.dim || x.ncols() != gen.dim {
        return Err(Error::ShapeMismatch {
            expected: gen.dim,
            found: x.nrows(),
        });
    }
    // -iMX - ½GX; the commutator and anticommutator are this plus its
    // adjoint when X is Hermitian, which keeps the output exactly Hermitian.
    let mx = gen.hamiltonian.mul_left(x);
    let gx = gen.anticommutator.mul_left(x);
    let half = C64::new(0.5, 0.0);
    let left = mx * C64::new(0.0, -1.0) - gx * half;
    let mut out = if crate::lindblad::hermiticity_defect(x) == 0.0 {
        &left + left.adjoint()
    } else {
        let xm = gen.hamiltonian.mul_right(x);
        let xg = gen.anticommutator.mul_right(x);
        left + xm * C64::new(0.0, 1.0) - xg * half
    };
    for l in &gen.lindblad_ops {
        l.sandwich_into(x, &mut out);
    }
    Ok(out)
}

/// `L[ρ]`.
pub fn apply_generator(gen: &GeneratorMatrices, rho: &DensityMatrix) -> Result<DMatrix<C64>> {
    apply_generator_to(gen, rho.matrix())
}

/// One explicit step `ρ + dt L[ρ]`, re-Hermitized and trace-normalized.
///
/// Refuses steps with `‖L[ρ]‖_F dt > 0.1`, where the linearization stops
/// being trustworthy, and warns when the result has an eigenvalue below
/// `-1e-8`.
pub fn evolve_step(gen: &GeneratorMatrices, rho: &DensityMatrix, dt: f64) -> Result<DensityMatrix> {
    if !(dt >= 0.0 && dt.is_finite()) {
        return Err(crate::error::invalid(format!(
            "time step must be nonnegative, got {dt}"
        )));
    }
    if dt == 0.0 {
        return Ok(rho.clone());
    }
    let l = apply_generator(gen, rho)?;
    let size = l.norm() * dt;
    if size > STEP_GUARD {
        return Err(Error::ValidityGuard(size));
    }
    let next = rho.matrix() + l * C64::new(dt, 0.0);
    let next = (&next + next.adjoint()) * C64::new(0.5, 0.0);
    let tr = next.trace().re;
    let next = next / C64::new(tr, 0.0);
    let shifted = &next + DMatrix::<C64>::identity(gen.dim, gen.dim) * C64::new(1e-8, 0.0);
    if Cholesky::new(shifted).is_none() {
        log::warn!("density matrix has an eigenvalue below -1e-8 after the step");
    }
    Ok(DensityMatrix::from_trusted(next))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    /// Two-level amplitude damping with rate `g` and splitting `w`.
    fn damping(g: f64, w: f64) -> GeneratorMatrices {
        let h = SparseMatrix::from_entries(2, [(1, 1, c(w))]);
        let a = SparseMatrix::from_entries(2, [(0, 1, c(1.0))]);
        let kernel = vec![KernelBlock {
            members: vec![0],
            matrix: DMatrix::from_element(1, 1, c(g)),
        }];
        GeneratorMatrices::from_parts(2, h, vec![a], kernel, true).unwrap()
    }

    #[test]
    fn amplitude_damping_rates() {
        let gen = damping(0.3, 1.0);
        let mut m = DMatrix::from_element(2, 2, c(0.5));
        m[(0, 1)] = C64::new(0.1, 0.2);
        m[(1, 0)] = C64::new(0.1, -0.2);
        let rho = DensityMatrix::from_matrix(m.clone()).unwrap();
        let l = apply_generator(&gen, &rho).unwrap();
        assert!((l[(1, 1)].re + 0.3 * 0.5).abs() < 1e-15);
        assert!((l[(0, 0)].re - 0.3 * 0.5).abs() < 1e-15);
        // coherence decays at g/2 and rotates with the splitting
        let expected = m[(0, 1)] * C64::new(-0.15, 1.0);
        assert!((l[(0, 1)] - expected).norm() < 1e-15);
    }

    #[test]
    fn negative_kernel_rejected() {
        let a = SparseMatrix::from_entries(2, [(0, 1, c(1.0))]);
        let b = SparseMatrix::from_entries(2, [(1, 0, c(1.0))]);
        let kernel = vec![KernelBlock {
            members: vec![0, 1],
            matrix: DMatrix::from_row_slice(2, 2, &[c(1.0), c(2.0), c(2.0), c(1.0)]),
        }];
        let err = GeneratorMatrices::from_parts(2, SparseMatrix::new(2), vec![a, b], kernel, true);
        assert!(matches!(err, Err(Error::KernelNotPsd { .. })));
    }

    #[test]
    fn guard_and_zero_step() {
        let gen = damping(1.0, 0.0);
        let rho = DensityMatrix::basis_state(2, 1);
        assert_eq!(evolve_step(&gen, &rho, 0.0).unwrap(), rho);
        assert!(matches!(evolve_step(&gen, &rho, 1.0), Err(Error::ValidityGuard(_))));
        let next = evolve_step(&gen, &rho, 0.01).unwrap();
        assert!((next.matrix()[(1, 1)].re - 0.99).abs() < 1e-15);
    }
}
