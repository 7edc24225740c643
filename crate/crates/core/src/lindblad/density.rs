use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{invalid, Result};
use crate::lindblad::grid::FockBasis;
use crate::lindblad::hermiticity_defect;
use crate::C64;

/// Hermitian, unit-trace, positive semidefinite matrix over a [`FockBasis`].
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix(DMatrix<C64>);

impl DensityMatrix {
    /// Validates Hermiticity and unit trace to 1e-12 and eigenvalues to
    /// -1e-10.
    pub fn from_matrix(m: DMatrix<C64>) -> Result<Self> {
        if !m.is_square() {
            return Err(invalid("density matrix must be square"));
        }
        let herm = hermiticity_defect(&m);
        if herm > 1e-12 {
            return Err(invalid(format!("density matrix is not Hermitian (defect {herm:e})")));
        }
        let tr = m.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > 1e-12 {
            return Err(invalid(format!("density matrix trace is {tr}, expected 1")));
        }
        let min = min_eigenvalue(&m);
        if min < -1e-10 {
            return Err(invalid(format!("density matrix has negative eigenvalue {min:e}")));
        }
        Ok(Self(m))
    }

    /// Pure state `|ψ⟩⟨ψ|`, normalizing `ψ`.
    pub fn pure(amplitudes: &DVector<C64>) -> Result<Self> {
        let norm = amplitudes.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(invalid("state vector must be nonzero and finite"));
        }
        let psi = amplitudes / C64::new(norm, 0.0);
        Ok(Self(&psi * psi.adjoint()))
    }

    /// `|b⟩⟨b|` for the basis state with index `b`.
    pub fn basis_state(dim: usize, b: usize) -> Self {
        let mut m = DMatrix::zeros(dim, dim);
        m[(b, b)] = C64::new(1.0, 0.0);
        Self(m)
    }

    /// Random mixed state `G G† / Tr(G G†)` with a complex Gaussian `dim × rank`
    /// matrix `G`.
    pub fn random<R: Rng>(dim: usize, rank: usize, rng: &mut R) -> Self {
        let g = DMatrix::from_fn(dim, rank.max(1), |_, _| {
            C64::new(standard_normal(rng), standard_normal(rng))
        });
        let m = &g * g.adjoint();
        let tr = m.trace().re;
        let mut m = m / C64::new(tr, 0.0);
        // remove rounding asymmetry so the state is exactly Hermitian
        m = (&m + m.adjoint()) * C64::new(0.5, 0.0);
        Self(m)
    }

    pub(crate) fn from_trusted(m: DMatrix<C64>) -> Self {
        Self(m)
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    /// `Tr ρ²`.
    pub fn purity(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Populations of the vacuum, one- and two-particle sectors.
    pub fn sector_populations(&self, basis: &FockBasis) -> [f64; 3] {
        let mut pops = [0.0; 3];
        for (k, s) in basis.states().iter().enumerate() {
            pops[s.sector()] += self.0[(k, k)].re;
        }
        pops
    }

    pub fn min_eigenvalue(&self) -> f64 {
        min_eigenvalue(&self.0)
    }
}

pub(crate) fn min_eigenvalue(m: &DMatrix<C64>) -> f64 {
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    h.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

/// Standard normal deviate by Box–Muller.
fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}
