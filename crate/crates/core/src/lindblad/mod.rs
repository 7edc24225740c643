//! Box-regularized GKSL generators on a truncated Fock space and their
//! application to density matrices.

mod assemble;
mod density;
mod generator;
mod grid;
mod sparse;
mod sum_rule;

use nalgebra::DMatrix;

use crate::C64;

pub use assemble::{annihilation, assemble_decay, assemble_pair, DecayRateSource};
pub use density::DensityMatrix;
pub use generator::{
    apply_generator, apply_generator_to, evolve_step, GeneratorMatrices, KernelBlock, KERNEL_DROP_TOLERANCE,
    KERNEL_NEGATIVE_TOLERANCE, STEP_GUARD,
};
pub use grid::{BasisState, FockBasis, MomentumGrid};
pub use sparse::SparseMatrix;
pub use sum_rule::{sum_rule_check, SumRuleEntry, SumRuleReport, SUM_RULE_TOLERANCE};

/// `max |A_ij - conj(A_ji)|`.
pub fn hermiticity_defect(m: &DMatrix<C64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}
