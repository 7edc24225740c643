use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::C64;

/// Coordinate-list complex matrix. Entries are kept in insertion order, which
/// makes every product below deterministic.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseMatrix {
    pub dim: usize,
    entries: Vec<(usize, usize, C64)>,
}

impl SparseMatrix {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            entries: Vec::new(),
        }
    }

    /// Builds from entries, summing duplicates and dropping exact zeros.
    pub fn from_entries(dim: usize, entries: impl IntoIterator<Item = (usize, usize, C64)>) -> Self {
        let mut acc: BTreeMap<(usize, usize), C64> = BTreeMap::new();
        for (i, j, v) in entries {
            *acc.entry((i, j)).or_default() += v;
        }
        Self {
            dim,
            entries: acc
                .into_iter()
                .filter(|(_, v)| *v != C64::new(0.0, 0.0))
                .map(|((i, j), v)| (i, j, v))
                .collect(),
        }
    }

    pub fn entries(&self) -> &[(usize, usize, C64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_entries(self.dim, self.entries.iter().map(|&(i, j, v)| (j, i, v.conj())))
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for &(i, j, v) in &self.entries {
            m[(i, j)] += v;
        }
        m
    }

    /// `self * other`.
    pub fn product(&self, other: &Self) -> Self {
        let mut rows: BTreeMap<usize, Vec<(usize, C64)>> = BTreeMap::new();
        for &(k, j, v) in &other.entries {
            rows.entry(k).or_default().push((j, v));
        }
        let terms = self
            .entries
            .iter()
            .flat_map(|&(i, k, a)| rows.get(&k).into_iter().flatten().map(move |&(j, b)| (i, j, a * b)));
        Self::from_entries(self.dim, terms.collect::<Vec<_>>())
    }

    /// `self * rho`.
    pub fn mul_left(&self, rho: &DMatrix<C64>) -> DMatrix<C64> {
        let mut out = DMatrix::zeros(self.dim, rho.ncols());
        for &(i, j, v) in &self.entries {
            for c in 0..rho.ncols() {
                out[(i, c)] += v * rho[(j, c)];
            }
        }
        out
    }

    /// `rho * self`.
    pub fn mul_right(&self, rho: &DMatrix<C64>) -> DMatrix<C64> {
        let mut out = DMatrix::zeros(rho.nrows(), self.dim);
        for &(i, j, v) in &self.entries {
            for r in 0..rho.nrows() {
                out[(r, j)] += rho[(r, i)] * v;
            }
        }
        out
    }

    /// `self * rho * self†` accumulated into `out`.
    pub fn sandwich_into(&self, rho: &DMatrix<C64>, out: &mut DMatrix<C64>) {
        for &(i, j, a) in &self.entries {
            for &(k, l, b) in &self.entries {
                out[(i, k)] += a * rho[(j, l)] * b.conj();
            }
        }
    }

    /// Largest deviation from Hermiticity, `max |A_ij - conj(A_ji)|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let dense = self.to_dense();
        crate::lindblad::hermiticity_defect(&dense)
    }
}
