use std::collections::HashMap;
use std::f64::consts::PI;

use crate::error::{invalid, Result};
use crate::kinematics::{on_shell, FourVector};

/// Periodic box of side `box_length` with modes `(2π/L) n`, `|n_i| <= n_max`,
/// and the time regulator `t_eff` that fixes the energy bin `2π/t_eff`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentumGrid {
    pub box_length: f64,
    pub n_max: i32,
    pub t_eff: f64,
}

impl MomentumGrid {
    pub fn new(box_length: f64, n_max: i32, t_eff: f64) -> Result<Self> {
        if !(box_length > 0.0 && box_length.is_finite()) {
            return Err(invalid(format!("box length must be positive, got {box_length}")));
        }
        if n_max < 0 {
            return Err(invalid("n_max must be nonnegative"));
        }
        if !(t_eff > 0.0 && t_eff.is_finite()) {
            return Err(invalid(format!("t_eff must be positive, got {t_eff}")));
        }
        Ok(Self {
            box_length,
            n_max,
            t_eff,
        })
    }

    /// Integer mode labels in lexicographic order; closed under negation.
    pub fn modes(&self) -> Vec<[i32; 3]> {
        let r = -self.n_max..=self.n_max;
        r.clone()
            .flat_map(|x| {
                r.clone()
                    .flat_map(move |y| (-self.n_max..=self.n_max).map(move |z| [x, y, z]))
            })
            .collect()
    }

    pub fn momentum_unit(&self) -> f64 {
        2.0 * PI / self.box_length
    }

    pub fn momentum(&self, n: [i32; 3]) -> [f64; 3] {
        let k = self.momentum_unit();
        n.map(|c| k * c as f64)
    }

    pub fn energy_bin(&self) -> f64 {
        2.0 * PI / self.t_eff
    }

    pub fn volume(&self) -> f64 {
        self.box_length.powi(3)
    }
}

/// Basis state of the truncated Fock space. Two-particle states are
/// unordered: `Two(i, j)` always has `i <= j` (mode indices).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BasisState {
    Vacuum,
    One(usize),
    Two(usize, usize),
}

impl BasisState {
    pub fn sector(&self) -> usize {
        match self {
            Self::Vacuum => 0,
            Self::One(_) => 1,
            Self::Two(..) => 2,
        }
    }
}

/// Vacuum ⊕ one-particle ⊕ two-particle (unordered pairs) over a grid.
#[derive(Clone, Debug)]
pub struct FockBasis {
    pub grid: MomentumGrid,
    modes: Vec<[i32; 3]>,
    states: Vec<BasisState>,
    index: HashMap<BasisState, usize>,
    mode_index: HashMap<[i32; 3], usize>,
}

impl FockBasis {
    pub fn new(grid: MomentumGrid) -> Self {
        let modes = grid.modes();
        let n = modes.len();
        let mut states = vec![BasisState::Vacuum];
        states.extend((0..n).map(BasisState::One));
        for i in 0..n {
            states.extend((i..n).map(|j| BasisState::Two(i, j)));
        }
        let index = states.iter().enumerate().map(|(k, s)| (*s, k)).collect();
        let mode_index = modes.iter().enumerate().map(|(k, m)| (*m, k)).collect();
        Self {
            grid,
            modes,
            states,
            index,
            mode_index,
        }
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[BasisState] {
        &self.states
    }

    pub fn modes(&self) -> &[[i32; 3]] {
        &self.modes
    }

    pub fn index_of(&self, state: BasisState) -> Option<usize> {
        let canonical = match state {
            BasisState::Two(i, j) if i > j => BasisState::Two(j, i),
            s => s,
        };
        self.index.get(&canonical).copied()
    }

    pub fn mode_of(&self, n: [i32; 3]) -> Option<usize> {
        self.mode_index.get(&n).copied()
    }

    /// Basis index of the state built from integer mode labels: no labels for
    /// the vacuum, one or two for particle states.
    pub fn index_of_modes(&self, labels: &[[i32; 3]]) -> Option<usize> {
        let state = match labels {
            [] => BasisState::Vacuum,
            [a] => BasisState::One(self.mode_of(*a)?),
            [a, b] => BasisState::Two(self.mode_of(*a)?, self.mode_of(*b)?),
            _ => return None,
        };
        self.index_of(state)
    }

    /// On-shell momentum of mode `k` for mass `m`.
    pub fn four_momentum(&self, k: usize, m: f64) -> FourVector {
        on_shell(self.grid.momentum(self.modes[k]), m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_modes_per_axis() {
        let basis = FockBasis::new(MomentumGrid::new(4.0, 1, 10.0).unwrap());
        assert_eq!(basis.modes().len(), 27);
        assert_eq!(basis.dim(), 1 + 27 + 27 * 28 / 2);
        for m in basis.modes() {
            assert!(basis.mode_of(m.map(|c| -c)).is_some());
        }
        assert_eq!(
            basis.index_of(BasisState::Two(5, 2)),
            basis.index_of(BasisState::Two(2, 5))
        );
    }
}
