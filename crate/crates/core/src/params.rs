use crate::error::{invalid, Result};

/// Default iε schedule in units of `m_E²`, largest first.
pub const DEFAULT_EPSILON_SCHEDULE: [f64; 4] = [1e-1, 5e-2, 2.5e-2, 1.25e-2];

/// Model couplings and masses together with the numerical controls shared by
/// every integrator.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    /// Coupling of `λ φ χ²` (mass dimension one).
    pub lambda: f64,
    /// System-field mass.
    pub m_s: f64,
    /// Environment-field mass.
    pub m_e: f64,
    /// iε values in units of `m_E²`, strictly decreasing.
    pub epsilon_schedule: Vec<f64>,
    /// Monte Carlo samples per phase-space integral.
    pub mc_samples: usize,
    /// Base seed of every Monte Carlo estimate.
    pub seed: u64,
    /// Relative tolerance of the simplex and interval integrators.
    pub tol: f64,
    /// Gauss nodes in `cos θ` and uniform nodes in `φ` for angular quadrature.
    pub angular_nodes: [usize; 2],
}

impl ModelParams {
    pub fn new(lambda: f64, m_s: f64, m_e: f64) -> Self {
        Self {
            lambda,
            m_s,
            m_e,
            ..Self::default()
        }
    }

    pub fn with_samples(mut self, n: usize) -> Self {
        self.mc_samples = n;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Checks the parameter invariants. `m_s = 0` is allowed because the box
    /// function has a meaningful massless limit; operations that need an
    /// on-shell `φ` reject it themselves.
    pub fn validate(&self) -> Result<()> {
        if !self.lambda.is_finite() {
            return Err(invalid("lambda must be finite"));
        }
        if !(self.m_s.is_finite() && self.m_s >= 0.0) {
            return Err(invalid(format!("m_s must be >= 0, got {}", self.m_s)));
        }
        if !(self.m_e.is_finite() && self.m_e > 0.0) {
            return Err(invalid(format!("m_E must be > 0, got {}", self.m_e)));
        }
        validate_schedule(&self.epsilon_schedule)?;
        if self.mc_samples == 0 {
            return Err(invalid("mc_samples must be positive"));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(invalid("tol must be positive"));
        }
        if self.angular_nodes.iter().any(|&n| n < 2) {
            return Err(invalid("angular quadrature needs at least 2 nodes per direction"));
        }
        Ok(())
    }

    /// The schedule converted to absolute iε values.
    pub fn epsilons(&self) -> Vec<f64> {
        let scale = self.m_e * self.m_e;
        self.epsilon_schedule.iter().map(|e| e * scale).collect()
    }

    /// Smallest absolute iε of the schedule.
    pub fn smallest_epsilon(&self) -> f64 {
        self.epsilon_schedule.last().copied().unwrap_or(1e-2) * self.m_e * self.m_e
    }
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            lambda: 0.2,
            m_s: 0.02,
            m_e: 1.0,
            epsilon_schedule: DEFAULT_EPSILON_SCHEDULE.to_vec(),
            mc_samples: 1_000_000,
            seed: 0x5eed,
            tol: 1e-8,
            angular_nodes: [128, 64],
        }
    }
}

pub(crate) fn validate_schedule(schedule: &[f64]) -> Result<()> {
    if schedule.len() < 3 {
        return Err(invalid("epsilon schedule needs at least 3 entries"));
    }
    if schedule.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
        return Err(invalid("epsilon schedule entries must be positive"));
    }
    if schedule.windows(2).any(|w| w[1] >= w[0]) {
        return Err(invalid("epsilon schedule must be strictly decreasing"));
    }
    Ok(())
}
