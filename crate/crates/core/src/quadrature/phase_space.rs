use std::f64::consts::PI;
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::kinematics::FourVector;
use crate::quadrature::LoopValue;
use crate::C64;

/// Samples per Monte Carlo block. Each block owns an independent RNG stream,
/// so results do not depend on how blocks are scheduled.
pub const BLOCK_SIZE: usize = 4096;

/// Number of worker threads, read once from `GKSL_THREADS` (default 1).
pub fn worker_count() -> usize {
    std::env::var("GKSL_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or(1)
}

pub(crate) fn pool() -> &'static rayon::ThreadPool {
    static POOL: OnceLock<rayon::ThreadPool> = OnceLock::new();
    POOL.get_or_init(|| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(worker_count())
            .build()
            .expect("failed to build worker pool")
    })
}

/// `∫ d³k₁ d³k₂ /(E₁E₂) δ⁴(P - k₁ - k₂)` for `h ≡ 1`: `2π sqrt(M² - 4m²)/M`
/// above threshold, zero otherwise.
pub fn two_body_measure(total: &FourVector, m: f64) -> f64 {
    let m2 = -total.square();
    if m2 <= 4.0 * m * m {
        return 0.0;
    }
    let mass = m2.sqrt();
    2.0 * PI * (m2 - 4.0 * m * m).sqrt() / mass
}

/// Running mean and second moment of one component (Welford).
#[derive(Clone, Copy, Default)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        let d = x - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (x - self.mean);
    }

    fn merge(self, o: Self) -> Self {
        if self.n == 0.0 {
            return o;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        Self {
            n,
            mean: self.mean + d * o.n / n,
            m2: self.m2 + o.m2 + d * d * self.n * o.n / n,
        }
    }

    fn variance_of_mean(&self) -> f64 {
        if self.n < 2.0 {
            return 0.0;
        }
        (self.m2 / (self.n - 1.0)).max(0.0) / self.n
    }
}

/// Monte Carlo estimate of `∫ d³k₁ d³k₂ /(E₁E₂) δ⁴(total - k₁ - k₂) h(k₁, k₂)`
/// for two particles of mass `m`.
///
/// The deltas are consumed analytically: the CM solid angle is sampled
/// uniformly, back-to-back on-shell momenta are boosted to the frame of
/// `total`, and each sample carries the exact Jacobian. Blocks of
/// [`BLOCK_SIZE`] samples use the ChaCha stream `block_index` of `seed` and
/// are combined in block order, so the result is bit-reproducible for any
/// worker count.
pub fn phase_space_2body<H>(total: FourVector, m: f64, h: H, n: usize, seed: u64) -> Result<LoopValue>
where
    H: Fn(&FourVector, &FourVector) -> C64 + Sync,
{
    if n < 1000 {
        return Err(invalid(format!(
            "phase-space Monte Carlo needs at least 1000 samples, got {n}"
        )));
    }
    if m.is_nan() || m < 0.0 || total.t <= 0.0 {
        return Err(invalid("phase space needs m >= 0 and positive total energy"));
    }
    let measure = two_body_measure(&total, m);
    if measure == 0.0 {
        return Ok(LoopValue::zero());
    }
    let mass = total.invariant_mass();
    let energy = 0.5 * mass;
    let k = (energy * energy - m * m).max(0.0).sqrt();
    let to_lab = FourVector::rest_frame_boost(&total);

    let blocks = n.div_ceil(BLOCK_SIZE);
    let run_block = |b: usize| -> Result<(Moments, Moments)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(b as u64);
        let count = BLOCK_SIZE.min(n - b * BLOCK_SIZE);
        let (mut re, mut im) = (Moments::default(), Moments::default());
        for _ in 0..count {
            let cos_t: f64 = 2.0 * rng.gen::<f64>() - 1.0;
            let phi: f64 = 2.0 * PI * rng.gen::<f64>();
            let sin_t = (1.0 - cos_t * cos_t).max(0.0).sqrt();
            let (sp, cp) = phi.sin_cos();
            let dir = [sin_t * cp, sin_t * sp, cos_t];
            let mut k1 = FourVector::new(energy, k * dir[0], k * dir[1], k * dir[2]);
            let mut k2 = FourVector::new(energy, -k1.x, -k1.y, -k1.z);
            if let Some((eta, axis)) = to_lab {
                k1 = k1.boost(eta, axis)?;
                k2 = k2.boost(eta, axis)?;
            }
            let v = h(&k1, &k2);
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::NonFinite {
                    point: vec![k1.t, k1.x, k1.y, k1.z, k2.t, k2.x, k2.y, k2.z],
                });
            }
            re.push(v.re);
            im.push(v.im);
        }
        Ok((re, im))
    };

    let partials: Vec<Result<(Moments, Moments)>> =
        pool().install(|| (0..blocks).into_par_iter().map(run_block).collect());
    let (mut re, mut im) = (Moments::default(), Moments::default());
    for p in partials {
        let (r, i) = p?;
        re = re.merge(r);
        im = im.merge(i);
    }
    let value = C64::new(re.mean, im.mean) * measure;
    let error = measure * (re.variance_of_mean() + im.variance_of_mean()).sqrt();
    Ok(LoopValue::new(value, error, true))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::on_shell;

    #[test]
    fn constant_integrand_at_rest() {
        let total = FourVector::new(1.0, 0.0, 0.0, 0.0);
        let v = phase_space_2body(total, 0.1, |_, _| C64::new(1.0, 0.0), 5000, 1).unwrap();
        let exact = 2.0 * PI * 0.96f64.sqrt();
        assert!((v.re() - exact).abs() < 1e-12);
        assert_eq!(v.abs_error, 0.0);
    }

    #[test]
    fn below_threshold_is_exact_zero() {
        let total = FourVector::new(0.19, 0.0, 0.0, 0.0);
        let v = phase_space_2body(total, 0.1, |_, _| C64::new(1.0, 0.0), 5000, 1).unwrap();
        assert_eq!(v, LoopValue::zero());
        // exactly at threshold as well
        let total = FourVector::new(0.2, 0.0, 0.0, 0.0);
        assert_eq!(
            phase_space_2body(total, 0.1, |_, _| C64::new(1.0, 0.0), 5000, 1)
                .unwrap()
                .value
                .re,
            0.0
        );
    }

    #[test]
    fn samples_conserve_momentum_in_moving_frame() {
        let total = on_shell([0.4, -0.3, 1.2], 1.0);
        let v = phase_space_2body(
            total,
            0.2,
            |k1, k2| {
                let d = total - *k1 - *k2;
                let off = (k1.square() + 0.04).abs() + (k2.square() + 0.04).abs();
                C64::new(d.t.abs() + d.x.abs() + d.y.abs() + d.z.abs() + off, 0.0)
            },
            2000,
            3,
        )
        .unwrap();
        assert!(v.re().abs() < 1e-12);
    }

    #[test]
    fn too_few_samples_rejected() {
        let total = FourVector::new(1.0, 0.0, 0.0, 0.0);
        assert!(phase_space_2body(total, 0.1, |_, _| C64::new(1.0, 0.0), 999, 1).is_err());
    }

    #[test]
    fn reproducible() {
        let total = on_shell([0.1, 0.2, 0.3], 1.0);
        let h = |k1: &FourVector, _: &FourVector| C64::new(k1.x * k1.x, k1.z);
        let a = phase_space_2body(total, 0.2, h, 10_000, 9).unwrap();
        let b = phase_space_2body(total, 0.2, h, 10_000, 9).unwrap();
        assert_eq!(a, b);
    }
}
