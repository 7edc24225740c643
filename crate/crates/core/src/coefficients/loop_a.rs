use std::cell::Cell;
use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::kinematics::Mandelstam;
use crate::params::ModelParams;
use crate::quadrature::{extrapolate_eps_report, gauss_legendre, integrate_interval_complex, LoopValue, Parity};
use crate::C64;

/// Factor `3! = 1/vol(simplex)` applied to the raw simplex integral, so that
/// the Feynman-parameter measure has unit mass. With it the low-energy limit
/// `s = t = u = m_s = 0` is `3i/((4π)² m_E⁴)`.
pub const SIMPLEX_MEASURE_NORMALIZATION: f64 = 6.0;

/// Denominators `M_j²(z)` of the three box orderings (`j = 1, 2, 3`).
pub fn mass_squared(j: usize, z: [f64; 4], m: &Mandelstam, m_s: f64, m_e: f64) -> f64 {
    let [z1, z2, z3, z4] = z;
    let base = m_e * m_e - (z1 + z4) * (z2 + z3) * m_s * m_s;
    match j {
        1 => base + z2 * z3 * m.t + z1 * z4 * m.u,
        2 => base + z2 * z3 * m.t + z1 * z4 * m.s,
        3 => base + z2 * z3 * m.s + z1 * z4 * m.u,
        _ => panic!("box ordering index must be 1, 2 or 3, got {j}"),
    }
}

/// Box function with its iε diagnostics.
#[derive(Clone, Debug)]
pub struct LoopAReport {
    pub value: LoopValue,
    pub parity: Parity,
    /// Raw `Σ_j ∫ 1/(M_j² - iε)²` (unit-mass measure) at each absolute iε.
    pub samples: Vec<(f64, LoopValue)>,
    pub residual: f64,
    pub monotone: bool,
}

/// `𝒜(s,t,u) = i/(4π)² Σ_j ∫ dz δ(1 - Σz) 1/(M_j² - iε)²` in the limit ε → 0⁺.
pub fn loop_a(m: &Mandelstam, params: &ModelParams) -> Result<LoopValue> {
    Ok(loop_a_report(m, params)?.value)
}

/// Imaginary part of [`loop_a`], the only part entering the Hamiltonian term.
pub fn im_loop_a(m: &Mandelstam, params: &ModelParams) -> Result<LoopValue> {
    let v = loop_a(m, params)?;
    Ok(LoopValue::real(v.im(), v.abs_error, v.converged))
}

/// [`loop_a`] with diagnostics. The function is symmetric under `t ↔ u`
/// (relabel `z₁ ↔ z₂`, `z₃ ↔ z₄`); it is evaluated with `t <= u` so that
/// swapped inputs give bit-identical results.
pub fn loop_a_report(m: &Mandelstam, params: &ModelParams) -> Result<LoopAReport> {
    let canonical = if m.t <= m.u { *m } else { m.swap_tu() };
    loop_a_ordered(&canonical, params)
}

pub(crate) fn loop_a_ordered(m: &Mandelstam, params: &ModelParams) -> Result<LoopAReport> {
    params.validate()?;
    let (m_s, m_e) = (params.m_s, params.m_e);
    let parity = if euclidean_lower_bound(m, m_s, m_e) > 1e-12 * m_e * m_e {
        Parity::RealAnalytic
    } else {
        Parity::General
    };
    let abs_tol = params.tol * 1e-4 / m_e.powi(4);
    let scale = m_e * m_e;
    let schedule = &params.epsilon_schedule;
    let ext = extrapolate_eps_report(
        |rel_eps| {
            let raw = feynman_integral(m, m_s, m_e, rel_eps * scale, params.tol, abs_tol)?;
            Ok(raw.scale(C64::new(SIMPLEX_MEASURE_NORMALIZATION, 0.0)))
        },
        schedule,
        parity,
    )?;
    let prefactor = C64::new(0.0, 1.0 / (16.0 * PI * PI));
    Ok(LoopAReport {
        value: ext.value.scale(prefactor),
        parity,
        samples: ext.samples.into_iter().map(|(e, v)| (e * scale, v)).collect(),
        residual: ext.residual,
        monotone: ext.monotone,
    })
}

/// `Σ_j ∫ dz₁dz₂dz₃ 1/(M_j² - iε)²` over the standard simplex.
///
/// With `z₄ = 1 - z₁ - z₂ - z₃` every `M_j²` is a quadratic in `z₃` with
/// leading coefficient `m_s²`, so the `z₃` integral is done in closed form and
/// the remaining triangle by nested adaptive Gauss–Kronrod.
fn feynman_integral(m: &Mandelstam, m_s: f64, m_e: f64, eps: f64, rel_tol: f64, abs_tol: f64) -> Result<LoopValue> {
    let ms2 = m_s * m_s;
    let couplings = [(m.t, m.u), (m.t, m.s), (m.s, m.u)];
    let inner_ok = Cell::new(true);
    let failure: Cell<Option<Error>> = Cell::new(None);
    let outer = |z1: f64| {
        let inner = integrate_interval_complex(
            |z2| {
                let len = 1.0 - z1 - z2;
                if len <= 0.0 {
                    return C64::new(0.0, 0.0);
                }
                couplings
                    .iter()
                    .map(|&(a_cpl, b_cpl)| {
                        let b = -ms2 * (z1 + len - z2) + z2 * a_cpl - z1 * b_cpl;
                        let c = m_e * m_e - ms2 * (z1 + len) * z2 + z1 * len * b_cpl;
                        inverse_square_integral(ms2, b, C64::new(c, -eps), len)
                    })
                    .sum()
            },
            0.0,
            1.0 - z1,
            &[],
            0.1 * rel_tol,
            0.1 * abs_tol,
        );
        match inner {
            Ok(v) => {
                if !v.converged {
                    inner_ok.set(false);
                }
                v.value
            }
            Err(e) => {
                failure.set(Some(e));
                C64::new(f64::NAN, 0.0)
            }
        }
    };
    let result = integrate_interval_complex(outer, 0.0, 1.0, &[], rel_tol, abs_tol);
    if let Some(e) = failure.take() {
        return Err(e);
    }
    let v = result?;
    Ok(LoopValue::new(v.value, v.abs_error, v.converged && inner_ok.get()))
}

/// `∫₀^len dx / (a x² + b x + c)²` for real `a, b` and `Im c < 0`, so the
/// quadratic has no real zero.
///
/// Uses the partial-fraction antiderivative with a cancellation-free root
/// pair; when the quadratic barely varies over the interval an 8-point
/// Gauss–Legendre rule is used instead.
pub(crate) fn inverse_square_integral(a: f64, b: f64, c: C64, len: f64) -> C64 {
    let variation = (a.abs() * len * len + b.abs() * len) / c.norm();
    if variation < 0.05 {
        let (nodes, weights) = legendre8();
        let h = 0.5 * len;
        return nodes
            .iter()
            .zip(weights)
            .map(|(t, w)| {
                let x = h * (1.0 + t);
                (c + x * (b + a * x)).powi(-2) * (w * h)
            })
            .sum();
    }
    let disc = C64::new(b * b, 0.0) - c * (4.0 * a);
    let w = disc.sqrt();
    let sign = if (w.conj() * b).re >= 0.0 { 1.0 } else { -1.0 };
    // roots are q/a (possibly at infinity) and c/q
    let q = (w * sign + b) * -0.5;
    let far = ln_1p(-(q.inv() * (a * len)));
    let near = ln_1p(-(q / c) * len);
    let log_part = (far - near) / (w * -sign);
    let d = -disc;
    let qlen = c + len * (b + a * len);
    ((qlen.inv() * (2.0 * a * len + b)) - c.inv() * b) / d + log_part * (2.0 * a) / d
}

fn legendre8() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(8))
}

/// `ln(1 + z)`, accurate for small `|z|`.
fn ln_1p(z: C64) -> C64 {
    if z.norm() < 1e-3 {
        // alternating series, truncation below 1e-21
        let mut term = z;
        let mut sum = C64::new(0.0, 0.0);
        for k in 1..=7 {
            sum += term / k as f64 * if k % 2 == 1 { 1.0 } else { -1.0 };
            term *= z;
        }
        sum
    } else {
        (z + 1.0).ln()
    }
}

/// Lower bound of `min_j min_z M_j²` over the simplex. With `a = z₁ + z₄`,
/// `z₂z₃ <= (1-a)²/4` and `z₁z₄ <= a²/4`, so each `M_j²` is bounded below by
/// a quadratic in `a` whose minimum on `[0, 1]` is found exactly.
fn euclidean_lower_bound(m: &Mandelstam, m_s: f64, m_e: f64) -> f64 {
    [(m.t, m.u), (m.t, m.s), (m.s, m.u)]
        .into_iter()
        .map(|(inner, outer)| {
            let b = 0.25 * inner.min(0.0);
            let a = 0.25 * outer.min(0.0);
            let ms2 = m_s * m_s;
            // q(x) = m_E² + a x² + b (1-x)² - m_s² x (1-x)
            let (c0, c1, c2) = (m_e * m_e + b, -2.0 * b - ms2, a + b + ms2);
            let q = |x: f64| c0 + c1 * x + c2 * x * x;
            let mut lo = q(0.0).min(q(1.0));
            if c2 > 0.0 {
                let x = -c1 / (2.0 * c2);
                if (0.0..=1.0).contains(&x) {
                    lo = lo.min(q(x));
                }
            }
            lo
        })
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_energy_limit() {
        let params = ModelParams::new(0.2, 0.0, 1.0);
        let v = loop_a(&Mandelstam::new(0.0, 0.0, 0.0), &params).unwrap();
        let expected = 3.0 / (16.0 * PI * PI);
        assert!((v.im() - expected).abs() < 1e-6 * expected);
        assert!(v.re().abs() < 1e-8);
        assert!(v.converged);
    }

    #[test]
    fn mass_dimension() {
        let params = ModelParams::new(0.2, 0.0, 2.0);
        let v = loop_a(&Mandelstam::new(0.0, 0.0, 0.0), &params).unwrap();
        let expected = 3.0 / (16.0 * PI * PI) / 16.0;
        assert!((v.im() - expected).abs() < 1e-6 * expected);
    }

    #[test]
    fn closed_inner_integral_matches_quadrature() {
        let cases = [
            (0.0, 1.3, C64::new(-0.4, -0.0125)),
            (1e-9, -2.0, C64::new(0.7, -0.0125)),
            (4e-4, 0.9, C64::new(-0.3, -0.05)),
            (2.25, -3.0, C64::new(1.0, -0.1)),
            (1.0, -2.0, C64::new(1.0, -0.0125)),
            (0.5, 0.01, C64::new(2.0, -0.0125)),
        ];
        for (a, b, c) in cases {
            let len = 0.8;
            let exact = inverse_square_integral(a, b, c, len);
            let quad =
                integrate_interval_complex(|x| (c + x * (b + a * x)).powi(-2), 0.0, len, &[], 1e-13, 0.0).unwrap();
            assert!(
                (exact - quad.value).norm() < 1e-10 * quad.value.norm(),
                "{a} {b} {c}: {exact} vs {quad:?}"
            );
        }
    }

    #[test]
    fn reduced_route_matches_simplex_cubature() {
        use crate::quadrature::integrate_simplex;
        let (m_s, m_e, eps) = (0.7, 1.0, 0.1);
        for m in [Mandelstam::new(-1.0, 0.5, 0.3), Mandelstam::new(-6.0, 0.5, 1.0)] {
            let direct = integrate_simplex(
                |z| {
                    (1..=3)
                        .map(|j| C64::new(mass_squared(j, z, &m, m_s, m_e), -eps).powi(-2))
                        .sum()
                },
                1e-7,
            )
            .unwrap();
            let reduced = feynman_integral(&m, m_s, m_e, eps, 1e-9, 0.0).unwrap();
            assert!(
                (direct.value - reduced.value).norm() < 1e-6 * reduced.value.norm(),
                "{direct:?} {reduced:?}"
            );
        }
    }

    #[test]
    fn lower_bound_is_a_bound() {
        let m = Mandelstam::new(-3.0, 0.4, 0.9);
        let (m_s, m_e) = (0.5, 1.0);
        let lb = euclidean_lower_bound(&m, m_s, m_e);
        let n = 24;
        for i in 0..=n {
            for j in 0..=n - i {
                for k in 0..=n - i - j {
                    let z1 = i as f64 / n as f64;
                    let z2 = j as f64 / n as f64;
                    let z3 = k as f64 / n as f64;
                    let z = [z1, z2, z3, 1.0 - z1 - z2 - z3];
                    for jj in 1..=3 {
                        assert!(mass_squared(jj, z, &m, m_s, m_e) >= lb - 1e-12);
                    }
                }
            }
        }
    }
}
