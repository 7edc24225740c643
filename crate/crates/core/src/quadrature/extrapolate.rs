use crate::error::Result;
use crate::params::validate_schedule;
use crate::quadrature::LoopValue;
use crate::C64;

/// What is known about the ε-dependence of the extrapolated quantity.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parity {
    /// No structure assumed: both parts are fitted by a polynomial in ε.
    General,
    /// The integrand has no pole on the domain, so `g` is analytic at ε = 0
    /// with `g(-ε) = conj(g(ε))`: the real part is even, the imaginary part
    /// odd and vanishing in the limit. The real part is fitted in ε².
    RealAnalytic,
}

/// Extrapolated value together with the raw evaluations it came from.
#[derive(Clone, Debug)]
pub struct EpsExtrapolation {
    pub value: LoopValue,
    pub samples: Vec<(f64, LoopValue)>,
    /// Difference between the full fit and the fit without the largest ε.
    pub residual: f64,
    /// Whether successive raw differences shrink along the schedule.
    pub monotone: bool,
}

/// Polynomial extrapolation of `g(ε)` to ε → 0⁺ over a strictly decreasing
/// schedule, assuming no parity structure.
pub fn extrapolate_eps<G>(g: G, schedule: &[f64]) -> Result<LoopValue>
where
    G: FnMut(f64) -> Result<LoopValue>,
{
    Ok(extrapolate_eps_report(g, schedule, Parity::General)?.value)
}

/// Full form of [`extrapolate_eps`] returning the diagnostics.
pub fn extrapolate_eps_report<G>(mut g: G, schedule: &[f64], parity: Parity) -> Result<EpsExtrapolation>
where
    G: FnMut(f64) -> Result<LoopValue>,
{
    validate_schedule(schedule)?;
    let samples = schedule
        .iter()
        .map(|&eps| g(eps).map(|v| (eps, v)))
        .collect::<Result<Vec<_>>>()?;

    let n = samples.len();
    let (value, residual, lebesgue) = match parity {
        Parity::General => {
            let xs: Vec<f64> = schedule.to_vec();
            let re: Vec<f64> = samples.iter().map(|(_, v)| v.re()).collect();
            let im: Vec<f64> = samples.iter().map(|(_, v)| v.im()).collect();
            let full = C64::new(neville_at_zero(&xs, &re), neville_at_zero(&xs, &im));
            let reduced = C64::new(neville_at_zero(&xs[1..], &re[1..]), neville_at_zero(&xs[1..], &im[1..]));
            (full, (full - reduced).norm(), lebesgue_at_zero(&xs))
        }
        Parity::RealAnalytic => {
            let xs: Vec<f64> = schedule.iter().map(|e| e * e).collect();
            let re: Vec<f64> = samples.iter().map(|(_, v)| v.re()).collect();
            let full = neville_at_zero(&xs, &re);
            let reduced = neville_at_zero(&xs[1..], &re[1..]);
            (C64::new(full, 0.0), (full - reduced).abs(), lebesgue_at_zero(&xs))
        }
    };

    let raw_error = samples.iter().map(|(_, v)| v.abs_error).fold(0.0, f64::max);
    let monotone = shrinking_differences(&samples);
    let all_converged = samples.iter().all(|(_, v)| v.converged);
    if !monotone {
        log::warn!("iε extrapolation: raw values do not converge monotonically over the schedule");
    }
    debug_assert_eq!(samples.len(), n);
    Ok(EpsExtrapolation {
        value: LoopValue::new(value, residual + lebesgue * raw_error, all_converged && monotone),
        samples,
        residual,
        monotone,
    })
}

/// Value at 0 of the interpolating polynomial through `(xs, ys)`.
fn neville_at_zero(xs: &[f64], ys: &[f64]) -> f64 {
    let mut p = ys.to_vec();
    let n = xs.len();
    for level in 1..n {
        for i in 0..n - level {
            let (xi, xj) = (xs[i], xs[i + level]);
            p[i] = (xj * p[i] - xi * p[i + 1]) / (xj - xi);
        }
    }
    p[0]
}

/// Σ|ℓ_i(0)|: amplification of data errors by the extrapolation.
fn lebesgue_at_zero(xs: &[f64]) -> f64 {
    (0..xs.len())
        .map(|i| {
            xs.iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &xj)| xj / (xj - xs[i]))
                .product::<f64>()
                .abs()
        })
        .sum()
}

fn shrinking_differences(samples: &[(f64, LoopValue)]) -> bool {
    let scale = samples.iter().map(|(_, v)| v.value.norm()).fold(0.0, f64::max);
    samples.windows(3).all(|w| {
        let d0 = (w[1].1.value - w[0].1.value).norm();
        let d1 = (w[2].1.value - w[1].1.value).norm();
        let slack = 2.0 * (w[0].1.abs_error + w[1].1.abs_error + w[2].1.abs_error) + 1e-13 * scale;
        d1 <= d0 + slack
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::DEFAULT_EPSILON_SCHEDULE;

    #[test]
    fn constant_is_exact() {
        let c = C64::new(2.5, -1.0);
        let r =
            extrapolate_eps_report(|_| Ok(LoopValue::exact(c)), &DEFAULT_EPSILON_SCHEDULE, Parity::General).unwrap();
        assert!((r.value.value - c).norm() < 1e-14);
        assert!(r.residual < 1e-14);
        assert!(r.value.converged);
    }

    #[test]
    fn simple_pole_limit() {
        let g = |e: f64| Ok(LoopValue::exact(C64::new(1.0, 0.0) / C64::new(1.0, -e)));
        let v = extrapolate_eps(g, &DEFAULT_EPSILON_SCHEDULE).unwrap();
        assert!((v.value - C64::new(1.0, 0.0)).norm() < 1e-5);
        assert!(v.abs_error >= (v.value - C64::new(1.0, 0.0)).norm());
    }

    #[test]
    fn parity_mode_on_analytic_function() {
        let g = |e: f64| Ok(LoopValue::exact(C64::new(1.0, 0.0) / C64::new(1.0, -e).powi(2)));
        let r = extrapolate_eps_report(g, &DEFAULT_EPSILON_SCHEDULE, Parity::RealAnalytic).unwrap();
        assert!((r.value.value.re - 1.0).abs() < 1e-9);
        assert_eq!(r.value.value.im, 0.0);
    }

    #[test]
    fn non_monotone_is_flagged() {
        let vals = [1.0, 1.1, 0.2, 5.0];
        let mut k = 0;
        let g = |_e: f64| {
            let v = vals[k];
            k += 1;
            Ok(LoopValue::real(v, 0.0, true))
        };
        let r = extrapolate_eps_report(g, &DEFAULT_EPSILON_SCHEDULE, Parity::General).unwrap();
        assert!(!r.monotone);
        assert!(!r.value.converged);
    }

    #[test]
    fn short_schedule_rejected() {
        assert!(extrapolate_eps(|_| Ok(LoopValue::zero()), &[0.1, 0.05]).is_err());
    }
}
