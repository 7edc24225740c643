use std::collections::BinaryHeap;
use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::quadrature::LoopValue;
use crate::C64;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi's initial guess, refined by Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Product rule on the unit sphere: Gauss–Legendre in `cos θ`, uniform
/// midpoints in `φ`. Weights sum to `4π`.
#[derive(Clone, Debug)]
pub struct SphereRule {
    pub directions: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl SphereRule {
    pub fn new(n_theta: usize, n_phi: usize) -> Self {
        let (xs, ws) = gauss_legendre(n_theta);
        let dphi = 2.0 * PI / n_phi as f64;
        let mut directions = Vec::with_capacity(n_theta * n_phi);
        let mut weights = Vec::with_capacity(n_theta * n_phi);
        for (&c, &w) in xs.iter().zip(&ws) {
            let s = (1.0 - c * c).max(0.0).sqrt();
            for j in 0..n_phi {
                let (sp, cp) = ((j as f64 + 0.5) * dphi).sin_cos();
                directions.push([s * cp, s * sp, c]);
                weights.push(w * dphi);
            }
        }
        Self { directions, weights }
    }
}

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_5,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_48,
    0.0,
];
const KRONROD_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_19,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_42,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];
// Gauss weights for the odd-indexed Kronrod nodes (7-point rule).
const GAUSS_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

struct Piece {
    a: f64,
    b: f64,
    value: C64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, o: &Self) -> bool {
        self.error.total_cmp(&o.error).is_eq()
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Piece {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&o.error)
    }
}

fn gk15<F: Fn(f64) -> C64>(f: &F, a: f64, b: f64) -> Result<Piece> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut kronrod = C64::new(0.0, 0.0);
    let mut gauss = C64::new(0.0, 0.0);
    for (k, (&x, &wk)) in GK_NODES.iter().zip(&KRONROD_WEIGHTS).enumerate() {
        let pts: &[f64] = if x == 0.0 { &[0.0] } else { &[x, -x] };
        for &t in pts {
            let xv = c + h * t;
            let v = f(xv);
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::NonFinite { point: vec![xv] });
            }
            kronrod += wk * v;
            if k % 2 == 1 {
                gauss += GAUSS_WEIGHTS[k / 2] * v;
            }
        }
    }
    Ok(Piece {
        a,
        b,
        value: kronrod * h,
        error: ((kronrod - gauss) * h).norm(),
    })
}

/// Adaptive Gauss–Kronrod (7/15) integral of a real function over `[a, b]`.
/// `breakpoints` inside the interval seed the initial partition; use them for
/// known kinks or narrow features.
pub fn integrate_interval<F>(f: F, a: f64, b: f64, breakpoints: &[f64], rel_tol: f64, abs_tol: f64) -> Result<LoopValue>
where
    F: Fn(f64) -> f64,
{
    let v = integrate_interval_complex(|x| C64::new(f(x), 0.0), a, b, breakpoints, rel_tol, abs_tol)?;
    Ok(LoopValue::real(v.re(), v.abs_error, v.converged))
}

/// [`integrate_interval`] for a complex integrand; the error is measured in
/// modulus.
pub fn integrate_interval_complex<F>(
    f: F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    rel_tol: f64,
    abs_tol: f64,
) -> Result<LoopValue>
where
    F: Fn(f64) -> C64,
{
    if a.is_nan() || b.is_nan() || a >= b {
        return Err(invalid(format!("empty interval [{a}, {b}]")));
    }
    let mut cuts = vec![a];
    cuts.extend(breakpoints.iter().copied().filter(|&x| x > a && x < b));
    cuts.push(b);
    cuts.sort_by(f64::total_cmp);
    let mut heap = BinaryHeap::new();
    for w in cuts.windows(2) {
        if w[1] > w[0] {
            heap.push(gk15(&f, w[0], w[1])?);
        }
    }
    let sums = |heap: &BinaryHeap<Piece>| {
        heap.iter()
            .fold((C64::new(0.0, 0.0), 0.0), |(v, e), p| (v + p.value, e + p.error))
    };
    let (mut total, mut error) = sums(&heap);
    let mut splits = 0;
    while error > abs_tol.max(rel_tol * total.norm()) && splits < 20_000 {
        let worst = heap.pop().expect("non-empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            heap.push(worst);
            break;
        }
        let (left, right) = (gk15(&f, worst.a, mid)?, gk15(&f, mid, worst.b)?);
        total += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        splits += 1;
        if splits % 512 == 0 {
            (total, error) = sums(&heap);
        }
    }
    let pieces = heap.into_sorted_vec();
    let total: C64 = pieces.iter().map(|p| p.value).sum();
    let error: f64 = pieces.iter().map(|p| p.error).sum();
    Ok(LoopValue::new(
        total,
        error,
        error <= abs_tol.max(rel_tol * total.norm()),
    ))
}
