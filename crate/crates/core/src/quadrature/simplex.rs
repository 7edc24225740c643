use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::OnceLock;

use crate::error::{invalid, Error, Result};
use crate::quadrature::LoopValue;
use crate::C64;

/// Values of `z4 = 1 - z1 - z2 - z3` at or above this are clamped to zero.
const CLAMP_FLOOR: f64 = -1e-14;

/// Controls of the adaptive simplex integrator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimplexOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Maximum number of bisections before giving up.
    pub max_subdivisions: usize,
}

impl SimplexOptions {
    pub fn relative(rel_tol: f64) -> Self {
        Self {
            rel_tol,
            ..Self::default()
        }
    }
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 0.0,
            max_subdivisions: 200_000,
        }
    }
}

/// Sub-simplex of `{z_i >= 0, Σ z_i = 1}` given by its four corners in
/// barycentric (Feynman-parameter) coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimplexRegion {
    pub vertices: [[f64; 4]; 4],
}

impl SimplexRegion {
    /// The full parameter simplex.
    pub fn standard() -> Self {
        let mut vertices = [[0.0; 4]; 4];
        for (i, v) in vertices.iter_mut().enumerate() {
            v[i] = 1.0;
        }
        Self { vertices }
    }

    /// Volume measured in the free coordinates `(z1, z2, z3)`; the standard
    /// region has volume 1/6.
    pub fn volume(&self) -> f64 {
        let v = &self.vertices;
        let e = |k: usize| [v[k][0] - v[0][0], v[k][1] - v[0][1], v[k][2] - v[0][2]];
        let (a, b, c) = (e(1), e(2), e(3));
        let det = a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0])
            + a[2] * (b[0] * c[1] - b[1] * c[0]);
        det.abs() / 6.0
    }

    /// Splits the longest edge at its midpoint.
    pub fn bisect(&self) -> (Self, Self) {
        let v = &self.vertices;
        let mut best = (0, 1, -1.0);
        for i in 0..4 {
            for j in i + 1..4 {
                let d: f64 = (0..4).map(|k| (v[i][k] - v[j][k]).powi(2)).sum();
                if d > best.2 {
                    best = (i, j, d);
                }
            }
        }
        let (i, j, _) = best;
        let mid: [f64; 4] = std::array::from_fn(|k| 0.5 * (v[i][k] + v[j][k]));
        let mut left = *self;
        let mut right = *self;
        left.vertices[j] = mid;
        right.vertices[i] = mid;
        (left, right)
    }

    fn point(&self, bary: &[f64; 4]) -> [f64; 4] {
        let mut z = [0.0; 4];
        for (w, vert) in bary.iter().zip(&self.vertices) {
            for k in 0..3 {
                z[k] += w * vert[k];
            }
        }
        for c in z.iter_mut().take(3) {
            if *c < 0.0 && *c >= CLAMP_FLOOR {
                *c = 0.0;
            }
        }
        z[3] = 1.0 - z[0] - z[1] - z[2];
        if z[3] < 0.0 && z[3] >= CLAMP_FLOOR {
            z[3] = 0.0;
        }
        z
    }
}

/// Grundmann–Möller rule of degree 7 on the 3-simplex together with the
/// embedded degree-5 rule (it reuses a subset of the nodes). Weights are
/// normalized to unit volume.
struct EmbeddedRule {
    nodes: Vec<[f64; 4]>,
    high: Vec<f64>,
    low: Vec<f64>,
}

fn rule() -> &'static EmbeddedRule {
    static RULE: OnceLock<EmbeddedRule> = OnceLock::new();
    RULE.get_or_init(|| {
        let high = grundmann_moller(3);
        let low = grundmann_moller(2);
        let mut nodes: Vec<[f64; 4]> = high.iter().map(|(p, _)| *p).collect();
        let mut high_w: Vec<f64> = high.iter().map(|(_, w)| *w).collect();
        let mut low_w = vec![0.0; nodes.len()];
        for (p, w) in low {
            match nodes
                .iter()
                .position(|q| q.iter().zip(&p).all(|(a, b)| (a - b).abs() < 1e-15))
            {
                Some(k) => low_w[k] += w,
                None => {
                    nodes.push(p);
                    high_w.push(0.0);
                    low_w.push(w);
                }
            }
        }
        EmbeddedRule {
            nodes,
            high: high_w,
            low: low_w,
        }
    })
}

/// Nodes (barycentric) and weights of the Grundmann–Möller rule of degree
/// `2s + 1` on the 3-simplex, normalized so that the weights sum to one.
fn grundmann_moller(s: usize) -> Vec<([f64; 4], f64)> {
    const N: usize = 3;
    let d = 2 * s + 1;
    let factorial = |k: usize| (1..=k).fold(1.0_f64, |acc, v| acc * v as f64);
    let mut out = Vec::new();
    for i in 0..=s {
        let denom = (d + N - 2 * i) as f64;
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        // Unit-volume normalization: the textbook weight times n!.
        let weight = sign * 2f64.powi(-2 * s as i32) * denom.powi(d as i32) * factorial(N)
            / (factorial(i) * factorial(d + N - i));
        for beta in compositions(s - i, N + 1) {
            let p: [f64; 4] = std::array::from_fn(|j| (2 * beta[j] + 1) as f64 / denom);
            out.push((p, weight));
        }
    }
    out
}

/// All ways of writing `total` as an ordered sum of `parts` nonnegative integers.
fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 1 {
        return vec![vec![total]];
    }
    (0..=total)
        .flat_map(|first| {
            compositions(total - first, parts - 1).into_iter().map(move |mut rest| {
                rest.insert(0, first);
                rest
            })
        })
        .collect()
}

struct Scored {
    region: SimplexRegion,
    estimate: C64,
    error: f64,
}

impl PartialEq for Scored {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl Eq for Scored {}
impl PartialOrd for Scored {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Scored {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn evaluate<F>(f: &F, region: SimplexRegion) -> Result<Scored>
where
    F: Fn([f64; 4]) -> C64,
{
    let r = rule();
    let vol = region.volume();
    let mut high = C64::new(0.0, 0.0);
    let mut low = C64::new(0.0, 0.0);
    for ((node, wh), wl) in r.nodes.iter().zip(&r.high).zip(&r.low) {
        let z = region.point(node);
        let v = f(z);
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::NonFinite { point: z.to_vec() });
        }
        high += v * *wh;
        low += v * *wl;
    }
    Ok(Scored {
        region,
        estimate: high * vol,
        error: ((high - low) * vol).norm(),
    })
}

/// Integrates `f(z1, z2, z3, z4)` over the Feynman-parameter simplex with
/// `z4 = 1 - z1 - z2 - z3`, the delta constraint consumed by the engine; a
/// constant integrand `1` gives `1/6`. `tol` is relative.
pub fn integrate_simplex<F>(f: F, tol: f64) -> Result<LoopValue>
where
    F: Fn([f64; 4]) -> C64,
{
    integrate_simplex_with(f, &SimplexOptions::relative(tol))
}

/// [`integrate_simplex`] with full control over tolerances and budget.
pub fn integrate_simplex_with<F>(f: F, opts: &SimplexOptions) -> Result<LoopValue>
where
    F: Fn([f64; 4]) -> C64,
{
    if !(opts.rel_tol > 0.0 || opts.abs_tol > 0.0) {
        return Err(invalid("simplex tolerance must be positive"));
    }
    let first = evaluate(&f, SimplexRegion::standard())?;
    let mut total = first.estimate;
    let mut error = first.error;
    let mut heap = BinaryHeap::from([first]);
    let mut subdivisions = 0;
    let target = |total: C64| opts.abs_tol.max(opts.rel_tol * total.norm());

    while error > target(total) && subdivisions < opts.max_subdivisions {
        let worst = heap.pop().expect("heap is never empty");
        let (a, b) = worst.region.bisect();
        let (a, b) = (evaluate(&f, a)?, evaluate(&f, b)?);
        total += a.estimate + b.estimate - worst.estimate;
        error += a.error + b.error - worst.error;
        heap.push(a);
        heap.push(b);
        subdivisions += 1;
        if subdivisions % 1024 == 0 {
            // Re-sum to keep running totals free of cancellation drift.
            total = heap.iter().map(|s| s.estimate).sum();
            error = heap.iter().map(|s| s.error).sum();
        }
    }
    let regions = heap.into_sorted_vec();
    let total: C64 = regions.iter().map(|s| s.estimate).sum();
    let error: f64 = regions.iter().map(|s| s.error).sum();
    let converged = error <= target(total);
    if !converged {
        log::debug!("simplex budget exhausted after {subdivisions} subdivisions, error {error:e}");
    }
    Ok(LoopValue::new(total, error, converged))
}
