//! Four-vectors in the mostly-plus metric, boosts, rotations and Mandelstam
//! invariants.

use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{invalid, Result};

/// Tolerance on `|axis| - 1` accepted by boosts and rotations.
const AXIS_TOLERANCE: f64 = 1e-9;

/// Four-momentum `(t, x, y, z)` with metric `diag(-1, 1, 1, 1)`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FourVector {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl FourVector {
    pub const fn new(t: f64, x: f64, y: f64, z: f64) -> Self {
        Self { t, x, y, z }
    }

    pub fn spatial(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    /// Minkowski product `-a.t b.t + a·b`.
    pub fn dot(&self, other: &Self) -> f64 {
        -self.t * other.t + self.x * other.x + self.y * other.y + self.z * other.z
    }

    /// Invariant square; `-m²` for an on-shell momentum of mass `m`.
    pub fn square(&self) -> f64 {
        self.dot(self)
    }

    /// Euclidean norm of the spatial part.
    pub fn three_norm(&self) -> f64 {
        norm3(self.spatial())
    }

    /// Invariant mass `sqrt(-p²)`, zero for spacelike vectors.
    pub fn invariant_mass(&self) -> f64 {
        (-self.square()).max(0.0).sqrt()
    }

    /// Active boost with the given rapidity along a unit axis.
    pub fn boost(&self, rapidity: f64, axis: [f64; 3]) -> Result<Self> {
        let n = unit_axis(axis)?;
        let (sh, ch) = (rapidity.sinh(), rapidity.cosh());
        let parallel = self.x * n[0] + self.y * n[1] + self.z * n[2];
        let shift = (ch - 1.0) * parallel + self.t * sh;
        Ok(Self {
            t: self.t * ch + parallel * sh,
            x: self.x + n[0] * shift,
            y: self.y + n[1] * shift,
            z: self.z + n[2] * shift,
        })
    }

    /// Active rotation of the spatial part by `angle` about a unit axis.
    pub fn rotate(&self, axis: [f64; 3], angle: f64) -> Result<Self> {
        let n = unit_axis(axis)?;
        let v = self.spatial();
        let (s, c) = angle.sin_cos();
        let cross = cross3(n, v);
        let along = dot3(n, v) * (1.0 - c);
        let r = std::array::from_fn::<f64, 3, _>(|i| v[i] * c + cross[i] * s + n[i] * along);
        Ok(Self::new(self.t, r[0], r[1], r[2]))
    }

    /// Boost taking a vector at rest in the frame of `total` to the frame in
    /// which `total` has its given components: `(rapidity, axis)`, or `None`
    /// when `total` is already at rest.
    pub fn rest_frame_boost(total: &Self) -> Option<(f64, [f64; 3])> {
        let p = total.three_norm();
        if p == 0.0 {
            return None;
        }
        let m = total.invariant_mass();
        let axis = total.spatial().map(|c| c / p);
        Some(((p / m).asinh(), axis))
    }
}

impl Add for FourVector {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.t + o.t, self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for FourVector {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.t - o.t, self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for FourVector {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.t, -self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for FourVector {
    type Output = Self;
    fn mul(self, c: f64) -> Self {
        Self::new(self.t * c, self.x * c, self.y * c, self.z * c)
    }
}

/// On-shell four-momentum with energy `sqrt(|p|² + m²)`.
pub fn on_shell(p: [f64; 3], mass: f64) -> FourVector {
    let e = (dot3(p, p) + mass * mass).sqrt();
    FourVector::new(e, p[0], p[1], p[2])
}

/// Free-function form of [`FourVector::boost`].
pub fn boost(v: FourVector, rapidity: f64, axis: [f64; 3]) -> Result<FourVector> {
    v.boost(rapidity, axis)
}

/// Mandelstam invariants of a 2 → 2 process `p1 p2 → pbar1 pbar2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mandelstam {
    pub s: f64,
    pub t: f64,
    pub u: f64,
}

impl Mandelstam {
    pub const fn new(s: f64, t: f64, u: f64) -> Self {
        Self { s, t, u }
    }

    /// The same invariants with `t` and `u` exchanged.
    pub fn swap_tu(self) -> Self {
        Self::new(self.s, self.u, self.t)
    }
}

/// `s = (p1+p2)²`, `t = (p1-pbar1)²`, `u = (p1-pbar2)²`.
pub fn mandelstam(p1: FourVector, p2: FourVector, pbar1: FourVector, pbar2: FourVector) -> Mandelstam {
    Mandelstam {
        s: (p1 + p2).square(),
        t: (p1 - pbar1).square(),
        u: (p1 - pbar2).square(),
    }
}

/// Returns `axis` if it is unit-normalized within tolerance.
pub fn unit_axis(axis: [f64; 3]) -> Result<[f64; 3]> {
    let n = norm3(axis);
    if !n.is_finite() || (n - 1.0).abs() > AXIS_TOLERANCE {
        return Err(invalid(format!("axis {axis:?} is not a unit vector (norm {n})")));
    }
    Ok(axis)
}

pub(crate) fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn norm3(a: [f64; 3]) -> f64 {
    dot3(a, a).sqrt()
}

pub(crate) fn cross3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn on_shell_examples() {
        assert_eq!(on_shell([0.0; 3], 1.0), FourVector::new(1.0, 0.0, 0.0, 0.0));
        assert_eq!(on_shell([3.0, 0.0, 0.0], 4.0), FourVector::new(5.0, 3.0, 0.0, 0.0));
        let p = on_shell([0.7, -0.2, 0.1], 0.5);
        assert_relative_eq!(-p.square(), 0.25, max_relative = 1e-12);
    }

    #[test]
    fn zero_rapidity_is_identity() {
        let v = FourVector::new(1.3, -0.2, 0.5, 0.9);
        assert_eq!(v.boost(0.0, [0.0, 0.6, 0.8]).unwrap(), v);
    }

    #[test]
    fn rest_frame_boost_along_x() {
        let eta = 0.83_f64;
        let b = FourVector::new(2.0, 0.0, 0.0, 0.0).boost(eta, [1.0, 0.0, 0.0]).unwrap();
        assert_relative_eq!(b.t, 2.0 * eta.cosh(), max_relative = 1e-15);
        assert_relative_eq!(b.x, 2.0 * eta.sinh(), max_relative = 1e-15);
        assert_eq!((b.y, b.z), (0.0, 0.0));
    }

    #[test]
    fn non_unit_axis_rejected() {
        let v = FourVector::new(1.0, 0.0, 0.0, 0.0);
        assert!(v.boost(0.1, [1.0, 1.0, 0.0]).is_err());
        assert!(v.rotate([0.0, 0.0, 2.0], 0.3).is_err());
    }

    #[test]
    fn rest_frame_boost_reproduces_total() {
        let total = FourVector::new(3.0, 0.4, -1.1, 0.7);
        let (eta, axis) = FourVector::rest_frame_boost(&total).unwrap();
        let rest = FourVector::new(total.invariant_mass(), 0.0, 0.0, 0.0);
        let back = rest.boost(eta, axis).unwrap();
        for (a, b) in [
            (back.t, total.t),
            (back.x, total.x),
            (back.y, total.y),
            (back.z, total.z),
        ] {
            assert_relative_eq!(a, b, epsilon = 1e-14, max_relative = 1e-13);
        }
    }

    #[test]
    fn mandelstam_examples() {
        let m = 0.7;
        let q = on_shell([0.3, 0.4, 0.0], m);
        let qm = on_shell([-0.3, -0.4, 0.0], m);
        let man = mandelstam(q, qm, q, qm);
        assert_eq!(man.t, 0.0);
        let ecm = q.t + qm.t;
        assert_relative_eq!(man.s, -ecm * ecm, max_relative = 1e-15);
        assert_relative_eq!(man.s + man.t + man.u, -4.0 * m * m, max_relative = 1e-12);
    }
}
