//! Lorentz-model geometry.
//!
//! Points live on the upper sheet of the hyperboloid
//! `{x in R^{D+1} : c <x, x>_L = -1, x0 > 0}` where
//! `<x, y>_L = -x0 y0 + x_space . y_space`. The origin is `(1/sqrt(c), 0, ..., 0)`.
//!
//! Besides the distance and the Klein-coordinate maps this module provides the
//! two derived quantities the hierarchy losses are built on:
//!
//! * [`exterior_angle`]: the angle of the triangle `(O, p, s)` at `p`, measured
//!   as the exterior angle. It is `0` when `s` continues the ray from the origin
//!   through `p`, and `pi` when `s` lies back towards the origin.
//! * [`lca_depth_surrogate`]: hyperbolic distance from the origin to the point
//!   of the Klein segment `[k_i, k_j]` closest to the origin.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::{acos, acosh, asinh, atanh, dot, log1p, norm, sqrt};
use crate::{Error, Result};

/// Lower clamp for `(c<p,s>_L)^2 - 1` inside [`exterior_angle`].
pub const ANGLE_EPS: f64 = 1e-12;

/// Relative tolerance of the hyperboloid constraint check.
pub const MANIFOLD_TOL: f64 = 1e-9;

/// Curvature parameter `c > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Curvature(f64);

impl Curvature {
    pub fn new(c: f64) -> Result<Self> {
        if c.is_finite() && c > 0.0 {
            Ok(Self(c))
        } else {
            Err(Error::InvalidCurvature(c))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }

    #[inline]
    pub fn sqrt(self) -> f64 {
        sqrt(self.0)
    }
}

impl Default for Curvature {
    fn default() -> Self {
        Self(1.0)
    }
}

/// Point on the curvature-`c` hyperboloid, stored as `(x0, x_space)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LorentzPoint {
    coords: Vec<f64>,
}

impl LorentzPoint {
    /// Wraps raw ambient coordinates after checking the hyperboloid constraint.
    pub fn new(coords: Vec<f64>, c: Curvature) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::Empty("Lorentz coordinates"));
        }
        if coords.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let p = Self { coords };
        let r = p.manifold_residual(c);
        if r > MANIFOLD_TOL * (1.0 + c.get() * p.time() * p.time()) || p.time() <= 0.0 {
            return Err(Error::OffManifold(r));
        }
        Ok(p)
    }

    /// Wraps coordinates without checking; callers guarantee the constraint.
    pub(crate) fn from_raw(coords: Vec<f64>) -> Self {
        Self { coords }
    }

    pub fn origin(dim: usize, c: Curvature) -> Self {
        let mut coords = vec![0.0; dim + 1];
        coords[0] = 1.0 / c.sqrt();
        Self { coords }
    }

    /// Spatial dimension `D`.
    pub fn dim(&self) -> usize {
        self.coords.len() - 1
    }

    #[inline]
    pub fn time(&self) -> f64 {
        self.coords[0]
    }

    #[inline]
    pub fn space(&self) -> &[f64] {
        &self.coords[1..]
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.coords
    }

    /// `|c <x,x>_L + 1|`.
    pub fn manifold_residual(&self, c: Curvature) -> f64 {
        let ip = -self.time() * self.time() + dot(self.space(), self.space());
        (c.get() * ip + 1.0).abs()
    }

    /// Same point with the spatial part negated.
    pub fn reflect(&self) -> Self {
        let mut coords = self.coords.clone();
        for v in &mut coords[1..] {
            *v = -*v;
        }
        Self { coords }
    }
}

/// Euclidean tangent vector at the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector(pub Vec<f64>);

impl TangentVector {
    pub fn new(u: Vec<f64>) -> Result<Self> {
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self(u))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }
}

/// Point of the open unit ball in Klein coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct KleinPoint(pub Vec<f64>);

impl KleinPoint {
    pub fn new(k: Vec<f64>) -> Result<Self> {
        let n = norm(&k);
        if !(n < 1.0) {
            return Err(Error::OutsideKleinBall(n));
        }
        Ok(Self(k))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// `<x, y>_L = -x0 y0 + x_space . y_space` on raw `(D+1)`-vectors.
pub fn lorentz_inner(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    if x.is_empty() {
        return Err(Error::Empty("Lorentz vector"));
    }
    Ok(inner_unchecked(x, y))
}

#[inline]
pub(crate) fn inner_unchecked(x: &[f64], y: &[f64]) -> f64 {
    -x[0] * y[0] + dot(&x[1..], &y[1..])
}

/// `(sqrt(1/c + |u|^2), u)`.
pub fn project_to_hyperboloid(u: &TangentVector, c: Curvature) -> Result<LorentzPoint> {
    if u.0.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(project_raw(&u.0, c))
}

pub(crate) fn project_raw(u: &[f64], c: Curvature) -> LorentzPoint {
    let mut coords = Vec::with_capacity(u.len() + 1);
    coords.push(sqrt(1.0 / c.get() + dot(u, u)));
    coords.extend_from_slice(u);
    LorentzPoint { coords }
}

fn check_on_manifold(x: &LorentzPoint, c: Curvature) -> Result<()> {
    let r = x.manifold_residual(c);
    if r > MANIFOLD_TOL * (1.0 + c.get() * x.time() * x.time()) {
        return Err(Error::OffManifold(r));
    }
    Ok(())
}

fn check_same_dim(x: &LorentzPoint, y: &LorentzPoint) -> Result<()> {
    if x.coords.len() != y.coords.len() {
        return Err(Error::DimensionMismatch {
            expected: x.coords.len(),
            got: y.coords.len(),
        });
    }
    Ok(())
}

/// `(1/sqrt(c)) acosh(max(-c <x,y>_L, 1))`.
pub fn geodesic_distance(x: &LorentzPoint, y: &LorentzPoint, c: Curvature) -> Result<f64> {
    check_same_dim(x, y)?;
    check_on_manifold(x, c)?;
    check_on_manifold(y, c)?;
    Ok(distance_unchecked(x.as_slice(), y.as_slice(), c))
}

/// `-c <x,y>_L - 1` for on-manifold points, from the Lorentz norm of the
/// difference: `(c/2) <x-y, x-y>_L`. Exact zero for `x == y`.
#[inline]
pub(crate) fn cosh_minus_one(x: &[f64], y: &[f64], c: Curvature) -> f64 {
    let d0 = x[0] - y[0];
    let mut l = -d0 * d0;
    for (a, b) in x[1..].iter().zip(&y[1..]) {
        l += (a - b) * (a - b);
    }
    0.5 * c.get() * l
}

/// Same value as `acosh(max(-c<x,y>_L, 1)) / sqrt(c)`, evaluated as
/// `log1p(y + sqrt(y (y + 2)))` with `y = -c<x,y>_L - 1` to keep precision
/// for nearby points.
#[inline]
pub(crate) fn distance_unchecked(x: &[f64], y: &[f64], c: Curvature) -> f64 {
    let t = cosh_minus_one(x, y, c).max(0.0);
    log1p(t + sqrt(t * (t + 2.0))) / c.sqrt()
}

/// Klein coordinates `x_space / x0`.
pub fn klein_map(x: &LorentzPoint) -> KleinPoint {
    let x0 = x.time();
    KleinPoint(x.space().iter().map(|v| v / x0).collect())
}

/// Inverse Klein map: `x0 = (c (1 - |k|^2))^(-1/2)`, `x_space = x0 k`.
pub fn klein_inverse(k: &KleinPoint, c: Curvature) -> Result<LorentzPoint> {
    let n2 = dot(&k.0, &k.0);
    if !(n2 < 1.0) {
        return Err(Error::OutsideKleinBall(sqrt(n2)));
    }
    Ok(klein_inverse_raw(&k.0, c))
}

pub(crate) fn klein_inverse_raw(k: &[f64], c: Curvature) -> LorentzPoint {
    let x0 = 1.0 / sqrt(c.get() * (1.0 - dot(k, k)));
    let mut coords = Vec::with_capacity(k.len() + 1);
    coords.push(x0);
    coords.extend(k.iter().map(|v| x0 * v));
    LorentzPoint { coords }
}

/// Einstein midpoint: the `gamma`-weighted mean of the Klein coordinates with
/// `gamma(x) = (1 - |k(x)|^2)^(-1/2)`, mapped back to the hyperboloid.
pub fn einstein_midpoint(points: &[LorentzPoint], c: Curvature) -> Result<LorentzPoint> {
    let first = points
        .first()
        .ok_or(Error::Empty("Einstein midpoint input"))?;
    for p in points {
        check_same_dim(first, p)?;
    }
    let refs: Vec<&LorentzPoint> = points.iter().collect();
    Ok(midpoint_of(&refs, c))
}

pub(crate) fn midpoint_of(points: &[&LorentzPoint], c: Curvature) -> LorentzPoint {
    let dim = points[0].dim();
    let mut acc = vec![0.0; dim];
    let mut wsum = 0.0;
    for p in points {
        let x0 = p.time();
        let k: Vec<f64> = p.space().iter().map(|v| v / x0).collect();
        let gamma = 1.0 / sqrt(1.0 - dot(&k, &k));
        for (a, kv) in acc.iter_mut().zip(&k) {
            *a += gamma * kv;
        }
        wsum += gamma;
    }
    for a in &mut acc {
        *a /= wsum;
    }
    klein_inverse_raw(&acc, c)
}

/// Exterior angle at `p` of the triangle `(O, p, s)`:
///
/// `acos((s0 + p0 a) / (|p_space| sqrt(a^2 - 1)))` with `a = c <p,s>_L`, the
/// square-root argument clamped to at least [`ANGLE_EPS`] and the `acos`
/// argument clamped to `[-1, 1]`. For `s = p` the clamps give `pi/2`.
pub fn exterior_angle(p: &LorentzPoint, s: &LorentzPoint, c: Curvature) -> Result<f64> {
    check_same_dim(p, s)?;
    if norm(p.space()) <= 1e-9 {
        return Err(Error::DegenerateReference);
    }
    Ok(angle_unchecked(p.as_slice(), s.as_slice(), c))
}

/// Evaluated in on-manifold equivalent forms: with `a = c<p,s>_L`,
/// `s0 + p0 a = c (p0 (p_space . s_space) - s0 |p_space|^2)` and
/// `a^2 - 1 = (a + 1)(a - 1)` where `a + 1` comes from the Lorentz norm of
/// `p - s`. Both vanish exactly at `s = p`, giving `pi/2` there.
pub(crate) fn angle_unchecked(p: &[f64], s: &[f64], c: Curvature) -> f64 {
    let cc = c.get();
    let pp = dot(&p[1..], &p[1..]);
    let num = cc * (p[0] * dot(&p[1..], &s[1..]) - s[0] * pp);
    let a1 = -cosh_minus_one(p, s, c);
    let den = sqrt(pp) * sqrt((a1 * (a1 - 2.0)).max(ANGLE_EPS));
    acos((num / den).clamp(-1.0, 1.0))
}

/// Logarithmic map at the origin: `d(O, x) x_space / |x_space|`.
pub fn log_map_origin(x: &LorentzPoint, c: Curvature) -> TangentVector {
    TangentVector(log_origin_raw(x.space(), c))
}

pub(crate) fn log_origin_raw(space: &[f64], c: Curvature) -> Vec<f64> {
    let n = norm(space);
    if n == 0.0 {
        return vec![0.0; space.len()];
    }
    // sinh(sqrt(c) d) = sqrt(c) |x_space| on the hyperboloid
    let d = asinh(c.sqrt() * n) / c.sqrt();
    space.iter().map(|v| d * v / n).collect()
}

/// Pairwise LCA-depth surrogate.
///
/// With Klein points `k_i`, `k_j`, takes
/// `t = clip(-k_i.(k_j - k_i) / |k_j - k_i|^2, 0, 1)`,
/// `k = k_i + t (k_j - k_i)` and returns
/// `(1/sqrt(c)) acosh((1 - |k|^2)^(-1/2))`. A collapsed segment uses `t = 0`.
pub fn lca_depth_surrogate(pi: &LorentzPoint, pj: &LorentzPoint, c: Curvature) -> Result<f64> {
    check_same_dim(pi, pj)?;
    let ki = klein_map(pi);
    let kj = klein_map(pj);
    Ok(lca_surrogate_klein(&ki.0, &kj.0, c).0)
}

/// Returns `(d_o, t, |k_hat|)`.
pub(crate) fn lca_surrogate_klein(ki: &[f64], kj: &[f64], c: Curvature) -> (f64, f64, f64) {
    let mut dd = 0.0;
    let mut proj = 0.0;
    for (a, b) in ki.iter().zip(kj) {
        let d = b - a;
        dd += d * d;
        proj += a * d;
    }
    let t = if dd <= 1e-24 {
        0.0
    } else {
        (-proj / dd).clamp(0.0, 1.0)
    };
    let r = sqrt(
        ki.iter()
            .zip(kj)
            .map(|(a, b)| {
                let k = a + t * (b - a);
                k * k
            })
            .sum::<f64>(),
    );
    // acosh((1 - r^2)^(-1/2)) == atanh(r); the latter keeps precision near r = 0
    (atanh(r) / c.sqrt(), t, r)
}

/// Literal `acosh((1 - r^2)^(-1/2))`, kept for cross-checking [`lca_depth_surrogate`].
pub fn origin_distance_from_klein_norm(r: f64, c: Curvature) -> f64 {
    acosh(1.0 / sqrt(1.0 - r * r)) / c.sqrt()
}
