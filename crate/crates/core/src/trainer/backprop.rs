//! Vector-Jacobian products of the geometric primitives used by the losses.
//!
//! All functions take raw ambient coordinates `(x0, x_space)` and accumulate
//! into caller-provided gradient buffers.

use alloc::vec;
use alloc::vec::Vec;

use crate::lorentz::{cosh_minus_one, Curvature, ANGLE_EPS};
use crate::math::{dot, sqrt};

/// `Pi_c(u) = (sqrt(1/c + |u|^2), u)`; `x0` is the forward time coordinate.
pub(crate) fn proj_vjp(u: &[f64], x0: f64, g: &[f64], out: &mut [f64]) {
    let g0 = g[0];
    for ((o, &gs), &ui) in out.iter_mut().zip(&g[1..]).zip(u) {
        *o += gs + g0 * ui / x0;
    }
}

/// Einstein midpoint of on-manifold points, where the Klein mean reduces to
/// `sum x_space / sum x0`. Returns the midpoint and `sum x0`.
pub(crate) fn midpoint_forward(points: &[&[f64]], c: Curvature) -> (Vec<f64>, f64) {
    let n = points[0].len();
    let mut a = vec![0.0; n - 1];
    let mut b = 0.0;
    for p in points {
        b += p[0];
        for (ai, v) in a.iter_mut().zip(&p[1..]) {
            *ai += v;
        }
    }
    let m: Vec<f64> = a.iter().map(|v| v / b).collect();
    let x0 = 1.0 / sqrt(c.get() * (1.0 - dot(&m, &m)));
    let mut out = Vec::with_capacity(n);
    out.push(x0);
    out.extend(m.iter().map(|v| x0 * v));
    (out, b)
}

/// Backpropagates `g` on a midpoint `mid` (with time-sum `b`) to the gradient
/// shared by every input point: `(x0_bar, x_space_bar)`.
pub(crate) fn midpoint_vjp(mid: &[f64], b: f64, g: &[f64], c: Curvature) -> Vec<f64> {
    let p0 = mid[0];
    let m: Vec<f64> = mid[1..].iter().map(|v| v / p0).collect();
    let gm = g[0] + dot(&g[1..], &m);
    let k = c.get() * p0 * p0 * p0 * gm;
    let mbar: Vec<f64> = g[1..]
        .iter()
        .zip(&m)
        .map(|(gs, mi)| gs * p0 + k * mi)
        .collect();
    let bbar = -dot(&mbar, &m) / b;
    let mut out = Vec::with_capacity(mid.len());
    out.push(bbar);
    out.extend(mbar.iter().map(|v| v / b));
    out
}

/// Exterior angle `theta(p, s)`, differentiating the same on-manifold forms
/// the forward pass evaluates.
pub(crate) fn angle_vjp(
    p: &[f64],
    s: &[f64],
    c: Curvature,
    g: f64,
    gp: &mut [f64],
    gs: &mut [f64],
) {
    let cc = c.get();
    let ps = dot(&p[1..], &s[1..]);
    let pp = dot(&p[1..], &p[1..]);
    let num = cc * (p[0] * ps - s[0] * pp);
    let a1 = -cosh_minus_one(p, s, c);
    let arg = a1 * (a1 - 2.0);
    let q = sqrt(arg.max(ANGLE_EPS));
    let np = sqrt(pp);
    let den = np * q;
    let x = num / den;
    if !(x.abs() < 1.0) {
        return;
    }
    let xbar = -g / sqrt(1.0 - x * x);
    let numbar = xbar / den;
    let denbar = -xbar * x / den;
    let npbar = denbar * q;
    let qbar = denbar * np;
    gp[0] += numbar * cc * ps;
    gs[0] -= numbar * cc * pp;
    for i in 1..p.len() {
        gp[i] += numbar * cc * (p[0] * s[i] - 2.0 * s[0] * p[i]) + npbar * p[i] / np;
        gs[i] += numbar * cc * p[0] * p[i];
    }
    if arg > ANGLE_EPS {
        // arg = a1 (a1 - 2), a1 = -(c/2) <p-s, p-s>_L
        let a1bar = qbar / (2.0 * q) * (2.0 * a1 - 2.0);
        lorentz_sq_vjp(p, s, -a1bar * cc / 2.0, gp, gs);
    }
}

/// Accumulates `lbar * d<p-s, p-s>_L` into `gp` and its negative into `gs`.
fn lorentz_sq_vjp(p: &[f64], s: &[f64], lbar: f64, gp: &mut [f64], gs: &mut [f64]) {
    let d0 = -2.0 * lbar * (p[0] - s[0]);
    gp[0] += d0;
    gs[0] -= d0;
    for i in 1..p.len() {
        let di = 2.0 * lbar * (p[i] - s[i]);
        gp[i] += di;
        gs[i] -= di;
    }
}

/// Geodesic distance, differentiated with respect to `s` only.
pub(crate) fn dist_vjp_s(s: &[f64], p: &[f64], c: Curvature, g: f64, gs: &mut [f64]) {
    let t = cosh_minus_one(s, p, c);
    if !(t > 0.0) {
        return;
    }
    let tbar = g / (c.sqrt() * sqrt(t * (t + 2.0)));
    let lbar = tbar * c.get() / 2.0;
    let mut sink = vec![0.0; p.len()];
    lorentz_sq_vjp(s, p, lbar, gs, &mut sink);
}

/// LCA-depth surrogate. The clipped segment parameter `t` minimizes `|k|`, so
/// its own derivative drops out: interior `t` is stationary and clipped `t` is
/// locally constant.
pub(crate) fn lca_vjp(
    pi: &[f64],
    pj: &[f64],
    t: f64,
    r: f64,
    c: Curvature,
    g: f64,
    gi: &mut [f64],
    gj: &mut [f64],
) {
    if r < 1e-12 {
        return;
    }
    let (i0, j0) = (pi[0], pj[0]);
    let khat: Vec<f64> = pi[1..]
        .iter()
        .zip(&pj[1..])
        .map(|(a, b)| {
            let ka = a / i0;
            ka + t * (b / j0 - ka)
        })
        .collect();
    let scale = g / (c.sqrt() * r * (1.0 - r * r));
    for (side, x, w) in [(gi, pi, 1.0 - t), (gj, pj, t)] {
        if w == 0.0 {
            continue;
        }
        let x0 = x[0];
        let mut kx = 0.0;
        for (idx, kh) in khat.iter().enumerate() {
            let kb = w * scale * kh;
            side[idx + 1] += kb / x0;
            kx += kb * x[idx + 1];
        }
        side[0] -= kx / (x0 * x0);
    }
}
