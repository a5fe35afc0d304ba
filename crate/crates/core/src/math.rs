//! Thin wrappers over `libm` so that every build uses the same routines.

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn acos(x: f64) -> f64 {
    libm::acos(x)
}

#[inline]
pub fn log1p(x: f64) -> f64 {
    libm::log1p(x)
}

#[inline]
pub fn acosh(x: f64) -> f64 {
    libm::acosh(x)
}

#[inline]
pub fn asinh(x: f64) -> f64 {
    libm::asinh(x)
}

#[inline]
pub fn atanh(x: f64) -> f64 {
    libm::atanh(x)
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    sqrt(dot(a, a))
}

#[inline]
pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Numerically stable `-log softmax(logits)[target]` and its gradient
/// `softmax - onehot(target)` written into `grad`.
pub fn softmax_xent(logits: &[f64], target: usize, grad: &mut [f64]) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut z = 0.0;
    for (g, &l) in grad.iter_mut().zip(logits) {
        *g = exp(l - max);
        z += *g;
    }
    for g in grad.iter_mut() {
        *g /= z;
    }
    let loss = ln(z) + max - logits[target];
    grad[target] -= 1.0;
    loss.max(0.0)
}
