//! Principal components by power iteration with deflation.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::math::{dot, norm, sqrt};
use crate::{Error, Result};

/// Convergence tolerance on successive unit iterates.
pub const PCA_TOL: f64 = 1e-10;
const MAX_ITERS: usize = 20_000;
const START_SEED: u64 = 0x5eed;

#[derive(Debug, Clone, PartialEq)]
pub struct Pca {
    pub mean: Vec<f64>,
    /// Unit principal directions, strongest first.
    pub components: Vec<Vec<f64>>,
    /// Variance captured by each component.
    pub variances: Vec<f64>,
    /// Total variance of the centered data.
    pub total_variance: f64,
}

impl Pca {
    /// Coordinates of `x` along each component.
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        let centered: Vec<f64> = x.iter().zip(&self.mean).map(|(a, m)| a - m).collect();
        self.components.iter().map(|c| dot(c, &centered)).collect()
    }
}

fn orthogonalize(v: &mut [f64], basis: &[Vec<f64>]) {
    for b in basis {
        let k = dot(v, b);
        for (x, y) in v.iter_mut().zip(b) {
            *x -= k * y;
        }
    }
}

/// Top `k` principal directions of `rows` (one sample per row).
///
/// Components whose variance falls below `1e-12` of the total are not
/// reported; a warning is logged when fewer than `k` remain.
pub fn pca(rows: &[Vec<f64>], k: usize) -> Result<Pca> {
    let first = rows.first().ok_or(Error::Empty("PCA input"))?;
    let d = first.len();
    if rows.iter().any(|r| r.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: 0,
        });
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let n = rows.len() as f64;
    let mut mean = vec![0.0; d];
    for r in rows {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut cov = vec![0.0; d * d];
    for r in rows {
        let x: Vec<f64> = r.iter().zip(&mean).map(|(a, m)| a - m).collect();
        for i in 0..d {
            for j in i..d {
                cov[i * d + j] += x[i] * x[j];
            }
        }
    }
    for i in 0..d {
        for j in i..d {
            cov[i * d + j] /= n;
            cov[j * d + i] = cov[i * d + j];
        }
    }
    let total: f64 = (0..d).map(|i| cov[i * d + i]).sum();
    let mut rng = ChaCha8Rng::seed_from_u64(START_SEED);
    let mut components: Vec<Vec<f64>> = Vec::new();
    let mut variances = Vec::new();
    let mul =
        |v: &[f64]| -> Vec<f64> { (0..d).map(|i| dot(&cov[i * d..(i + 1) * d], v)).collect() };
    for _ in 0..k.min(d) {
        let mut v: Vec<f64> = (0..d).map(|_| rng.random::<f64>() - 0.5).collect();
        orthogonalize(&mut v, &components);
        let nv = norm(&v);
        if nv == 0.0 {
            break;
        }
        v.iter_mut().for_each(|x| *x /= nv);
        let mut lambda = 0.0;
        for _ in 0..MAX_ITERS {
            // deflated operator; the second pass removes what roundoff
            // reintroduces when the residual is tiny
            let mut w = mul(&v);
            orthogonalize(&mut w, &components);
            orthogonalize(&mut w, &components);
            lambda = dot(&v, &w);
            let nw = norm(&w);
            if !(lambda > 1e-12 * total) || nw == 0.0 {
                lambda = 0.0;
                break;
            }
            w.iter_mut().for_each(|x| *x /= nw);
            orthogonalize(&mut w, &components);
            let nw = norm(&w);
            w.iter_mut().for_each(|x| *x /= nw);
            let delta = v
                .iter()
                .zip(&w)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>();
            v = w;
            if sqrt(delta) < PCA_TOL {
                lambda = dot(&v, &mul(&v));
                break;
            }
        }
        if !(lambda > 1e-12 * total) {
            break;
        }
        // deterministic sign: largest-magnitude entry positive
        let big = v
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |acc, (i, x)| {
                if x.abs() > acc.1 {
                    (i, x.abs())
                } else {
                    acc
                }
            })
            .0;
        if v[big] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        components.push(v);
        variances.push(lambda);
    }
    if components.len() < k {
        log::warn!(
            "rank-deficient input: {} of {k} principal components available",
            components.len()
        );
    }
    Ok(Pca {
        mean,
        components,
        variances,
        total_variance: total,
    })
}
