use alloc::vec;
use alloc::vec::Vec;

use crate::math::{dot, norm};
use crate::{Error, Result};

/// Dense `height x width x dim` patch feature grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchFeatureMap {
    height: usize,
    width: usize,
    dim: usize,
    data: Vec<f64>,
}

impl PatchFeatureMap {
    pub fn new(height: usize, width: usize, dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != height * width * dim {
            return Err(Error::DimensionMismatch {
                expected: height * width * dim,
                got: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self {
            height,
            width,
            dim,
            data,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn feature(&self, patch: usize) -> &[f64] {
        &self.data[patch * self.dim..(patch + 1) * self.dim]
    }

    /// Patch index covering pixel `(row, col)` of a `height x width` image.
    pub fn patch_of_pixel(&self, row: usize, col: usize, height: usize, width: usize) -> usize {
        let pr = row * self.height / height;
        let pc = col * self.width / width;
        pr * self.width + pc
    }
}

/// Unit-norm region descriptor.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionDescriptor(Vec<f64>);

impl RegionDescriptor {
    /// Normalizes `v`; fails on a zero vector.
    pub fn from_vec(mut v: Vec<f64>) -> Result<Self> {
        let n = norm(&v);
        if !(n > 1e-12) || !n.is_finite() {
            return Err(Error::DegenerateDescriptor);
        }
        for x in &mut v {
            *x /= n;
        }
        Ok(Self(v))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Mean feature over `region` (patch indices), then l2-normalized.
pub fn pool_descriptor(fmap: &PatchFeatureMap, region: &[usize]) -> Result<RegionDescriptor> {
    if region.is_empty() {
        return Err(Error::Empty("pooling region"));
    }
    let mut acc = vec![0.0; fmap.dim];
    for &p in region {
        if p >= fmap.height * fmap.width {
            return Err(Error::UnknownId(p));
        }
        for (a, v) in acc.iter_mut().zip(fmap.feature(p)) {
            *a += v;
        }
    }
    let n = region.len() as f64;
    for a in &mut acc {
        *a /= n;
    }
    RegionDescriptor::from_vec(acc)
}

/// Symmetric leaf affinity matrix with entries in `[0, 1]` and zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityGraph {
    n: usize,
    w: Vec<f64>,
}

impl AffinityGraph {
    pub fn new(n: usize, w: Vec<f64>) -> Result<Self> {
        if w.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: w.len(),
            });
        }
        for i in 0..n {
            if w[i * n + i] != 0.0 {
                return Err(Error::InvalidConfig(
                    "affinity diagonal must be zero".into(),
                ));
            }
            for j in 0..n {
                let x = w[i * n + j];
                if !(0.0..=1.0).contains(&x) || x != w[j * n + i] {
                    return Err(Error::InvalidConfig(
                        "affinity must be symmetric with entries in [0, 1]".into(),
                    ));
                }
            }
        }
        Ok(Self { n, w })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.w[u * self.n + v]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.w
    }

    /// Affinity restricted to `vertices` (in the given order).
    pub fn induced(&self, vertices: &[usize]) -> AffinityGraph {
        let m = vertices.len();
        let mut w = vec![0.0; m * m];
        for (a, &u) in vertices.iter().enumerate() {
            for (b, &v) in vertices.iter().enumerate() {
                w[a * m + b] = self.get(u, v);
            }
        }
        AffinityGraph { n: m, w }
    }

    /// Sum over unordered pairs.
    pub fn total_weight(&self) -> f64 {
        let mut s = 0.0;
        for a in 0..self.n {
            for b in (a + 1)..self.n {
                s += self.get(a, b);
            }
        }
        s
    }
}

/// `W_uv = max(0, z_u . z_v)` for `u != v`.
pub fn build_affinity(descriptors: &[RegionDescriptor]) -> Result<AffinityGraph> {
    let n = descriptors.len();
    if n < 2 {
        return Err(Error::Empty("affinity needs at least two descriptors"));
    }
    let d = descriptors[0].0.len();
    let mut w = vec![0.0; n * n];
    for u in 0..n {
        if descriptors[u].0.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: descriptors[u].0.len(),
            });
        }
        for v in (u + 1)..n {
            let x = dot(&descriptors[u].0, &descriptors[v].0).clamp(0.0, 1.0);
            w[u * n + v] = x;
            w[v * n + u] = x;
        }
    }
    Ok(AffinityGraph { n, w })
}
