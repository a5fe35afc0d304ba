use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::lorentz::{project_raw, Curvature, LorentzPoint};
use crate::math::norm;
use crate::{Error, Result};

/// Per-ray tangent parameters `u_r`; the feature of ray `r` is `Pi_c(u_r)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainableEmbedding {
    params: Vec<f64>,
    rays: usize,
    dim: usize,
    curvature: Curvature,
}

impl TrainableEmbedding {
    pub fn new(params: Vec<f64>, rays: usize, dim: usize, curvature: Curvature) -> Result<Self> {
        if params.len() != rays * dim {
            return Err(Error::DimensionMismatch {
                expected: rays * dim,
                got: params.len(),
            });
        }
        if params.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        if dim == 0 {
            return Err(Error::Empty("embedding dimension"));
        }
        Ok(Self {
            params,
            rays,
            dim,
            curvature,
        })
    }

    pub fn zeros(rays: usize, dim: usize, curvature: Curvature) -> Result<Self> {
        Self::new(vec![0.0; rays * dim], rays, dim, curvature)
    }

    /// Entries drawn i.i.d. from `N(0, std^2)`.
    pub fn gaussian(
        rays: usize,
        dim: usize,
        curvature: Curvature,
        std: f64,
        seed: u64,
    ) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = (0..rays * dim)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                std * z
            })
            .collect();
        Self::new(params, rays, dim, curvature)
    }

    pub fn rays(&self) -> usize {
        self.rays
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn curvature(&self) -> Curvature {
        self.curvature
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn row(&self, ray: usize) -> &[f64] {
        &self.params[ray * self.dim..(ray + 1) * self.dim]
    }

    pub fn feature(&self, ray: usize) -> LorentzPoint {
        project_raw(self.row(ray), self.curvature)
    }

    /// Mean over all rays of `ReLU(|u_r| - r_max)^2`.
    pub fn max_norm_regularizer(&self, r_max: f64) -> f64 {
        if self.rays == 0 {
            return 0.0;
        }
        let s: f64 = (0..self.rays)
            .map(|r| {
                let e = norm(self.row(r)) - r_max;
                if e > 0.0 {
                    e * e
                } else {
                    0.0
                }
            })
            .sum();
        s / self.rays as f64
    }
}

/// Samples along one ray: features with normalized weights that act as
/// constants (no gradient flows into them).
#[derive(Debug, Clone, PartialEq)]
pub struct RaySamples {
    features: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl RaySamples {
    pub fn new(features: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::Empty("ray sample set"));
        }
        if features.len() != weights.len() {
            return Err(Error::DimensionMismatch {
                expected: features.len(),
                got: weights.len(),
            });
        }
        let d = features[0].len();
        if features.iter().any(|f| f.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: 0,
            });
        }
        if weights.iter().any(|&w| !(w >= 0.0)) {
            return Err(Error::InvalidConfig("sample weights must be >= 0".into()));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig("sample weights must sum to 1".into()));
        }
        Ok(Self { features, weights })
    }

    /// Keeps samples whose raw weight is at least `min_weight` and
    /// renormalizes the kept weights.
    pub fn select_high_weight(
        features: Vec<Vec<f64>>,
        raw_weights: &[f64],
        min_weight: f64,
    ) -> Result<Self> {
        let (kept, w): (Vec<_>, Vec<_>) = features
            .into_iter()
            .zip(raw_weights)
            .filter(|(_, &w)| w >= min_weight)
            .map(|(f, &w)| (f, w))
            .unzip();
        let sum: f64 = w.iter().sum();
        if kept.is_empty() || !(sum > 0.0) {
            return Err(Error::Empty("no sample above the weight threshold"));
        }
        Self::new(kept, w.into_iter().map(|x| x / sum).collect())
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Weighted sum of the sample features projected to the hyperboloid.
pub fn aggregate_ray_feature(samples: &RaySamples, c: Curvature) -> Result<LorentzPoint> {
    let d = samples.features[0].len();
    let mut h = vec![0.0; d];
    for (f, &w) in samples.features.iter().zip(&samples.weights) {
        for (a, v) in h.iter_mut().zip(f) {
            *a += w * v;
        }
    }
    if h.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(project_raw(&h, c))
}
