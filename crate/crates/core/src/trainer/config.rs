use alloc::format;

use crate::{Error, Result};

/// How root centroids are aggregated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RootCentroidMode {
    /// Einstein midpoint of all ray features whose leaf belongs to the root.
    #[default]
    RayFeatures,
    /// Einstein midpoint of the root's observed leaf prototypes.
    LeafPrototypes,
}

/// Weights, temperatures and margins of the hierarchy objective.
#[derive(Debug, Clone, PartialEq)]
pub struct LossConfig {
    pub leaf_weight: f64,
    pub root_weight: f64,
    pub comp_weight: f64,
    pub lca_weight: f64,
    pub norm_weight: f64,
    pub leaf_temperature: f64,
    pub root_temperature: f64,
    pub lca_temperature: f64,
    /// Compactness margin `epsilon`.
    pub comp_margin: f64,
    /// Tangent-norm cap of the max-norm regularizer.
    pub max_norm: f64,
    /// Global factor applied to the whole hierarchy objective.
    pub hierarchy_weight: f64,
    pub root_centroid: RootCentroidMode,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            leaf_weight: 1.0,
            root_weight: 2.0,
            comp_weight: 1.0,
            lca_weight: 0.05,
            norm_weight: 0.01,
            leaf_temperature: 0.22,
            root_temperature: 0.20,
            lca_temperature: 0.5,
            comp_margin: 0.1,
            max_norm: 5.0,
            hierarchy_weight: 0.5,
            root_centroid: RootCentroidMode::RayFeatures,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        let weights = [
            ("leaf_weight", self.leaf_weight),
            ("root_weight", self.root_weight),
            ("comp_weight", self.comp_weight),
            ("lca_weight", self.lca_weight),
            ("norm_weight", self.norm_weight),
            ("comp_margin", self.comp_margin),
            ("max_norm", self.max_norm),
            ("hierarchy_weight", self.hierarchy_weight),
        ];
        for (name, v) in weights {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be finite and >= 0"
                )));
            }
        }
        let temps = [
            ("leaf_temperature", self.leaf_temperature),
            ("root_temperature", self.root_temperature),
            ("lca_temperature", self.lca_temperature),
        ];
        for (name, v) in temps {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidConfig(format!("{name} must be > 0")));
            }
        }
        Ok(())
    }

    /// Configuration with every term weight set to zero.
    pub fn zero_weights() -> Self {
        Self {
            leaf_weight: 0.0,
            root_weight: 0.0,
            comp_weight: 0.0,
            lca_weight: 0.0,
            norm_weight: 0.0,
            ..Self::default()
        }
    }
}

/// Optimizer schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub steps: usize,
    pub batch_size: usize,
    pub lr_init: f64,
    pub lr_final: f64,
    pub warmup_steps: usize,
    pub weight_decay: f64,
    pub grad_clip: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    pub triplets_per_step: usize,
    /// Standard deviation of the Gaussian tangent initialization.
    pub init_std: f64,
}

impl Default for Schedule {
    fn default() -> Self {
        Self {
            steps: 2000,
            batch_size: 512,
            lr_init: 1e-3,
            lr_final: 1e-4,
            warmup_steps: 1000,
            weight_decay: 1e-6,
            grad_clip: 1.0,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            triplets_per_step: 256,
            init_std: 0.05,
        }
    }
}

impl Schedule {
    /// Linear warmup to `lr_init`, then log-linear decay to `lr_final` at the
    /// last step.
    pub fn learning_rate(&self, step: usize) -> f64 {
        if step < self.warmup_steps {
            return self.lr_init * (step + 1) as f64 / self.warmup_steps as f64;
        }
        let span = self.steps.saturating_sub(self.warmup_steps + 1);
        if span == 0 {
            return self.lr_init;
        }
        let frac = ((step - self.warmup_steps) as f64 / span as f64).min(1.0);
        self.lr_init * libm::pow(self.lr_final / self.lr_init, frac)
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be positive".into()));
        }
        let pos = [
            ("lr_init", self.lr_init),
            ("lr_final", self.lr_final),
            ("adam_eps", self.adam_eps),
        ];
        for (name, v) in pos {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidConfig(format!("{name} must be > 0")));
            }
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::InvalidConfig("Adam betas must lie in [0, 1)".into()));
        }
        if !(self.weight_decay >= 0.0 && self.grad_clip >= 0.0 && self.init_std >= 0.0) {
            return Err(Error::InvalidConfig(
                "weight_decay, grad_clip and init_std must be >= 0".into(),
            ));
        }
        Ok(())
    }
}
