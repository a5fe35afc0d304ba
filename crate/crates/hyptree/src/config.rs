//! JSON configuration files. Every field is optional; missing fields take
//! the library defaults and unknown fields are rejected.

use std::fs;
use std::path::Path;

use hyptree_core::eval::{CandidateConfig, DEFAULT_BUDGETS};
use hyptree_core::hierarchy::{ForestConfig, TreeMethod};
use hyptree_core::scene::SyntheticSceneSpec;
use hyptree_core::trainer::{LossConfig, RootCentroidMode, Schedule};
use hyptree_core::Curvature;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub fn load<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::config(format!("{}: {e}", p.display())))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[default]
    Spectral,
    Exact,
}

impl From<Method> for TreeMethod {
    fn from(m: Method) -> Self {
        match m {
            Method::Spectral => TreeMethod::Spectral,
            Method::Exact => TreeMethod::Exact,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneConfig {
    pub height: usize,
    pub width: usize,
    pub branching: Vec<usize>,
    pub descriptor_dim: usize,
    pub noise_sigma: f64,
    pub views: usize,
    pub seed: u64,
    pub jitter: usize,
    pub include_image_root: bool,
}

impl Default for SceneConfig {
    fn default() -> Self {
        SyntheticSceneSpec::default().into()
    }
}

impl From<SyntheticSceneSpec> for SceneConfig {
    fn from(s: SyntheticSceneSpec) -> Self {
        Self {
            height: s.height,
            width: s.width,
            branching: s.branching,
            descriptor_dim: s.descriptor_dim,
            noise_sigma: s.noise_sigma,
            views: s.views,
            seed: s.seed,
            jitter: s.jitter,
            include_image_root: s.include_image_root,
        }
    }
}

impl From<SceneConfig> for SyntheticSceneSpec {
    fn from(s: SceneConfig) -> Self {
        Self {
            height: s.height,
            width: s.width,
            branching: s.branching,
            descriptor_dim: s.descriptor_dim,
            noise_sigma: s.noise_sigma,
            views: s.views,
            seed: s.seed,
            jitter: s.jitter,
            include_image_root: s.include_image_root,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RootCentroid {
    #[default]
    RayFeatures,
    LeafPrototypes,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossSection {
    pub leaf_weight: f64,
    pub root_weight: f64,
    pub comp_weight: f64,
    pub lca_weight: f64,
    pub norm_weight: f64,
    pub leaf_temperature: f64,
    pub root_temperature: f64,
    pub lca_temperature: f64,
    pub comp_margin: f64,
    pub max_norm: f64,
    pub hierarchy_weight: f64,
    pub root_centroid: RootCentroid,
}

impl Default for LossSection {
    fn default() -> Self {
        let d = LossConfig::default();
        Self {
            leaf_weight: d.leaf_weight,
            root_weight: d.root_weight,
            comp_weight: d.comp_weight,
            lca_weight: d.lca_weight,
            norm_weight: d.norm_weight,
            leaf_temperature: d.leaf_temperature,
            root_temperature: d.root_temperature,
            lca_temperature: d.lca_temperature,
            comp_margin: d.comp_margin,
            max_norm: d.max_norm,
            hierarchy_weight: d.hierarchy_weight,
            root_centroid: RootCentroid::RayFeatures,
        }
    }
}

impl From<&LossSection> for LossConfig {
    fn from(s: &LossSection) -> Self {
        Self {
            leaf_weight: s.leaf_weight,
            root_weight: s.root_weight,
            comp_weight: s.comp_weight,
            lca_weight: s.lca_weight,
            norm_weight: s.norm_weight,
            leaf_temperature: s.leaf_temperature,
            root_temperature: s.root_temperature,
            lca_temperature: s.lca_temperature,
            comp_margin: s.comp_margin,
            max_norm: s.max_norm,
            hierarchy_weight: s.hierarchy_weight,
            root_centroid: match s.root_centroid {
                RootCentroid::RayFeatures => RootCentroidMode::RayFeatures,
                RootCentroid::LeafPrototypes => RootCentroidMode::LeafPrototypes,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleSection {
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
    pub init_std: f64,
}

impl Default for ScheduleSection {
    fn default() -> Self {
        let d = Schedule::default();
        Self {
            steps: d.steps,
            batch_size: d.batch_size,
            lr_init: d.lr_init,
            lr_final: d.lr_final,
            warmup_steps: d.warmup_steps,
            weight_decay: d.weight_decay,
            grad_clip: d.grad_clip,
            beta1: d.beta1,
            beta2: d.beta2,
            adam_eps: d.adam_eps,
            triplets_per_step: d.triplets_per_step,
            init_std: d.init_std,
        }
    }
}

impl From<&ScheduleSection> for Schedule {
    fn from(s: &ScheduleSection) -> Self {
        Self {
            steps: s.steps,
            batch_size: s.batch_size,
            lr_init: s.lr_init,
            lr_final: s.lr_final,
            warmup_steps: s.warmup_steps,
            weight_decay: s.weight_decay,
            grad_clip: s.grad_clip,
            beta1: s.beta1,
            beta2: s.beta2,
            adam_eps: s.adam_eps,
            triplets_per_step: s.triplets_per_step,
            init_std: s.init_std,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Spatial dimension `D` of the embedding.
    pub dim: usize,
    pub curvature: f64,
    pub method: Method,
    pub seed: u64,
    pub loss: LossSection,
    pub schedule: ScheduleSection,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            dim: 16,
            curvature: 1.0,
            method: Method::Spectral,
            seed: 0,
            loss: LossSection::default(),
            schedule: ScheduleSection::default(),
        }
    }
}

impl TrainConfig {
    pub fn curvature(&self) -> Result<Curvature> {
        Ok(Curvature::new(self.curvature)?)
    }

    pub fn forest_config(&self) -> ForestConfig {
        ForestConfig {
            method: self.method.into(),
            ..ForestConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecallConfig {
    pub budgets: Vec<usize>,
    pub seeds: usize,
    pub seed: u64,
    pub epsilons: Vec<f64>,
    pub min_region: usize,
    pub min_samples: usize,
    pub node_cap: usize,
}

impl Default for RecallConfig {
    fn default() -> Self {
        let c = CandidateConfig::default();
        Self {
            budgets: DEFAULT_BUDGETS.to_vec(),
            seeds: 10,
            seed: 0,
            epsilons: c.epsilons,
            min_region: c.min_region,
            min_samples: c.min_samples,
            node_cap: c.node_cap,
        }
    }
}

impl RecallConfig {
    pub fn candidate_config(&self) -> CandidateConfig {
        CandidateConfig {
            epsilons: self.epsilons.clone(),
            min_region: self.min_region,
            min_samples: self.min_samples,
            node_cap: self.node_cap,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub n_min: usize,
    pub n_max: usize,
    pub trials: usize,
    /// Dimension of the random unit descriptors behind each graph.
    pub descriptor_dim: usize,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            n_min: 4,
            n_max: 12,
            trials: 20,
            descriptor_dim: 16,
            seed: 0,
        }
    }
}
