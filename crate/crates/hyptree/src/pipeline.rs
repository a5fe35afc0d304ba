//! Training and evaluation runs over synthetic scenes, and run directories.

use std::fs;
use std::path::Path;

use hyptree_core::eval::{
    completeness_levelwise, completeness_viewwise, ctr, generate_candidates, group_recall,
    FeatureGrid, RecallReport,
};
use hyptree_core::pca::{pca, Pca};
use hyptree_core::scene::SyntheticScene;
use hyptree_core::trainer::{train, LossConfig, LossRecord, Schedule, TrainableEmbedding};

use crate::config::{RecallConfig, TrainConfig};
use crate::error::{CliError, Result};
use crate::formats::matrix::{Matrix, EMBEDDING_MAGIC};

pub const EMBEDDING_FILE: &str = "embedding.h2ge";
pub const RUN_CONFIG_FILE: &str = "train_config.json";

/// Builds the supervision forests, initializes one ray per pixel of every
/// view and trains. Initialization uses `config.seed`, minibatch sampling
/// `config.seed + 1`.
pub fn train_scene(
    scene: &SyntheticScene,
    config: &TrainConfig,
) -> Result<(TrainableEmbedding, Vec<LossRecord>)> {
    let forests = scene.view_forests(&config.forest_config())?;
    let images = scene.training_images(&forests)?;
    let schedule = Schedule::from(&config.schedule);
    let rays = scene.pixels_per_view() * scene.views.len();
    let mut emb = TrainableEmbedding::gaussian(
        rays,
        config.dim,
        config.curvature()?,
        schedule.init_std,
        config.seed,
    )?;
    let history = train(
        &mut emb,
        &images,
        &schedule,
        &LossConfig::from(&config.loss),
        config.seed.wrapping_add(1),
    )?;
    Ok((emb, history))
}

/// Rounds the parameters through the checkpoint precision, so in-memory
/// results match those of a reloaded run.
pub fn checkpoint_precision(emb: &TrainableEmbedding) -> Result<TrainableEmbedding> {
    let m = Matrix::from_f64(emb.rays(), emb.dim(), emb.params())?;
    Ok(TrainableEmbedding::new(
        m.to_f64(),
        emb.rays(),
        emb.dim(),
        emb.curvature(),
    )?)
}

pub fn save_run(dir: &Path, emb: &TrainableEmbedding, config: &TrainConfig) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    Matrix::from_f64(emb.rays(), emb.dim(), emb.params())?
        .write(&dir.join(EMBEDDING_FILE), EMBEDDING_MAGIC)?;
    let path = dir.join(RUN_CONFIG_FILE);
    fs::write(&path, serde_json::to_string_pretty(config)? + "\n")
        .map_err(|e| CliError::io(&path, e))
}

pub fn load_run(dir: &Path) -> Result<(TrainableEmbedding, TrainConfig)> {
    let config: TrainConfig = crate::config::load(Some(&dir.join(RUN_CONFIG_FILE)))?;
    let m = Matrix::read(&dir.join(EMBEDDING_FILE), EMBEDDING_MAGIC)?;
    let emb = TrainableEmbedding::new(m.to_f64(), m.rows, m.cols, config.curvature()?)?;
    Ok((emb, config))
}

/// Per-level view-wise and level-wise completeness of one scene.
#[derive(Debug, Clone, PartialEq)]
pub struct Completeness {
    pub levels: Vec<String>,
    pub viewwise: Vec<f64>,
    pub levelwise: Vec<f64>,
    pub thresholds: Vec<f64>,
    /// Level-wise over view-wise per level; `None` when view-wise is 0.
    pub ctr: Vec<Option<f64>>,
}

pub fn completeness(scene: &SyntheticScene, emb: &TrainableEmbedding) -> Result<Completeness> {
    let eval = scene.eval_scene(emb)?;
    let c = emb.curvature();
    let viewwise = completeness_viewwise(&eval, c)?;
    let lw = completeness_levelwise(&eval, c)?;
    let ratio = ctr(&[viewwise.clone()], &[lw.scores.clone()])?;
    Ok(Completeness {
        levels: eval.levels,
        viewwise,
        levelwise: lw.scores,
        thresholds: lw.thresholds,
        ctr: ratio.per_level,
    })
}

pub fn view_features(
    scene: &SyntheticScene,
    emb: &TrainableEmbedding,
    view: usize,
) -> Result<FeatureGrid> {
    if view >= scene.views.len() {
        return Err(CliError::config(format!("view {view} out of range")));
    }
    let n = scene.pixels_per_view();
    let pts = (0..n)
        .map(|px| emb.feature(scene.ray_of(view, px)))
        .collect();
    Ok(FeatureGrid::new(scene.spec.height, scene.spec.width, pts)?)
}

/// Candidate pool of one view scored against every ground-truth group.
pub fn recall(
    scene: &SyntheticScene,
    emb: &TrainableEmbedding,
    view: usize,
    config: &RecallConfig,
) -> Result<(usize, RecallReport)> {
    let grid = view_features(scene, emb, view)?;
    let pool = generate_candidates(&grid, emb.curvature(), &config.candidate_config())?;
    let report = group_recall(
        &pool,
        &scene.gt_groups(view),
        &config.budgets,
        config.seeds,
        config.seed,
    )?;
    Ok((pool.len(), report))
}

/// Top-3 principal components of one view's tangent features, or of its raw
/// descriptors when no embedding is given.
pub fn view_pca(
    scene: &SyntheticScene,
    emb: Option<&TrainableEmbedding>,
    view: usize,
) -> Result<(Pca, Vec<Vec<f64>>)> {
    let rows: Vec<Vec<f64>> = match emb {
        Some(e) => view_features(scene, e, view)?.tangent(e.curvature()),
        None => {
            let v = scene
                .views
                .get(view)
                .ok_or_else(|| CliError::config(format!("view {view} out of range")))?;
            (0..scene.pixels_per_view())
                .map(|p| v.descriptors.feature(p).to_vec())
                .collect()
        }
    };
    if rows[0].len() < 3 {
        return Err(CliError::config(
            "PCA export needs at least 3 feature dimensions",
        ));
    }
    let p = pca(&rows, 3)?;
    Ok((p, rows))
}
