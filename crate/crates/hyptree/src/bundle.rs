//! Scene bundles on disk.
//!
//! ```text
//! <dir>/manifest.json            spec, level names, per-view file names and queries
//! <dir>/gt_forest.json           ground-truth hierarchy
//! <dir>/view{k}_labels.pgm       ground-truth leaf index per pixel
//! <dir>/view{k}_level{l}.pgm     query's ground-truth region at level l
//! <dir>/view{k}_descriptors.h2gd pixel descriptors, one row per pixel
//! ```
//!
//! Loading regenerates the scene from the stored spec and checks every file
//! against it, so a bundle edited by hand is reported instead of silently
//! mixing two scenes.

use std::fs;
use std::path::{Path, PathBuf};

use hyptree_core::scene::{gen_scene, SyntheticScene, SyntheticSceneSpec};
use hyptree_core::Grid;
use serde::{Deserialize, Serialize};

use crate::config::SceneConfig;
use crate::error::{CliError, Result};
use crate::formats::matrix::{Matrix, DESCRIPTOR_MAGIC};
use crate::formats::{forest, pgm};

pub const MANIFEST: &str = "manifest.json";
pub const BUNDLE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ViewEntry {
    pub query: [usize; 2],
    pub labels: String,
    pub descriptors: String,
    pub level_masks: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub name: String,
    pub version: u32,
    pub spec: SceneConfig,
    pub level_names: Vec<String>,
    pub gt_forest: String,
    pub views: Vec<ViewEntry>,
}

pub struct Bundle {
    pub dir: PathBuf,
    pub manifest: Manifest,
    pub scene: SyntheticScene,
}

fn labels_u16(labels: &Grid<u32>) -> Result<Grid<u16>> {
    if labels.as_slice().iter().any(|&l| l > u32::from(u16::MAX)) {
        return Err(CliError::config(
            "more than 65535 leaves do not fit a PGM label grid",
        ));
    }
    Ok(labels.map(|&l| l as u16))
}

fn descriptor_matrix(scene: &SyntheticScene, view: usize) -> Result<Matrix> {
    let d = &scene.views[view].descriptors;
    Matrix::from_f64(d.height() * d.width(), d.dim(), d.as_slice())
}

/// Writes `scene` to `dir` (created if missing).
pub fn write(dir: &Path, scene: &SyntheticScene) -> Result<Manifest> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let name = dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "scene".into());
    let mut views = Vec::with_capacity(scene.views.len());
    for (k, v) in scene.views.iter().enumerate() {
        let labels = format!("view{k}_labels.pgm");
        pgm::write(&dir.join(&labels), &labels_u16(&v.leaf_labels)?)?;
        let descriptors = format!("view{k}_descriptors.h2gd");
        descriptor_matrix(scene, k)?.write(&dir.join(&descriptors), DESCRIPTOR_MAGIC)?;
        let mut level_masks = Vec::with_capacity(v.level_masks.len());
        for (l, m) in v.level_masks.iter().enumerate() {
            let f = format!("view{k}_level{l}.pgm");
            pgm::write_mask(&dir.join(&f), m)?;
            level_masks.push(f);
        }
        views.push(ViewEntry {
            query: [v.query.0, v.query.1],
            labels,
            descriptors,
            level_masks,
        });
    }
    forest::write(&dir.join("gt_forest.json"), &scene.gt_forest)?;
    let manifest = Manifest {
        name,
        version: BUNDLE_VERSION,
        spec: scene.spec.clone().into(),
        level_names: scene.level_names.clone(),
        gt_forest: "gt_forest.json".into(),
        views,
    };
    let path = dir.join(MANIFEST);
    fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")
        .map_err(|e| CliError::io(&path, e))?;
    Ok(manifest)
}

fn mismatch(dir: &Path, what: &str) -> CliError {
    CliError::config(format!(
        "{}: {what} does not match the manifest spec",
        dir.display()
    ))
}

/// Reads and validates a bundle.
pub fn load(dir: &Path) -> Result<Bundle> {
    let path = dir.join(MANIFEST);
    let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
    let manifest: Manifest = serde_json::from_str(&text)
        .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    if manifest.version != BUNDLE_VERSION {
        return Err(CliError::config(format!(
            "unsupported bundle version {}",
            manifest.version
        )));
    }
    let scene = gen_scene(&SyntheticSceneSpec::from(manifest.spec.clone()))?;
    if manifest.level_names != scene.level_names {
        return Err(mismatch(dir, "level names"));
    }
    if manifest.views.len() != scene.views.len() {
        return Err(mismatch(dir, "view count"));
    }
    for (k, (entry, v)) in manifest.views.iter().zip(&scene.views).enumerate() {
        if (entry.query[0], entry.query[1]) != v.query {
            return Err(mismatch(dir, &format!("view {k} query")));
        }
        if pgm::read(&dir.join(&entry.labels))? != labels_u16(&v.leaf_labels)? {
            return Err(mismatch(dir, &entry.labels));
        }
        if entry.level_masks.len() != v.level_masks.len() {
            return Err(mismatch(dir, &format!("view {k} level count")));
        }
        for (f, m) in entry.level_masks.iter().zip(&v.level_masks) {
            if pgm::read_mask(&dir.join(f))? != *m {
                return Err(mismatch(dir, f));
            }
        }
        if Matrix::read(&dir.join(&entry.descriptors), DESCRIPTOR_MAGIC)?
            != descriptor_matrix(&scene, k)?
        {
            return Err(mismatch(dir, &entry.descriptors));
        }
    }
    if forest::read(&dir.join(&manifest.gt_forest))? != scene.gt_forest {
        return Err(mismatch(dir, &manifest.gt_forest));
    }
    Ok(Bundle {
        dir: dir.to_path_buf(),
        manifest,
        scene,
    })
}
