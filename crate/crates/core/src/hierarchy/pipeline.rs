use alloc::vec::Vec;

use super::affinity::{build_affinity, pool_descriptor, PatchFeatureMap};
use super::dasgupta::{exact_sparsest_cut_tree, recursive_spectral_tree, EXACT_MAX_N};
use super::proposals::{
    assign_parents, resolve_leaf_partition, MaskProposal, CONTAINMENT_THRESHOLD,
};
use super::tree::{HierForest, HierTree};
use crate::grid::Grid;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TreeMethod {
    Spectral,
    Exact,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestConfig {
    pub containment_threshold: f64,
    pub method: TreeMethod,
    /// Height gap for [`HierTree::flatten_internal`]; `0` disables flattening.
    pub flatten_gap: usize,
    pub exact_max_n: usize,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            containment_threshold: CONTAINMENT_THRESHOLD,
            method: TreeMethod::Spectral,
            flatten_gap: 0,
            exact_max_n: EXACT_MAX_N,
        }
    }
}

/// Hierarchy supervision for one image.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewForest {
    pub forest: HierForest,
    /// Forest-wide leaf label per pixel; `None` where no proposal covers it.
    pub labels: Grid<Option<u32>>,
}

/// Proposals -> containment groups -> leaf partitions -> pooled descriptors
/// -> affinity graph -> tree, for every group of one image.
///
/// Pixels claimed by leaves of several groups keep the leaf whose owning
/// proposal is smallest.
pub fn build_view_forest(
    proposals: &[MaskProposal],
    features: &PatchFeatureMap,
    config: &ForestConfig,
) -> Result<ViewForest> {
    let first = proposals.first().ok_or(Error::Empty("proposal list"))?;
    let (h, w) = (first.mask().height(), first.mask().width());
    if !(config.containment_threshold > 0.0 && config.containment_threshold <= 1.0) {
        return Err(Error::InvalidConfig(
            "containment threshold must lie in (0, 1]".into(),
        ));
    }
    let pforest = assign_parents(proposals, config.containment_threshold);
    let mut trees = Vec::with_capacity(pforest.groups.len());
    let mut partitions = Vec::with_capacity(pforest.groups.len());
    for group in &pforest.groups {
        let part = resolve_leaf_partition(proposals, &pforest, group)?;
        let mut tree = if part.leaves.len() == 1 {
            HierTree::single_leaf()
        } else {
            let descriptors = part
                .leaves
                .iter()
                .map(|leaf| {
                    let mut patches: Vec<usize> = leaf
                        .pixels
                        .iter()
                        .map(|&px| features.patch_of_pixel(px / w, px % w, h, w))
                        .collect();
                    patches.sort_unstable();
                    patches.dedup();
                    pool_descriptor(features, &patches)
                })
                .collect::<Result<Vec<_>>>()?;
            let affinity = build_affinity(&descriptors)?;
            let t = match config.method {
                TreeMethod::Spectral => recursive_spectral_tree(&affinity)?,
                TreeMethod::Exact => exact_sparsest_cut_tree(&affinity, config.exact_max_n)?,
            };
            t.flatten_internal(config.flatten_gap)
        };
        for (i, leaf) in part.leaves.iter().enumerate() {
            let px = leaf
                .pixels
                .iter()
                .map(|&p| ((p / w) as u32, (p % w) as u32))
                .collect();
            tree.set_leaf_pixels(i, px)?;
        }
        trees.push(tree);
        partitions.push(part);
    }
    let forest = HierForest::new(trees);

    let mut labels: Grid<Option<u32>> = Grid::filled(h, w, None);
    let mut owner_key: Vec<Option<(usize, usize)>> = alloc::vec![None; h * w];
    for (t, part) in partitions.iter().enumerate() {
        for (i, leaf) in part.leaves.iter().enumerate() {
            let p = &proposals[leaf.proposal];
            let key = (p.area(), p.id);
            let label = forest.leaf_label(t, i)?;
            for &px in &leaf.pixels {
                if owner_key[px].is_none_or(|k| key < k) {
                    owner_key[px] = Some(key);
                    labels.as_mut_slice()[px] = Some(label);
                }
            }
        }
    }
    Ok(ViewForest { forest, labels })
}
