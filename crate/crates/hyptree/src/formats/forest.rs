//! Forest JSON: an array of trees, each `{tree_id, nodes: [...]}` with
//! leaves listed first.

use std::fs;
use std::path::Path;

use hyptree_core::hierarchy::{HierForest, HierTree, NodeKind};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Leaf,
    Internal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub id: usize,
    pub kind: Kind,
    pub parent: Option<usize>,
    /// `[row, col]` pairs; leaves only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pixels: Option<Vec<[u32; 2]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeRecord {
    pub tree_id: usize,
    pub nodes: Vec<NodeRecord>,
}

pub fn to_records(forest: &HierForest) -> Vec<TreeRecord> {
    forest
        .trees()
        .iter()
        .enumerate()
        .map(|(tree_id, t)| TreeRecord {
            tree_id,
            nodes: (0..t.n_nodes())
                .map(|id| {
                    let leaf = t.kind(id).expect("node in range") == NodeKind::Leaf;
                    NodeRecord {
                        id,
                        kind: if leaf { Kind::Leaf } else { Kind::Internal },
                        parent: t.parents()[id],
                        pixels: leaf.then(|| {
                            t.leaf_pixels(id)
                                .expect("leaf id")
                                .iter()
                                .map(|&(r, c)| [r, c])
                                .collect()
                        }),
                    }
                })
                .collect(),
        })
        .collect()
}

pub fn from_records(records: &[TreeRecord]) -> Result<HierForest> {
    let mut trees = Vec::with_capacity(records.len());
    for (i, rec) in records.iter().enumerate() {
        if rec.tree_id != i {
            return Err(CliError::config(format!(
                "tree {i} has tree_id {}",
                rec.tree_id
            )));
        }
        let mut nodes = rec.nodes.clone();
        nodes.sort_by_key(|n| n.id);
        if nodes.iter().enumerate().any(|(k, n)| n.id != k) {
            return Err(CliError::config(format!("tree {i}: node ids must be 0..n")));
        }
        let n_leaves = nodes.iter().take_while(|n| n.kind == Kind::Leaf).count();
        if nodes[n_leaves..].iter().any(|n| n.kind == Kind::Leaf) {
            return Err(CliError::config(format!(
                "tree {i}: leaves must precede internal nodes"
            )));
        }
        let mut tree = HierTree::from_parents(n_leaves, nodes.iter().map(|n| n.parent).collect())?;
        for n in &nodes[..n_leaves] {
            if let Some(px) = &n.pixels {
                tree.set_leaf_pixels(n.id, px.iter().map(|p| (p[0], p[1])).collect())?;
            }
        }
        trees.push(tree);
    }
    Ok(HierForest::new(trees))
}

pub fn to_json(forest: &HierForest) -> Result<String> {
    Ok(serde_json::to_string_pretty(&to_records(forest))?)
}

pub fn from_json(s: &str) -> Result<HierForest> {
    from_records(&serde_json::from_str::<Vec<TreeRecord>>(s)?)
}

pub fn write(path: &Path, forest: &HierForest) -> Result<()> {
    fs::write(path, to_json(forest)? + "\n").map_err(|e| CliError::io(path, e))
}

pub fn read(path: &Path) -> Result<HierForest> {
    from_json(&fs::read_to_string(path).map_err(|e| CliError::io(path, e))?)
}
