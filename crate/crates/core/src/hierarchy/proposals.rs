use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::grid::{connected_components, Grid, Mask};
use crate::{Error, Result};

/// Default containment threshold for proposal parenting.
pub const CONTAINMENT_THRESHOLD: f64 = 0.8;

/// Binary mask proposal with a caller-chosen id.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskProposal {
    pub id: usize,
    mask: Mask,
    area: usize,
}

impl MaskProposal {
    pub fn new(id: usize, mask: Mask) -> Result<Self> {
        let area = mask.area();
        if area == 0 {
            return Err(Error::Empty("mask proposal"));
        }
        Ok(Self { id, mask, area })
    }

    pub fn mask(&self) -> &Mask {
        &self.mask
    }

    pub fn area(&self) -> usize {
        self.area
    }

    fn key(&self) -> (usize, usize) {
        (self.area, self.id)
    }
}

/// Proposals grouped under one root. `members` are indices into the proposal
/// slice, ordered by `(area, id)` ascending; the root is last.
#[derive(Debug, Clone, PartialEq)]
pub struct ProposalGroup {
    pub root: usize,
    pub members: Vec<usize>,
}

/// Containment forest over a proposal list. Indices refer to positions in the
/// slice passed to [`assign_parents`].
#[derive(Debug, Clone, PartialEq)]
pub struct ProposalForest {
    pub parent: Vec<Option<usize>>,
    pub groups: Vec<ProposalGroup>,
}

impl ProposalForest {
    pub fn root_of(&self, mut i: usize) -> usize {
        while let Some(p) = self.parent[i] {
            i = p;
        }
        i
    }
}

/// Parent of each proposal = the smallest proposal of strictly larger area
/// whose containment ratio `|child & cand| / |child|` exceeds `threshold`.
/// Equal areas are ordered by id. Groups are ordered by root index.
pub fn assign_parents(proposals: &[MaskProposal], threshold: f64) -> ProposalForest {
    let n = proposals.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| proposals[i].key());
    let mut parent = vec![None; n];
    for (rank, &i) in order.iter().enumerate() {
        let child = &proposals[i];
        for &j in &order[rank + 1..] {
            let cand = &proposals[j];
            if cand.area <= child.area {
                continue;
            }
            let inter = child.mask.intersection_count(&cand.mask);
            if inter as f64 / child.area as f64 > threshold {
                parent[i] = Some(j);
                break;
            }
        }
    }
    let mut by_root: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let forest = ProposalForest {
        parent,
        groups: Vec::new(),
    };
    for &i in &order {
        by_root.entry(forest.root_of(i)).or_default().push(i);
    }
    ProposalForest {
        groups: by_root
            .into_iter()
            .map(|(root, members)| ProposalGroup { root, members })
            .collect(),
        ..forest
    }
}

/// One non-overlapping leaf region of a group.
#[derive(Debug, Clone, PartialEq)]
pub struct LeafRegion {
    /// Flat pixel indices, ascending.
    pub pixels: Vec<usize>,
    /// Proposal that owns these pixels (smallest covering proposal).
    pub proposal: usize,
    /// Proposal chain from `proposal` up to the group root.
    pub ancestors: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeafPartition {
    /// Leaf index per pixel; `None` outside the group.
    pub labels: Grid<Option<u32>>,
    /// Leaves ordered by their first pixel in raster order.
    pub leaves: Vec<LeafRegion>,
}

/// Assigns each covered pixel to the smallest covering proposal of the group
/// and splits every resulting region into 4-connected components.
pub fn resolve_leaf_partition(
    proposals: &[MaskProposal],
    forest: &ProposalForest,
    group: &ProposalGroup,
) -> Result<LeafPartition> {
    let first = group
        .members
        .first()
        .ok_or(Error::Empty("proposal group"))?;
    let shape = proposals[*first].mask();
    let (h, w) = (shape.height(), shape.width());
    for &m in &group.members {
        proposals[m].mask().same_shape(shape)?;
    }
    // members are sorted by (area, id): the first cover found is the smallest
    let mut owner: Vec<Option<usize>> = vec![None; h * w];
    for &m in &group.members {
        for (px, &set) in proposals[m].mask().as_slice().iter().enumerate() {
            if set && owner[px].is_none() {
                owner[px] = Some(m);
            }
        }
    }
    let mut leaves = Vec::new();
    for &m in &group.members {
        let region = Grid::from_vec(h, w, owner.iter().map(|&o| o == Some(m)).collect())?;
        let mut ancestors = vec![m];
        let mut v = m;
        while let Some(p) = forest.parent[v] {
            ancestors.push(p);
            v = p;
        }
        for pixels in connected_components(&region) {
            leaves.push(LeafRegion {
                pixels,
                proposal: m,
                ancestors: ancestors.clone(),
            });
        }
    }
    leaves.sort_by_key(|l| l.pixels[0]);
    let mut labels = Grid::filled(h, w, None);
    for (i, leaf) in leaves.iter().enumerate() {
        for &px in &leaf.pixels {
            labels.as_mut_slice()[px] = Some(i as u32);
        }
    }
    Ok(LeafPartition { labels, leaves })
}
