use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::hierarchy::{HierForest, HierTree, NodeId};
use crate::{Error, Result};

/// Ordered leaf triple `(i, j, k)`: `i` and `j` share a parent, `k` sits under
/// another child of their grandparent. Entries are forest-wide leaf labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Triplet {
    pub i: u32,
    pub j: u32,
    pub k: u32,
}

/// Rays of one image with their leaf labels and sampled LCA triplets.
#[derive(Debug, Clone)]
pub struct Batch<'a> {
    pub forest: &'a HierForest,
    pub rays: Vec<usize>,
    pub labels: Vec<u32>,
    pub triplets: Vec<Triplet>,
}

impl<'a> Batch<'a> {
    pub fn new(forest: &'a HierForest, rays: Vec<usize>, labels: Vec<u32>) -> Result<Self> {
        if rays.is_empty() {
            return Err(Error::Empty("batch"));
        }
        if rays.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: rays.len(),
                got: labels.len(),
            });
        }
        if let Some(&bad) = labels.iter().find(|&&l| l as usize >= forest.n_leaves()) {
            return Err(Error::UnknownId(bad as usize));
        }
        Ok(Self {
            forest,
            rays,
            labels,
            triplets: Vec::new(),
        })
    }

    pub fn with_triplets(mut self, triplets: Vec<Triplet>) -> Self {
        self.triplets = triplets;
        self
    }

    pub fn observed_leaves(&self) -> BTreeSet<u32> {
        self.labels.iter().copied().collect()
    }
}

/// Grandparent candidates of one tree: for each valid grandparent, the
/// parents with at least two observed leaf children, and the observed leaves
/// below every child.
struct Grandparent {
    parents: Vec<(usize, Vec<u32>)>,
    below: Vec<Vec<u32>>,
}

fn grandparents(forest: &HierForest, observed: &BTreeSet<u32>) -> Vec<Grandparent> {
    let mut out = Vec::new();
    for (t, tree) in forest.trees().iter().enumerate() {
        let label = |leaf: NodeId| forest.leaf_label(t, leaf).expect("leaf of this tree");
        for g in tree.n_leaves()..tree.n_nodes() {
            let children = tree.children(g).expect("valid vertex");
            let below: Vec<Vec<u32>> = children
                .iter()
                .map(|&ch| {
                    tree.leaves_under(ch)
                        .expect("valid vertex")
                        .into_iter()
                        .map(label)
                        .filter(|l| observed.contains(l))
                        .collect()
                })
                .collect();
            let parents: Vec<(usize, Vec<u32>)> = children
                .iter()
                .enumerate()
                .filter_map(|(ci, &p)| {
                    let leaf_children = observed_leaf_children(tree, p, &label, observed);
                    let has_other = below
                        .iter()
                        .enumerate()
                        .any(|(oi, b)| oi != ci && !b.is_empty());
                    (leaf_children.len() >= 2 && has_other).then_some((ci, leaf_children))
                })
                .collect();
            if !parents.is_empty() {
                out.push(Grandparent { parents, below });
            }
        }
    }
    out
}

fn observed_leaf_children(
    tree: &HierTree,
    p: NodeId,
    label: &impl Fn(NodeId) -> u32,
    observed: &BTreeSet<u32>,
) -> Vec<u32> {
    if p < tree.n_leaves() {
        return Vec::new();
    }
    tree.children(p)
        .expect("valid vertex")
        .iter()
        .filter(|&&c| c < tree.n_leaves())
        .map(|&c| label(c))
        .filter(|l| observed.contains(l))
        .collect()
}

/// Every valid LCA triplet among `observed` leaves, in a fixed order.
pub fn enumerate_lca_triplets(forest: &HierForest, observed: &BTreeSet<u32>) -> Vec<Triplet> {
    let mut out = Vec::new();
    for g in grandparents(forest, observed) {
        for (ci, leaves) in &g.parents {
            for &i in leaves {
                for &j in leaves {
                    if i == j {
                        continue;
                    }
                    for (oi, others) in g.below.iter().enumerate() {
                        if oi == *ci {
                            continue;
                        }
                        for &k in others {
                            out.push(Triplet { i, j, k });
                        }
                    }
                }
            }
        }
    }
    out
}

/// Samples `count` triplets with replacement: a valid grandparent uniformly,
/// then a valid parent, an ordered pair of its observed leaf children, another
/// child of the grandparent with observed leaves, and a leaf below it.
/// Returns an empty set when no valid triplet exists.
pub fn sample_lca_triplets(
    forest: &HierForest,
    observed: &BTreeSet<u32>,
    count: usize,
    seed: u64,
) -> Vec<Triplet> {
    let gps = grandparents(forest, observed);
    if gps.is_empty() {
        return Vec::new();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let g = &gps[rng.random_range(0..gps.len())];
        let (ci, leaves) = &g.parents[rng.random_range(0..g.parents.len())];
        let a = rng.random_range(0..leaves.len());
        let mut b = rng.random_range(0..leaves.len() - 1);
        if b >= a {
            b += 1;
        }
        let others: Vec<usize> = (0..g.below.len())
            .filter(|&oi| oi != *ci && !g.below[oi].is_empty())
            .collect();
        let q = &g.below[others[rng.random_range(0..others.len())]];
        let k = q[rng.random_range(0..q.len())];
        out.push(Triplet {
            i: leaves[a],
            j: leaves[b],
            k,
        });
    }
    out
}
