#![allow(dead_code)]

use hyptree_core::hierarchy::{
    build_affinity, AffinityGraph, HierForest, HierTree, RegionDescriptor,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Two-level tree `root -> [(l0, l1), (l2, ...)]`-style: `groups[i]` leaves
/// under internal child `i`; a group of size 1 is attached as a bare leaf.
pub fn grouped_tree(groups: &[usize]) -> HierTree {
    let n_leaves: usize = groups.iter().sum();
    let internal: Vec<usize> = groups.iter().filter(|&&g| g > 1).copied().collect();
    let root = n_leaves;
    let mut parents = vec![None; n_leaves + 1 + internal.len()];
    let mut next_leaf = 0;
    let mut next_internal = root + 1;
    for &g in groups {
        if g == 1 {
            parents[next_leaf] = Some(root);
            next_leaf += 1;
        } else {
            parents[next_internal] = Some(root);
            for _ in 0..g {
                parents[next_leaf] = Some(next_internal);
                next_leaf += 1;
            }
            next_internal += 1;
        }
    }
    HierTree::from_parents(n_leaves, parents).unwrap()
}

/// Random forest with at least two trees; the first always admits an LCA
/// triplet.
pub fn random_forest(r: &mut ChaCha8Rng) -> HierForest {
    let mut trees = vec![grouped_tree(&[2, 1 + r.random_range(0..2usize)])];
    for _ in 0..r.random_range(1..3usize) {
        let k = r.random_range(1..3usize);
        let groups: Vec<usize> = (0..k).map(|_| r.random_range(1..3usize)).collect();
        if groups.iter().sum::<usize>() < 2 {
            trees.push(HierTree::single_leaf());
        } else {
            trees.push(grouped_tree(&groups));
        }
    }
    HierForest::new(trees)
}

/// Affinity graph of `n` random unit descriptors in `dim` dimensions.
pub fn random_graph(r: &mut ChaCha8Rng, n: usize, dim: usize) -> AffinityGraph {
    let descriptors: Vec<RegionDescriptor> = (0..n)
        .map(|_| {
            let v: Vec<f64> = (0..dim).map(|_| r.sample(StandardNormal)).collect();
            RegionDescriptor::from_vec(v).unwrap()
        })
        .collect();
    build_affinity(&descriptors).unwrap()
}
