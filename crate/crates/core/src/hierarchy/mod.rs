//! 2D hierarchy supervision: descriptors, affinity graphs, containment
//! parenting, leaf partitions and tree construction.

mod affinity;
mod dasgupta;
mod pipeline;
mod proposals;
mod tree;

pub use affinity::{
    build_affinity, pool_descriptor, AffinityGraph, PatchFeatureMap, RegionDescriptor,
};
pub use dasgupta::{
    dasgupta_cost, exact_sparsest_cut, exact_sparsest_cut_tree, fiedler_bisection,
    fiedler_sweep_bisection, normalized_dasgupta_cost, optimal_dasgupta_cost,
    recursive_spectral_tree, sparsest_cut_ratio, EXACT_MAX_N, FIEDLER_TIE_EPS,
};
pub use pipeline::{build_view_forest, ForestConfig, TreeMethod, ViewForest};
pub use proposals::{
    assign_parents, resolve_leaf_partition, LeafPartition, LeafRegion, MaskProposal,
    ProposalForest, ProposalGroup, CONTAINMENT_THRESHOLD,
};
pub use tree::{HierForest, HierTree, NodeId, NodeKind};
