use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

pub type NodeId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Leaf,
    Internal,
}

/// Rooted tree whose vertices `0..n_leaves` are the leaves (in leaf-index
/// order) and whose remaining vertices are virtual internal nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct HierTree {
    parent: Vec<Option<NodeId>>,
    children: Vec<Vec<NodeId>>,
    depth: Vec<usize>,
    leaf_count: Vec<usize>,
    n_leaves: usize,
    root: NodeId,
    pixels: Vec<Vec<(u32, u32)>>,
}

impl HierTree {
    pub fn single_leaf() -> Self {
        Self::from_parents(1, vec![None]).expect("single leaf is a valid tree")
    }

    /// Builds a tree from parent links. Vertices `< n_leaves` must be leaves
    /// (no children); every other vertex must have at least one child.
    pub fn from_parents(n_leaves: usize, parent: Vec<Option<NodeId>>) -> Result<Self> {
        let n = parent.len();
        if n_leaves == 0 || n_leaves > n {
            return Err(Error::InvalidTree(format!(
                "{n_leaves} leaves among {n} vertices"
            )));
        }
        let mut children = vec![Vec::new(); n];
        let mut root = None;
        for (v, p) in parent.iter().enumerate() {
            match *p {
                None => {
                    if root.replace(v).is_some() {
                        return Err(Error::InvalidTree("more than one root".into()));
                    }
                }
                Some(p) if p >= n || p == v => {
                    return Err(Error::InvalidTree(format!("bad parent {p} of {v}")));
                }
                Some(p) => children[p].push(v),
            }
        }
        let root = root.ok_or_else(|| Error::InvalidTree("no root".into()))?;
        for (v, ch) in children.iter().enumerate() {
            if v < n_leaves && !ch.is_empty() {
                return Err(Error::InvalidTree(format!("leaf {v} has children")));
            }
            if v >= n_leaves && ch.is_empty() {
                return Err(Error::InvalidTree(format!(
                    "internal vertex {v} has no children"
                )));
            }
        }
        // depth by traversal from the root; unreached vertices mean a cycle
        let mut depth = vec![usize::MAX; n];
        depth[root] = 0;
        let mut order = Vec::with_capacity(n);
        let mut stack = vec![root];
        while let Some(v) = stack.pop() {
            order.push(v);
            for &c in &children[v] {
                depth[c] = depth[v] + 1;
                stack.push(c);
            }
        }
        if order.len() != n {
            return Err(Error::InvalidTree("cycle or disconnected vertex".into()));
        }
        let mut leaf_count = vec![0; n];
        for &v in order.iter().rev() {
            leaf_count[v] = if v < n_leaves {
                1
            } else {
                children[v].iter().map(|&c| leaf_count[c]).sum()
            };
        }
        Ok(Self {
            parent,
            children,
            depth,
            leaf_count,
            n_leaves,
            root,
            pixels: vec![Vec::new(); n_leaves],
        })
    }

    pub fn n_leaves(&self) -> usize {
        self.n_leaves
    }

    pub fn n_nodes(&self) -> usize {
        self.parent.len()
    }

    pub fn n_internal(&self) -> usize {
        self.parent.len() - self.n_leaves
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn parents(&self) -> &[Option<NodeId>] {
        &self.parent
    }

    fn check(&self, v: NodeId) -> Result<()> {
        if v < self.parent.len() {
            Ok(())
        } else {
            Err(Error::UnknownId(v))
        }
    }

    pub fn parent(&self, v: NodeId) -> Result<Option<NodeId>> {
        self.check(v)?;
        Ok(self.parent[v])
    }

    pub fn children(&self, v: NodeId) -> Result<&[NodeId]> {
        self.check(v)?;
        Ok(&self.children[v])
    }

    pub fn kind(&self, v: NodeId) -> Result<NodeKind> {
        self.check(v)?;
        Ok(if v < self.n_leaves {
            NodeKind::Leaf
        } else {
            NodeKind::Internal
        })
    }

    pub fn depth(&self, v: NodeId) -> Result<usize> {
        self.check(v)?;
        Ok(self.depth[v])
    }

    /// Number of leaf descendants `|Leaf(v)|`.
    pub fn leaf_count(&self, v: NodeId) -> Result<usize> {
        self.check(v)?;
        Ok(self.leaf_count[v])
    }

    pub fn lca(&self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.lca_unchecked(a, b))
    }

    pub(crate) fn lca_unchecked(&self, mut a: NodeId, mut b: NodeId) -> NodeId {
        while self.depth[a] > self.depth[b] {
            a = self.parent[a].expect("non-root has a parent");
        }
        while self.depth[b] > self.depth[a] {
            b = self.parent[b].expect("non-root has a parent");
        }
        while a != b {
            a = self.parent[a].expect("non-root has a parent");
            b = self.parent[b].expect("non-root has a parent");
        }
        a
    }

    pub(crate) fn leaf_count_unchecked(&self, v: NodeId) -> usize {
        self.leaf_count[v]
    }

    /// `(y, par(y), ..., root)`.
    pub fn ancestor_chain(&self, leaf: NodeId) -> Result<Vec<NodeId>> {
        self.check(leaf)?;
        let mut chain = vec![leaf];
        let mut v = leaf;
        while let Some(p) = self.parent[v] {
            chain.push(p);
            v = p;
        }
        Ok(chain)
    }

    /// Leaves below `v` in ascending order.
    pub fn leaves_under(&self, v: NodeId) -> Result<Vec<NodeId>> {
        self.check(v)?;
        let mut out = Vec::new();
        let mut stack = vec![v];
        while let Some(u) = stack.pop() {
            if u < self.n_leaves {
                out.push(u);
            } else {
                stack.extend_from_slice(&self.children[u]);
            }
        }
        out.sort_unstable();
        Ok(out)
    }

    /// Subtree height (longest downward path to a leaf) of every vertex.
    pub fn heights(&self) -> Vec<usize> {
        let n = self.n_nodes();
        let mut order: Vec<NodeId> = (0..n).collect();
        order.sort_by_key(|&v| core::cmp::Reverse(self.depth[v]));
        let mut h = vec![0usize; n];
        for v in order {
            if let Some(p) = self.parent[v] {
                h[p] = h[p].max(h[v] + 1);
            }
        }
        h
    }

    pub fn leaf_pixels(&self, leaf: NodeId) -> Result<&[(u32, u32)]> {
        if leaf >= self.n_leaves {
            return Err(Error::UnknownId(leaf));
        }
        Ok(&self.pixels[leaf])
    }

    pub fn set_leaf_pixels(&mut self, leaf: NodeId, pixels: Vec<(u32, u32)>) -> Result<()> {
        if leaf >= self.n_leaves {
            return Err(Error::UnknownId(leaf));
        }
        self.pixels[leaf] = pixels;
        Ok(())
    }

    /// Merges every non-root internal vertex into its parent when the
    /// difference of their subtree heights is at most `gap`. Heights are taken
    /// from the input tree; surviving internal vertices keep their relative
    /// order. `gap = 0` returns an identical tree.
    pub fn flatten_internal(&self, gap: usize) -> HierTree {
        if gap == 0 {
            return self.clone();
        }
        let h = self.heights();
        let n = self.n_nodes();
        let merged: Vec<bool> = (0..n)
            .map(|v| v >= self.n_leaves && self.parent[v].is_some_and(|p| h[p] - h[v] <= gap))
            .collect();
        let mut new_id = vec![usize::MAX; n];
        let mut next = 0;
        for v in 0..n {
            if !merged[v] {
                new_id[v] = next;
                next += 1;
            }
        }
        let mut parent = vec![None; next];
        for v in 0..n {
            if merged[v] {
                continue;
            }
            let mut p = self.parent[v];
            while let Some(q) = p {
                if !merged[q] {
                    break;
                }
                p = self.parent[q];
            }
            parent[new_id[v]] = p.map(|q| new_id[q]);
        }
        let mut t = HierTree::from_parents(self.n_leaves, parent)
            .expect("flattening preserves tree validity");
        t.pixels = self.pixels.clone();
        t
    }
}

/// Collection of trees, one per root-induced group. Leaves are addressed by a
/// forest-wide label: the leaves of tree `t` occupy
/// `offset(t) .. offset(t) + n_leaves(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HierForest {
    trees: Vec<HierTree>,
    offsets: Vec<usize>,
}

impl HierForest {
    pub fn new(trees: Vec<HierTree>) -> Self {
        let mut offsets = Vec::with_capacity(trees.len() + 1);
        let mut acc = 0;
        for t in &trees {
            offsets.push(acc);
            acc += t.n_leaves();
        }
        offsets.push(acc);
        Self { trees, offsets }
    }

    pub fn trees(&self) -> &[HierTree] {
        &self.trees
    }

    pub fn n_leaves(&self) -> usize {
        *self.offsets.last().unwrap_or(&0)
    }

    pub fn leaf_label(&self, tree: usize, leaf: NodeId) -> Result<u32> {
        let t = self.trees.get(tree).ok_or(Error::UnknownId(tree))?;
        if leaf >= t.n_leaves() {
            return Err(Error::UnknownId(leaf));
        }
        Ok((self.offsets[tree] + leaf) as u32)
    }

    /// `(tree index, leaf vertex)` of a forest-wide leaf label.
    pub fn locate(&self, label: u32) -> Result<(usize, NodeId)> {
        let l = label as usize;
        if l >= self.n_leaves() {
            return Err(Error::UnknownId(l));
        }
        let t = self.offsets.partition_point(|&o| o <= l) - 1;
        Ok((t, l - self.offsets[t]))
    }

    /// Index of the tree (root group) that holds `label`.
    pub fn root_of(&self, label: u32) -> Result<usize> {
        Ok(self.locate(label)?.0)
    }
}
