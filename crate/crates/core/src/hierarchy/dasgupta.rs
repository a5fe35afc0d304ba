//! Dasgupta cost and top-down tree builders.
//!
//! `C(T; W) = sum_{a<b} W_ab |Leaf(LCA(a, b))|`. Two builders are provided:
//! recursive spectral bisection on the normalized Laplacian (the practical
//! one) and exhaustive recursive sparsest cut (an exponential oracle).

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use super::affinity::AffinityGraph;
use super::tree::{HierTree, NodeId};
use crate::linalg::jacobi_eigen;
use crate::math::sqrt;
use crate::{Error, Result};

/// Default size limit of [`exact_sparsest_cut_tree`].
pub const EXACT_MAX_N: usize = 20;

/// Fiedler entries below this magnitude count as positive.
pub const FIEDLER_TIE_EPS: f64 = 1e-12;

/// Sum over leaf pairs `a < b` of `W_ab` times the leaf count of their LCA.
pub fn dasgupta_cost(tree: &HierTree, w: &AffinityGraph) -> Result<f64> {
    if tree.n_leaves() != w.n() {
        return Err(Error::LeafMismatch {
            leaves: tree.n_leaves(),
            rows: w.n(),
        });
    }
    let n = w.n();
    let mut cost = 0.0;
    for a in 0..n {
        for b in (a + 1)..n {
            let wab = w.get(a, b);
            if wab != 0.0 {
                cost += wab * tree.leaf_count_unchecked(tree.lca_unchecked(a, b)) as f64;
            }
        }
    }
    Ok(cost)
}

/// `cost / (n * sum_{a<b} W_ab)`, in `[0, 1]`; zero for an empty graph.
pub fn normalized_dasgupta_cost(tree: &HierTree, w: &AffinityGraph) -> Result<f64> {
    let cost = dasgupta_cost(tree, w)?;
    let total = w.total_weight();
    Ok(if total > 0.0 {
        cost / (w.n() as f64 * total)
    } else {
        0.0
    })
}

/// Connected components of the subgraph induced by `vertices` (edges `W > 0`),
/// each sorted, ordered by smallest vertex.
fn components(w: &AffinityGraph, vertices: &[usize]) -> Vec<Vec<usize>> {
    let m = vertices.len();
    let mut seen = vec![false; m];
    let mut out = Vec::new();
    for s in 0..m {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut comp = vec![vertices[s]];
        let mut stack = vec![s];
        while let Some(a) = stack.pop() {
            for b in 0..m {
                if !seen[b] && w.get(vertices[a], vertices[b]) > 0.0 {
                    seen[b] = true;
                    comp.push(vertices[b]);
                    stack.push(b);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

fn ordered(mut a: Vec<usize>, mut b: Vec<usize>) -> (Vec<usize>, Vec<usize>) {
    a.sort_unstable();
    b.sort_unstable();
    if a[0] < b[0] {
        (a, b)
    } else {
        (b, a)
    }
}

/// Sorted, deduplicated vertex set, or a split of a disconnected induced
/// subgraph into its largest component (ties: smallest vertex) and the rest.
enum Prepared {
    Connected(Vec<usize>),
    Split(Vec<usize>, Vec<usize>),
}

fn prepare(w: &AffinityGraph, subset: &[usize]) -> Result<Prepared> {
    if subset.len() < 2 {
        return Err(Error::Empty("bisection needs at least two vertices"));
    }
    for &v in subset {
        if v >= w.n() {
            return Err(Error::UnknownId(v));
        }
    }
    let mut vertices = subset.to_vec();
    vertices.sort_unstable();
    vertices.dedup();
    if vertices.len() < 2 {
        return Err(Error::Empty("bisection needs at least two vertices"));
    }

    let comps = components(w, &vertices);
    if comps.len() > 1 {
        let largest = comps
            .iter()
            .enumerate()
            .max_by(|(i, a), (j, b)| a.len().cmp(&b.len()).then(j.cmp(i)))
            .map(|(i, _)| i)
            .expect("at least two components");
        let mut rest = Vec::new();
        for (i, c) in comps.iter().enumerate() {
            if i != largest {
                rest.extend_from_slice(c);
            }
        }
        let (a, b) = ordered(comps[largest].clone(), rest);
        return Ok(Prepared::Split(a, b));
    }
    Ok(Prepared::Connected(vertices))
}

/// Second eigenvector of the normalized Laplacian of the induced subgraph and
/// the inverse square-root degrees.
fn fiedler_vector(w: &AffinityGraph, vertices: &[usize]) -> (Vec<f64>, Vec<f64>) {
    let m = vertices.len();
    let sub = w.induced(vertices);
    let inv_sqrt_deg: Vec<f64> = (0..m)
        .map(|a| {
            let d: f64 = (0..m).map(|b| sub.get(a, b)).sum();
            if d > 0.0 {
                1.0 / sqrt(d)
            } else {
                0.0
            }
        })
        .collect();
    let mut lap = vec![0.0; m * m];
    for a in 0..m {
        for b in 0..m {
            let off = inv_sqrt_deg[a] * sub.get(a, b) * inv_sqrt_deg[b];
            lap[a * m + b] = if a == b { 1.0 - off } else { -off };
        }
    }
    let eig = jacobi_eigen(&lap, m);
    (eig.vectors[1].clone(), inv_sqrt_deg)
}

/// Splits `subset` in two by the sign of the Fiedler vector of the normalized
/// Laplacian `I - D^-1/2 W D^-1/2` of the induced subgraph.
///
/// A disconnected induced subgraph is split into its largest component (ties:
/// smallest vertex) and the rest without any eigen computation; isolated
/// vertices always end up in the rest. Near-zero entries go to the positive
/// side and an empty side receives the vertex of smallest magnitude. The side
/// holding the smallest vertex is returned first.
pub fn fiedler_bisection(w: &AffinityGraph, subset: &[usize]) -> Result<(Vec<usize>, Vec<usize>)> {
    let vertices = match prepare(w, subset)? {
        Prepared::Connected(v) => v,
        Prepared::Split(a, b) => return Ok((a, b)),
    };
    let (fiedler, _) = fiedler_vector(w, &vertices);

    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for (a, &x) in fiedler.iter().enumerate() {
        if x.abs() < FIEDLER_TIE_EPS || x > 0.0 {
            pos.push(a);
        } else {
            neg.push(a);
        }
    }
    if pos.is_empty() || neg.is_empty() {
        let (from, to) = if neg.is_empty() {
            (&mut pos, &mut neg)
        } else {
            (&mut neg, &mut pos)
        };
        let k = (0..from.len())
            .min_by(|&i, &j| {
                fiedler[from[i]]
                    .abs()
                    .total_cmp(&fiedler[from[j]].abs())
                    .then(from[i].cmp(&from[j]))
            })
            .expect("non-empty side");
        to.push(from.remove(k));
    }
    Ok(ordered(
        pos.into_iter().map(|a| vertices[a]).collect(),
        neg.into_iter().map(|a| vertices[a]).collect(),
    ))
}

/// Builds a tree from a splitting rule. Internal vertices get ids `n, n+1, ...`
/// in preorder.
fn build_top_down(
    n: usize,
    mut split: impl FnMut(&[usize]) -> Result<(Vec<usize>, Vec<usize>)>,
) -> Result<HierTree> {
    if n == 0 {
        return Err(Error::Empty("tree needs at least one leaf"));
    }
    if n == 1 {
        return Ok(HierTree::single_leaf());
    }
    let mut parent: Vec<Option<NodeId>> = vec![None; 2 * n - 1];
    let mut next = n;
    // (vertex set, parent id)
    let mut stack: Vec<(Vec<usize>, Option<NodeId>)> = vec![((0..n).collect(), None)];
    while let Some((set, par)) = stack.pop() {
        if set.len() == 1 {
            parent[set[0]] = par;
            continue;
        }
        let id = next;
        next += 1;
        parent[id] = par;
        let (a, b) = split(&set)?;
        // push b first so that a's subtree is numbered first
        stack.push((b, Some(id)));
        stack.push((a, Some(id)));
    }
    HierTree::from_parents(n, parent)
}

/// Sweep cut along the Fiedler ordering: vertices are sorted by
/// `D^-1/2 v` and the prefix with the smallest `cut / (|S| |S'|)` is taken
/// (ties: shortest prefix). Disconnected subsets split as in
/// [`fiedler_bisection`].
pub fn fiedler_sweep_bisection(
    w: &AffinityGraph,
    subset: &[usize],
) -> Result<(Vec<usize>, Vec<usize>)> {
    let vertices = match prepare(w, subset)? {
        Prepared::Connected(v) => v,
        Prepared::Split(a, b) => return Ok((a, b)),
    };
    let m = vertices.len();
    let (fiedler, inv_sqrt_deg) = fiedler_vector(w, &vertices);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| {
        (fiedler[a] * inv_sqrt_deg[a])
            .total_cmp(&(fiedler[b] * inv_sqrt_deg[b]))
            .then(a.cmp(&b))
    });
    // cut(prefix, rest) updated as each vertex crosses over
    let mut in_prefix = vec![false; m];
    let mut cut = 0.0;
    let mut best = (f64::INFINITY, 0);
    for k in 1..m {
        let a = order[k - 1];
        in_prefix[a] = true;
        for b in 0..m {
            if b != a {
                let x = w.get(vertices[a], vertices[b]);
                cut += if in_prefix[b] { -x } else { x };
            }
        }
        let ratio = cut / (k * (m - k)) as f64;
        if ratio < best.0 {
            best = (ratio, k);
        }
    }
    let k = best.1.max(1);
    Ok(ordered(
        order[..k].iter().map(|&a| vertices[a]).collect(),
        order[k..].iter().map(|&a| vertices[a]).collect(),
    ))
}

/// Recursive spectral bisection (sweep cuts) down to singleton leaves; a
/// binary tree with `n - 1` internal vertices.
pub fn recursive_spectral_tree(w: &AffinityGraph) -> Result<HierTree> {
    build_top_down(w.n(), |set| fiedler_sweep_bisection(w, set))
}

/// `cut(S, S') / (|S| |S'|)`.
pub fn sparsest_cut_ratio(w: &AffinityGraph, s: &[usize], rest: &[usize]) -> f64 {
    let mut cut = 0.0;
    for &a in s {
        for &b in rest {
            cut += w.get(a, b);
        }
    }
    cut / (s.len() * rest.len()) as f64
}

/// Exhaustive sparsest cut of `vertices` (sorted): the side containing the
/// smallest vertex and its complement. Ties go to the lexicographically
/// smallest side.
pub fn exact_sparsest_cut(w: &AffinityGraph, vertices: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let m = vertices.len();
    debug_assert!(m >= 2 && m < 64);
    let full = (1u64 << m) - 1;
    let mut best: Option<(f64, Vec<usize>, Vec<usize>)> = None;
    // bit 0 always in S: 2^(m-1) - 1 proper bipartitions
    let mut mask = 1u64;
    while mask < full {
        let mut s = Vec::new();
        let mut r = Vec::new();
        for (i, &v) in vertices.iter().enumerate() {
            if mask >> i & 1 == 1 {
                s.push(v);
            } else {
                r.push(v);
            }
        }
        let ratio = sparsest_cut_ratio(w, &s, &r);
        let better = match &best {
            None => true,
            Some((b, bs, _)) => ratio < *b || (ratio == *b && s < *bs),
        };
        if better {
            best = Some((ratio, s, r));
        }
        mask += 2;
    }
    let (_, s, r) = best.expect("at least one bipartition");
    (s, r)
}

/// Recursive exact sparsest cut; errors when `n > max_n`.
pub fn exact_sparsest_cut_tree(w: &AffinityGraph, max_n: usize) -> Result<HierTree> {
    if w.n() > max_n || w.n() >= 64 {
        return Err(Error::TooLarge {
            n: w.n(),
            max: max_n,
        });
    }
    build_top_down(w.n(), |set| Ok(exact_sparsest_cut(w, set)))
}

/// Minimum Dasgupta cost over all binary trees, by exhaustive recursion over
/// subsets (`3^n` work). Only meant for small `n`.
pub fn optimal_dasgupta_cost(w: &AffinityGraph) -> Result<f64> {
    let n = w.n();
    if n > EXACT_MAX_N {
        return Err(Error::TooLarge {
            n,
            max: EXACT_MAX_N,
        });
    }
    let mut memo: BTreeMap<u32, f64> = BTreeMap::new();
    Ok(opt_rec(w, ((1u64 << n) - 1) as u32, &mut memo))
}

fn opt_rec(w: &AffinityGraph, set: u32, memo: &mut BTreeMap<u32, f64>) -> f64 {
    if set.count_ones() <= 1 {
        return 0.0;
    }
    if let Some(&c) = memo.get(&set) {
        return c;
    }
    let size = set.count_ones() as f64;
    let low = set & set.wrapping_neg();
    let rest = set ^ low;
    let mut best = f64::INFINITY;
    // enumerate subsets a of set containing the lowest bit, a != set
    let mut sub = rest;
    loop {
        let a = sub | low;
        if a != set {
            let b = set ^ a;
            let mut cross = 0.0;
            for i in 0..32 {
                if a >> i & 1 == 1 {
                    for j in 0..32 {
                        if b >> j & 1 == 1 {
                            cross += w.get(i, j);
                        }
                    }
                }
            }
            let c = opt_rec(w, a, memo) + opt_rec(w, b, memo) + size * cross;
            if c < best {
                best = c;
            }
        }
        if sub == 0 {
            break;
        }
        sub = (sub - 1) & rest;
    }
    memo.insert(set, best);
    best
}
