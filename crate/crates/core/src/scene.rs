//! Seeded synthetic scenes with a known ground-truth hierarchy.
//!
//! The image is split recursively into rectangles following the branching
//! factors; each split runs along the longer side of the unjittered rectangle,
//! and every view perturbs the split positions independently. Each non-root
//! node gets a random unit direction (mutually orthonormal when there are at
//! most `descriptor_dim` of them); a leaf descriptor is the normalized sum of
//! the directions along its ancestor chain plus per-view Gaussian noise.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::eval::{EvalScene, EvalView, FeatureGrid};
use crate::grid::{Grid, Mask};
use crate::hierarchy::{
    build_view_forest, ForestConfig, HierForest, HierTree, MaskProposal, PatchFeatureMap,
    ViewForest,
};
use crate::math::{dot, norm};
use crate::trainer::{TrainableEmbedding, TrainingImage};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSceneSpec {
    pub height: usize,
    pub width: usize,
    /// Children per node, coarsest level first; every entry must be >= 2.
    pub branching: Vec<usize>,
    pub descriptor_dim: usize,
    pub noise_sigma: f64,
    pub views: usize,
    pub seed: u64,
    /// Maximum per-view shift of every split position, in pixels.
    pub jitter: usize,
    /// Also emit the full-image region as a mask proposal.
    pub include_image_root: bool,
}

impl Default for SyntheticSceneSpec {
    fn default() -> Self {
        Self {
            height: 32,
            width: 32,
            branching: vec![4, 2, 2],
            descriptor_dim: 64,
            noise_sigma: 0.05,
            views: 2,
            seed: 0,
            jitter: 1,
            include_image_root: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Rect {
    r0: usize,
    r1: usize,
    c0: usize,
    c1: usize,
}

impl Rect {
    fn rows(&self) -> usize {
        self.r1 - self.r0
    }

    fn cols(&self) -> usize {
        self.c1 - self.c0
    }

    fn contains(&self, r: usize, c: usize) -> bool {
        (self.r0..self.r1).contains(&r) && (self.c0..self.c1).contains(&c)
    }

    fn center(&self) -> (usize, usize) {
        ((self.r0 + self.r1) / 2, (self.c0 + self.c1) / 2)
    }
}

/// Ground-truth node: vertex 0 is the image root, then levels in order.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneNode {
    pub parent: Option<usize>,
    pub level: usize,
    pub children: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneView {
    /// Ground-truth leaf index per pixel.
    pub leaf_labels: Grid<u32>,
    /// Pixel descriptors (one patch per pixel).
    pub descriptors: PatchFeatureMap,
    pub proposals: Vec<MaskProposal>,
    pub query: (usize, usize),
    /// Mask of the query's ancestor at each level, coarsest first.
    pub level_masks: Vec<Mask>,
    /// Mask of every node, indexed like [`SyntheticScene::nodes`].
    pub node_masks: Vec<Mask>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticScene {
    pub spec: SyntheticSceneSpec,
    pub nodes: Vec<SceneNode>,
    /// Node ids of the leaves; leaf `i` of [`Self::gt_forest`] is `leaves[i]`.
    pub leaves: Vec<usize>,
    pub query_leaf: usize,
    pub level_names: Vec<String>,
    /// Single tree over the ground truth, image root included.
    pub gt_forest: HierForest,
    pub views: Vec<SceneView>,
}

impl SyntheticScene {
    pub fn n_leaves(&self) -> usize {
        self.leaves.len()
    }

    /// Masks of every node except the image root, for one view.
    pub fn gt_groups(&self, view: usize) -> Vec<Mask> {
        self.views[view].node_masks[1..].to_vec()
    }

    pub fn pixels_per_view(&self) -> usize {
        self.spec.height * self.spec.width
    }

    /// Ray id of a pixel: views are laid out one after another.
    pub fn ray_of(&self, view: usize, pixel: usize) -> usize {
        view * self.pixels_per_view() + pixel
    }

    /// Supervision forest of every view, built from its proposals and
    /// descriptors.
    pub fn view_forests(&self, config: &ForestConfig) -> Result<Vec<ViewForest>> {
        self.views
            .iter()
            .map(|v| build_view_forest(&v.proposals, &v.descriptors, config))
            .collect()
    }

    /// One training image per view; pixels outside every proposal are skipped.
    pub fn training_images(&self, forests: &[ViewForest]) -> Result<Vec<TrainingImage>> {
        forests
            .iter()
            .enumerate()
            .map(|(v, f)| {
                let (rays, labels) = f
                    .labels
                    .as_slice()
                    .iter()
                    .enumerate()
                    .filter_map(|(px, l)| l.map(|l| (self.ray_of(v, px), l)))
                    .unzip();
                TrainingImage::new(f.forest.clone(), rays, labels)
            })
            .collect()
    }

    /// Evaluation bundle with per-pixel features taken from `emb`.
    pub fn eval_scene(&self, emb: &TrainableEmbedding) -> Result<EvalScene> {
        let n = self.pixels_per_view();
        if emb.rays() < n * self.views.len() {
            return Err(Error::DimensionMismatch {
                expected: n * self.views.len(),
                got: emb.rays(),
            });
        }
        let views = self
            .views
            .iter()
            .enumerate()
            .map(|(v, sv)| {
                let pts = (0..n).map(|px| emb.feature(self.ray_of(v, px))).collect();
                Ok(EvalView {
                    features: FeatureGrid::new(self.spec.height, self.spec.width, pts)?,
                    query: sv.query,
                    level_masks: sv.level_masks.clone(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        EvalScene::new(self.level_names.clone(), views)
    }
}

/// Names of `n` levels, coarsest first.
pub fn level_names(n: usize) -> Vec<String> {
    match n {
        1 => vec!["Fine".to_string()],
        2 => vec!["Coarse".to_string(), "Fine".to_string()],
        3 => vec![
            "Coarse".to_string(),
            "Medium".to_string(),
            "Fine".to_string(),
        ],
        _ => (1..=n).map(|i| format!("Level{i}")).collect(),
    }
}

fn validate(spec: &SyntheticSceneSpec) -> Result<()> {
    if spec.branching.is_empty() || spec.branching.iter().any(|&b| b < 2) {
        return Err(Error::InvalidConfig(
            "branching factors must be >= 2".into(),
        ));
    }
    if !(spec.noise_sigma.is_finite() && spec.noise_sigma >= 0.0) {
        return Err(Error::InvalidConfig("noise sigma must be >= 0".into()));
    }
    if spec.views == 0 || spec.descriptor_dim == 0 || spec.height == 0 || spec.width == 0 {
        return Err(Error::InvalidConfig(
            "views, descriptor_dim, height and width must be positive".into(),
        ));
    }
    Ok(())
}

/// Split `[lo, hi)` into `b` parts, shifting interior cuts by `offsets`.
fn cuts(lo: usize, hi: usize, b: usize, offsets: &[i64]) -> Vec<usize> {
    let len = hi - lo;
    let mut out = vec![lo];
    for i in 1..b {
        let base = (lo + i * len / b) as i64;
        out.push((base + offsets[i - 1]) as usize);
    }
    out.push(hi);
    out
}

fn split(rect: Rect, b: usize, along_cols: bool, offsets: &[i64]) -> Vec<Rect> {
    if along_cols {
        cuts(rect.c0, rect.c1, b, offsets)
            .windows(2)
            .map(|w| Rect {
                c0: w[0],
                c1: w[1],
                ..rect
            })
            .collect()
    } else {
        cuts(rect.r0, rect.r1, b, offsets)
            .windows(2)
            .map(|w| Rect {
                r0: w[0],
                r1: w[1],
                ..rect
            })
            .collect()
    }
}

fn gaussian(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| StandardNormal.sample(&mut *rng)).collect()
}

fn directions(rng: &mut ChaCha8Rng, count: usize, d: usize) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(count);
    while out.len() < count {
        let mut v = gaussian(rng, d);
        if count <= d {
            for u in &out {
                let k = dot(&v, u);
                v.iter_mut().zip(u).for_each(|(x, y)| *x -= k * y);
            }
        }
        let n = norm(&v);
        if n > 1e-8 {
            v.iter_mut().for_each(|x| *x /= n);
            out.push(v);
        }
    }
    out
}

/// Generates a scene; identical specs give identical scenes.
pub fn gen_scene(spec: &SyntheticSceneSpec) -> Result<SyntheticScene> {
    validate(spec)?;
    let (h, w) = (spec.height, spec.width);

    // topology and unjittered geometry
    let mut nodes = vec![SceneNode {
        parent: None,
        level: 0,
        children: Vec::new(),
    }];
    let mut base = vec![Rect {
        r0: 0,
        r1: h,
        c0: 0,
        c1: w,
    }];
    let mut axis: Vec<bool> = Vec::new();
    let mut frontier = vec![0usize];
    let min_part = 2 * spec.jitter + 1;
    for (lvl, &b) in spec.branching.iter().enumerate() {
        let mut next = Vec::new();
        for &v in &frontier {
            let r = base[v];
            let along_cols = r.cols() >= r.rows();
            let len = if along_cols { r.cols() } else { r.rows() };
            if len < b * min_part {
                return Err(Error::InvalidConfig(format!(
                    "{h}x{w} grid too small for branching {:?} with jitter {}",
                    spec.branching, spec.jitter
                )));
            }
            axis.resize(nodes.len(), false);
            axis[v] = along_cols;
            for part in split(r, b, along_cols, &vec![0; b - 1]) {
                let id = nodes.len();
                nodes.push(SceneNode {
                    parent: Some(v),
                    level: lvl + 1,
                    children: Vec::new(),
                });
                nodes[v].children.push(id);
                base.push(part);
                next.push(id);
            }
        }
        frontier = next;
    }
    axis.resize(nodes.len(), false);
    let leaves = frontier;
    let depth = spec.branching.len();

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let dirs = directions(&mut rng, nodes.len() - 1, spec.descriptor_dim);
    let query_leaf = rng.random_range(0..leaves.len());

    // chain sums per leaf (root excluded)
    let chain_sum: Vec<Vec<f64>> = leaves
        .iter()
        .map(|&leaf| {
            let mut s = vec![0.0; spec.descriptor_dim];
            let mut v = leaf;
            while let Some(p) = nodes[v].parent {
                s.iter_mut().zip(&dirs[v - 1]).for_each(|(a, b)| *a += b);
                v = p;
            }
            s
        })
        .collect();

    let mut chain = vec![leaves[query_leaf]];
    while let Some(p) = nodes[*chain.last().unwrap()].parent {
        chain.push(p);
    }
    chain.reverse(); // image root first, then one node per level

    let mut views = Vec::with_capacity(spec.views);
    for _ in 0..spec.views {
        let mut rects = vec![
            Rect {
                r0: 0,
                r1: h,
                c0: 0,
                c1: w
            };
            nodes.len()
        ];
        for v in 0..nodes.len() {
            let b = nodes[v].children.len();
            if b == 0 {
                continue;
            }
            let j = spec.jitter as i64;
            let offsets: Vec<i64> = (1..b).map(|_| rng.random_range(-j..=j)).collect();
            for (ch, r) in nodes[v]
                .children
                .iter()
                .zip(split(rects[v], b, axis[v], &offsets))
            {
                rects[*ch] = r;
            }
        }
        let mut leaf_labels = Grid::filled(h, w, 0u32);
        for (i, &leaf) in leaves.iter().enumerate() {
            let r = rects[leaf];
            for row in r.r0..r.r1 {
                for col in r.c0..r.c1 {
                    leaf_labels.set(row, col, i as u32);
                }
            }
        }
        let leaf_desc: Vec<Vec<f64>> = chain_sum
            .iter()
            .map(|s| {
                let noise = gaussian(&mut rng, spec.descriptor_dim);
                let mut d: Vec<f64> = s
                    .iter()
                    .zip(&noise)
                    .map(|(a, n)| a + spec.noise_sigma * n)
                    .collect();
                let n = norm(&d);
                d.iter_mut().for_each(|x| *x /= n);
                d
            })
            .collect();
        let mut data = Vec::with_capacity(h * w * spec.descriptor_dim);
        for &l in leaf_labels.as_slice() {
            data.extend_from_slice(&leaf_desc[l as usize]);
        }
        let descriptors = PatchFeatureMap::new(h, w, spec.descriptor_dim, data)?;
        let node_masks: Vec<Mask> = rects
            .iter()
            .map(|r| {
                let mut m = Mask::empty(h, w);
                for row in r.r0..r.r1 {
                    for col in r.c0..r.c1 {
                        m.set(row, col, true);
                    }
                }
                m
            })
            .collect();
        let first = usize::from(!spec.include_image_root);
        let proposals = (first..nodes.len())
            .map(|v| MaskProposal::new(v, node_masks[v].clone()))
            .collect::<Result<Vec<_>>>()?;
        let query = rects[leaves[query_leaf]].center();
        debug_assert!(rects[leaves[query_leaf]].contains(query.0, query.1));
        let level_masks = chain[1..].iter().map(|&v| node_masks[v].clone()).collect();
        views.push(SceneView {
            leaf_labels,
            descriptors,
            proposals,
            query,
            level_masks,
            node_masks,
        });
    }

    // ground-truth tree: leaves first, then internal nodes in node order
    let mut vertex = vec![usize::MAX; nodes.len()];
    for (i, &leaf) in leaves.iter().enumerate() {
        vertex[leaf] = i;
    }
    let mut next = leaves.len();
    for (v, slot) in vertex.iter_mut().enumerate() {
        if nodes[v].children.is_empty() {
            continue;
        }
        *slot = next;
        next += 1;
    }
    let mut parents = vec![None; nodes.len()];
    for (v, n) in nodes.iter().enumerate() {
        parents[vertex[v]] = n.parent.map(|p| vertex[p]);
    }
    let tree = HierTree::from_parents(leaves.len(), parents)?;

    Ok(SyntheticScene {
        spec: spec.clone(),
        nodes,
        leaves,
        query_leaf,
        level_names: level_names(depth),
        gt_forest: HierForest::new(vec![tree]),
        views,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_level_two_leaves() {
        let spec = SyntheticSceneSpec {
            height: 8,
            width: 8,
            branching: vec![2],
            views: 1,
            ..SyntheticSceneSpec::default()
        };
        let s = gen_scene(&spec).unwrap();
        let t = &s.gt_forest.trees()[0];
        assert_eq!(s.gt_forest.trees().len(), 1);
        assert_eq!(t.n_leaves(), 2);
        assert_eq!(t.children(t.root()).unwrap(), &[0, 1]);
        assert_eq!(s.level_names, vec!["Fine".to_string()]);
    }

    #[test]
    fn too_small_grid_errors() {
        let spec = SyntheticSceneSpec {
            height: 4,
            width: 4,
            branching: vec![4, 2, 2],
            ..SyntheticSceneSpec::default()
        };
        assert!(gen_scene(&spec).is_err());
    }
}
