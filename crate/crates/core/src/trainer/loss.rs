use alloc::vec;
use alloc::vec::Vec;

use super::backprop::{angle_vjp, dist_vjp_s, lca_vjp, midpoint_forward, midpoint_vjp, proj_vjp};
use super::batch::{Batch, Triplet};
use super::config::{LossConfig, RootCentroidMode};
use super::embedding::TrainableEmbedding;
use crate::hierarchy::HierForest;
use crate::lorentz::{
    angle_unchecked, distance_unchecked, lca_surrogate_klein, Curvature, LorentzPoint,
};
use crate::math::{norm, softmax_xent};
use crate::{Error, Result};

/// Prototypes with `|p_space|` below this are left out of angular softmaxes.
pub const DEGENERATE_PROTOTYPE_NORM: f64 = 1e-9;

/// Points keyed by an ascending id (a leaf label or a tree index).
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    ids: Vec<u32>,
    points: Vec<LorentzPoint>,
}

/// Leaf prototypes keyed by forest-wide leaf label.
pub type PrototypeSet = PointSet;
/// Root centroids keyed by tree index.
pub type RootCentroidSet = PointSet;

impl PointSet {
    /// `ids` must be strictly ascending and match `points` in length; all
    /// points must share one dimension.
    pub fn new(ids: Vec<u32>, points: Vec<LorentzPoint>) -> Result<Self> {
        if ids.len() != points.len() {
            return Err(Error::DimensionMismatch {
                expected: ids.len(),
                got: points.len(),
            });
        }
        if ids.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig(
                "point set ids must be strictly ascending".into(),
            ));
        }
        if let Some(p) = points.first() {
            if let Some(q) = points.iter().find(|q| q.dim() != p.dim()) {
                return Err(Error::DimensionMismatch {
                    expected: p.dim(),
                    got: q.dim(),
                });
            }
        }
        Ok(Self { ids, points })
    }

    fn from_raw(ids: Vec<u32>, points: Vec<Vec<f64>>) -> Self {
        Self {
            ids,
            points: points.into_iter().map(LorentzPoint::from_raw).collect(),
        }
    }

    pub fn ids(&self) -> &[u32] {
        &self.ids
    }

    pub fn points(&self) -> &[LorentzPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn get(&self, id: u32) -> Option<&LorentzPoint> {
        self.index_of(id).map(|i| &self.points[i])
    }

    fn index_of(&self, id: u32) -> Option<usize> {
        self.ids.binary_search(&id).ok()
    }

    fn raw(&self) -> Vec<&[f64]> {
        self.points.iter().map(|p| p.as_slice()).collect()
    }
}

/// Raw (unweighted) loss terms and the weighted total.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossBreakdown {
    pub total: f64,
    pub leaf: f64,
    pub root: f64,
    pub comp: f64,
    pub lca: f64,
    pub norm: f64,
}

impl LossBreakdown {
    fn scaled_add(&mut self, other: &LossBreakdown, w: f64) {
        self.total += w * other.total;
        self.leaf += w * other.leaf;
        self.root += w * other.root;
        self.comp += w * other.comp;
        self.lca += w * other.lca;
        self.norm += w * other.norm;
    }
}

/// Einstein midpoint of on-manifold raw points; a single point is returned
/// unchanged so that `theta(p, s)` sees `p == s` exactly.
fn midpoint(points: &[&[f64]], c: Curvature) -> (Vec<f64>, f64) {
    if points.len() == 1 {
        return (points[0].to_vec(), points[0][0]);
    }
    midpoint_forward(points, c)
}

fn is_degenerate(p: &[f64]) -> bool {
    norm(&p[1..]) < DEGENERATE_PROTOTYPE_NORM
}

fn check(value: f64, term: &'static str) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFiniteTerm(term))
    }
}

fn check_grads(bufs: &[Vec<f64>], term: &'static str) -> Result<()> {
    if bufs.iter().flatten().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFiniteTerm(term))
    }
}

fn warn_degenerate(kind: &str, count: usize) {
    if count > 0 {
        log::warn!("{count} {kind} at the origin excluded from the softmax");
    }
}

/// Grouping of batch rays by leaf.
struct Groups {
    leaves: Vec<u32>,
    /// Leaf index of every batch position.
    of_ray: Vec<usize>,
    members: Vec<Vec<usize>>,
}

fn group_rays(labels: &[u32]) -> Groups {
    let mut leaves: Vec<u32> = labels.to_vec();
    leaves.sort_unstable();
    leaves.dedup();
    let mut members = vec![Vec::new(); leaves.len()];
    let of_ray: Vec<usize> = labels
        .iter()
        .enumerate()
        .map(|(b, l)| {
            let i = leaves.binary_search(l).expect("label present");
            members[i].push(b);
            i
        })
        .collect();
    Groups {
        leaves,
        of_ray,
        members,
    }
}

fn root_groups(forest: &HierForest, leaves: &[u32]) -> Result<(Vec<u32>, Vec<usize>)> {
    let of_leaf_tree: Vec<u32> = leaves
        .iter()
        .map(|&l| forest.root_of(l).map(|t| t as u32))
        .collect::<Result<_>>()?;
    let mut roots = of_leaf_tree.clone();
    roots.sort_unstable();
    roots.dedup();
    let of_leaf = of_leaf_tree
        .iter()
        .map(|t| roots.binary_search(t).expect("root present"))
        .collect();
    Ok((roots, of_leaf))
}

fn ray_features(batch: &Batch<'_>, emb: &TrainableEmbedding) -> Result<Vec<Vec<f64>>> {
    batch
        .rays
        .iter()
        .map(|&r| {
            if r >= emb.rays() {
                Err(Error::UnknownId(r))
            } else {
                Ok(emb.feature(r).into_vec())
            }
        })
        .collect()
}

fn as_refs(v: &[Vec<f64>]) -> Vec<&[f64]> {
    v.iter().map(|x| x.as_slice()).collect()
}

// ---------------------------------------------------------------------------
// Terms on raw coordinates. Each optionally accumulates `w * dL/dx` into the
// provided gradient buffers.

fn leaf_term(
    s: &[&[f64]],
    of_ray: &[usize],
    protos: &[&[f64]],
    tau: f64,
    c: Curvature,
    mut grad: Option<(&mut [Vec<f64>], &mut [Vec<f64>], f64)>,
) -> f64 {
    let valid: Vec<usize> = (0..protos.len())
        .filter(|&v| !is_degenerate(protos[v]))
        .collect();
    warn_degenerate("leaf prototypes", protos.len() - valid.len());
    let pos_of = |v: usize| valid.binary_search(&v).ok();
    let used = of_ray.iter().filter(|&&t| pos_of(t).is_some()).count();
    if used == 0 {
        return 0.0;
    }
    let mut logits = vec![0.0; valid.len()];
    let mut g = vec![0.0; valid.len()];
    let mut total = 0.0;
    for (b, &t) in of_ray.iter().enumerate() {
        let Some(target) = pos_of(t) else { continue };
        for (l, &v) in logits.iter_mut().zip(&valid) {
            *l = -angle_unchecked(protos[v], s[b], c) / tau;
        }
        total += softmax_xent(&logits, target, &mut g);
        if let Some((gs, gp, w)) = grad.as_mut() {
            let scale = *w / used as f64;
            for (gv, &v) in g.iter().zip(&valid) {
                let gtheta = -gv / tau * scale;
                if gtheta != 0.0 {
                    angle_vjp(protos[v], s[b], c, gtheta, &mut gp[v], &mut gs[b]);
                }
            }
        }
    }
    total / used as f64
}

fn root_term(
    protos: &[&[f64]],
    root_of_leaf: &[usize],
    centroids: &[&[f64]],
    tau: f64,
    c: Curvature,
    mut grad: Option<(&mut [Vec<f64>], &mut [Vec<f64>], f64)>,
) -> f64 {
    let valid: Vec<usize> = (0..centroids.len())
        .filter(|&v| !is_degenerate(centroids[v]))
        .collect();
    warn_degenerate("root centroids", centroids.len() - valid.len());
    let pos_of = |v: usize| valid.binary_search(&v).ok();
    let used = root_of_leaf
        .iter()
        .filter(|&&t| pos_of(t).is_some())
        .count();
    if used == 0 {
        return 0.0;
    }
    let mut logits = vec![0.0; valid.len()];
    let mut g = vec![0.0; valid.len()];
    let mut total = 0.0;
    for (l, &t) in root_of_leaf.iter().enumerate() {
        let Some(target) = pos_of(t) else { continue };
        for (x, &v) in logits.iter_mut().zip(&valid) {
            *x = -angle_unchecked(centroids[v], protos[l], c) / tau;
        }
        total += softmax_xent(&logits, target, &mut g);
        if let Some((gp, gq, w)) = grad.as_mut() {
            let scale = *w / used as f64;
            for (gv, &v) in g.iter().zip(&valid) {
                let gtheta = -gv / tau * scale;
                if gtheta != 0.0 {
                    angle_vjp(centroids[v], protos[l], c, gtheta, &mut gq[v], &mut gp[l]);
                }
            }
        }
    }
    total / used as f64
}

fn comp_term(
    s: &[&[f64]],
    of_ray: &[usize],
    protos: &[&[f64]],
    margin: f64,
    c: Curvature,
    mut grad: Option<(&mut [Vec<f64>], f64)>,
) -> f64 {
    let n = s.len() as f64;
    let mut total = 0.0;
    for (b, &t) in of_ray.iter().enumerate() {
        let e = distance_unchecked(s[b], protos[t], c) - margin;
        if e <= 0.0 {
            continue;
        }
        total += e * e;
        if let Some((gs, w)) = grad.as_mut() {
            dist_vjp_s(s[b], protos[t], c, 2.0 * e * *w / n, &mut gs[b]);
        }
    }
    total / n
}

fn klein(x: &[f64]) -> Vec<f64> {
    x[1..].iter().map(|v| v / x[0]).collect()
}

fn lca_term(
    triplets: &[(usize, usize, usize)],
    protos: &[&[f64]],
    tau: f64,
    c: Curvature,
    mut grad: Option<(&mut [Vec<f64>], f64)>,
) -> f64 {
    if triplets.is_empty() {
        return 0.0;
    }
    let n = triplets.len() as f64;
    let k: Vec<Vec<f64>> = protos.iter().map(|p| klein(p)).collect();
    let mut g = [0.0; 3];
    let mut total = 0.0;
    for &(i, j, kk) in triplets {
        let pairs = [(i, j), (i, kk), (j, kk)];
        let sur = pairs.map(|(a, b)| lca_surrogate_klein(&k[a], &k[b], c));
        let logits = sur.map(|(d, _, _)| d / tau);
        total += softmax_xent(&logits, 0, &mut g);
        if let Some((gp, w)) = grad.as_mut() {
            for (((a, b), (_, t, r)), gl) in pairs.iter().zip(&sur).zip(&g) {
                let gd = gl / tau * *w / n;
                if gd == 0.0 {
                    continue;
                }
                let mut ga = vec![0.0; protos[*a].len()];
                let mut gb = vec![0.0; protos[*b].len()];
                lca_vjp(protos[*a], protos[*b], *t, *r, c, gd, &mut ga, &mut gb);
                for (x, y) in gp[*a].iter_mut().zip(&ga) {
                    *x += y;
                }
                for (x, y) in gp[*b].iter_mut().zip(&gb) {
                    *x += y;
                }
            }
        }
    }
    total / n
}

fn norm_term(rows: &[&[f64]], r_max: f64, mut grad: Option<(&mut [Vec<f64>], f64)>) -> f64 {
    let n = rows.len() as f64;
    let mut total = 0.0;
    for (b, u) in rows.iter().enumerate() {
        let nu = norm(u);
        let e = nu - r_max;
        if e <= 0.0 {
            continue;
        }
        total += e * e;
        if let Some((gu, w)) = grad.as_mut() {
            let k = 2.0 * e * *w / (n * nu);
            for (g, x) in gu[b].iter_mut().zip(u.iter()) {
                *g += k * x;
            }
        }
    }
    total / n
}

// ---------------------------------------------------------------------------
// Public per-term API.

/// Einstein midpoint of each observed leaf's ray features.
pub fn compute_leaf_prototypes(
    batch: &Batch<'_>,
    emb: &TrainableEmbedding,
) -> Result<PrototypeSet> {
    let s = ray_features(batch, emb)?;
    let groups = group_rays(&batch.labels);
    let c = emb.curvature();
    let points = groups
        .members
        .iter()
        .map(|m| {
            let pts: Vec<&[f64]> = m.iter().map(|&b| s[b].as_slice()).collect();
            midpoint(&pts, c).0
        })
        .collect();
    Ok(PointSet::from_raw(groups.leaves, points))
}

/// Einstein midpoint, per observed root, of the ray features whose leaf lies
/// in that root's tree.
pub fn compute_root_centroids(
    batch: &Batch<'_>,
    emb: &TrainableEmbedding,
) -> Result<RootCentroidSet> {
    let s = ray_features(batch, emb)?;
    let groups = group_rays(&batch.labels);
    let (roots, of_leaf) = root_groups(batch.forest, &groups.leaves)?;
    let c = emb.curvature();
    let points = (0..roots.len())
        .map(|ri| {
            let pts: Vec<&[f64]> = (0..s.len())
                .filter(|&b| of_leaf[groups.of_ray[b]] == ri)
                .map(|b| s[b].as_slice())
                .collect();
            midpoint(&pts, c).0
        })
        .collect();
    Ok(PointSet::from_raw(roots, points))
}

/// Root centroids as the Einstein midpoint of each root's leaf prototypes.
pub fn root_centroids_from_prototypes(
    prototypes: &PrototypeSet,
    forest: &HierForest,
    c: Curvature,
) -> Result<RootCentroidSet> {
    let (roots, of_leaf) = root_groups(forest, prototypes.ids())?;
    let raw = prototypes.raw();
    let points = (0..roots.len())
        .map(|ri| {
            let pts: Vec<&[f64]> = (0..raw.len())
                .filter(|&l| of_leaf[l] == ri)
                .map(|l| raw[l])
                .collect();
            midpoint(&pts, c).0
        })
        .collect();
    Ok(PointSet::from_raw(roots, points))
}

fn prototype_indices(batch: &Batch<'_>, prototypes: &PrototypeSet) -> Result<Vec<usize>> {
    batch
        .labels
        .iter()
        .map(|&l| prototypes.index_of(l).ok_or(Error::UnknownId(l as usize)))
        .collect()
}

/// Mean over rays of the cross-entropy of `-theta(p_v, s_r) / tau` against
/// the ray's own leaf.
pub fn leaf_angular_loss(
    batch: &Batch<'_>,
    emb: &TrainableEmbedding,
    prototypes: &PrototypeSet,
    tau: f64,
) -> Result<f64> {
    let s = ray_features(batch, emb)?;
    let of_ray = prototype_indices(batch, prototypes)?;
    check(
        leaf_term(
            &as_refs(&s),
            &of_ray,
            &prototypes.raw(),
            tau,
            emb.curvature(),
            None,
        ),
        "leaf",
    )
}

/// Mean over prototypes of the cross-entropy of `-theta(q_rho, p_l) / tau`
/// against the leaf's own root.
pub fn root_angular_loss(
    prototypes: &PrototypeSet,
    centroids: &RootCentroidSet,
    forest: &HierForest,
    tau: f64,
    c: Curvature,
) -> Result<f64> {
    let root_of_leaf = prototypes
        .ids()
        .iter()
        .map(|&l| {
            let t = forest.root_of(l)? as u32;
            centroids.index_of(t).ok_or(Error::UnknownId(t as usize))
        })
        .collect::<Result<Vec<_>>>()?;
    check(
        root_term(
            &prototypes.raw(),
            &root_of_leaf,
            &centroids.raw(),
            tau,
            c,
            None,
        ),
        "root",
    )
}

/// Mean over rays of `ReLU(d(s_r, p_{y_r}) - margin)^2`.
pub fn compactness_loss(
    batch: &Batch<'_>,
    emb: &TrainableEmbedding,
    prototypes: &PrototypeSet,
    margin: f64,
) -> Result<f64> {
    let s = ray_features(batch, emb)?;
    let of_ray = prototype_indices(batch, prototypes)?;
    check(
        comp_term(
            &as_refs(&s),
            &of_ray,
            &prototypes.raw(),
            margin,
            emb.curvature(),
            None,
        ),
        "comp",
    )
}

fn triplet_indices(
    triplets: &[Triplet],
    prototypes: &PrototypeSet,
) -> Result<Vec<(usize, usize, usize)>> {
    let idx = |l: u32| prototypes.index_of(l).ok_or(Error::UnknownId(l as usize));
    triplets
        .iter()
        .map(|t| Ok((idx(t.i)?, idx(t.j)?, idx(t.k)?)))
        .collect()
}

/// Mean over triplets of the cross-entropy that favours `d_o(i, j)` over
/// `d_o(i, k)` and `d_o(j, k)`.
pub fn lca_order_loss(
    triplets: &[Triplet],
    prototypes: &PrototypeSet,
    tau: f64,
    c: Curvature,
) -> Result<f64> {
    let idx = triplet_indices(triplets, prototypes)?;
    check(lca_term(&idx, &prototypes.raw(), tau, c, None), "lca")
}

// ---------------------------------------------------------------------------
// Full objective.

struct Forward {
    rows: Vec<Vec<f64>>,
    s: Vec<Vec<f64>>,
    groups: Groups,
    protos: Vec<Vec<f64>>,
    proto_time: Vec<f64>,
    root_of_leaf: Vec<usize>,
    centroids: Vec<Vec<f64>>,
    centroid_time: Vec<f64>,
    /// Batch positions (ray mode) or leaf indices (prototype mode).
    centroid_members: Vec<Vec<usize>>,
    triplets: Vec<(usize, usize, usize)>,
}

fn forward(batch: &Batch<'_>, emb: &TrainableEmbedding, config: &LossConfig) -> Result<Forward> {
    config.validate()?;
    let c = emb.curvature();
    let s = ray_features(batch, emb)?;
    let rows = batch.rays.iter().map(|&r| emb.row(r).to_vec()).collect();
    let groups = group_rays(&batch.labels);
    let (protos, proto_time): (Vec<_>, Vec<_>) = groups
        .members
        .iter()
        .map(|m| {
            let pts: Vec<&[f64]> = m.iter().map(|&b| s[b].as_slice()).collect();
            midpoint(&pts, c)
        })
        .unzip();
    let (roots, root_of_leaf) = root_groups(batch.forest, &groups.leaves)?;
    let centroid_members: Vec<Vec<usize>> = match config.root_centroid {
        RootCentroidMode::RayFeatures => (0..roots.len())
            .map(|ri| {
                (0..s.len())
                    .filter(|&b| root_of_leaf[groups.of_ray[b]] == ri)
                    .collect()
            })
            .collect(),
        RootCentroidMode::LeafPrototypes => (0..roots.len())
            .map(|ri| {
                (0..protos.len())
                    .filter(|&l| root_of_leaf[l] == ri)
                    .collect()
            })
            .collect(),
    };
    let source = match config.root_centroid {
        RootCentroidMode::RayFeatures => &s,
        RootCentroidMode::LeafPrototypes => &protos,
    };
    let (centroids, centroid_time) = centroid_members
        .iter()
        .map(|m| {
            let pts: Vec<&[f64]> = m.iter().map(|&i| source[i].as_slice()).collect();
            midpoint(&pts, c)
        })
        .unzip();
    let idx = |l: u32| {
        groups
            .leaves
            .binary_search(&l)
            .map_err(|_| Error::UnknownId(l as usize))
    };
    let triplets = batch
        .triplets
        .iter()
        .map(|t| Ok((idx(t.i)?, idx(t.j)?, idx(t.k)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Forward {
        rows,
        s,
        groups,
        protos,
        proto_time,
        root_of_leaf,
        centroids,
        centroid_time,
        centroid_members,
        triplets,
    })
}

fn evaluate(
    batch: &Batch<'_>,
    emb: &TrainableEmbedding,
    config: &LossConfig,
    want_grad: bool,
) -> Result<(LossBreakdown, Option<Vec<f64>>)> {
    let f = forward(batch, emb, config)?;
    let c = emb.curvature();
    let hw = config.hierarchy_weight;
    let s = as_refs(&f.s);
    let p = as_refs(&f.protos);
    let q = as_refs(&f.centroids);
    let rows = as_refs(&f.rows);
    let width = emb.dim() + 1;

    let mut gs = vec![vec![0.0; width]; s.len()];
    let mut gp = vec![vec![0.0; width]; p.len()];
    let mut gq = vec![vec![0.0; width]; q.len()];
    let mut gu = vec![vec![0.0; emb.dim()]; rows.len()];
    let active = |w: f64| want_grad && w != 0.0;

    let ww = hw * config.leaf_weight;
    let leaf = check(
        leaf_term(
            &s,
            &f.groups.of_ray,
            &p,
            config.leaf_temperature,
            c,
            active(ww).then_some((gs.as_mut_slice(), gp.as_mut_slice(), ww)),
        ),
        "leaf",
    )?;
    check_grads(&gs, "leaf")?;
    check_grads(&gp, "leaf")?;

    let ww = hw * config.root_weight;
    let root = check(
        root_term(
            &p,
            &f.root_of_leaf,
            &q,
            config.root_temperature,
            c,
            active(ww).then_some((gp.as_mut_slice(), gq.as_mut_slice(), ww)),
        ),
        "root",
    )?;
    check_grads(&gp, "root")?;
    check_grads(&gq, "root")?;

    let ww = hw * config.comp_weight;
    let comp = check(
        comp_term(
            &s,
            &f.groups.of_ray,
            &p,
            config.comp_margin,
            c,
            active(ww).then_some((gs.as_mut_slice(), ww)),
        ),
        "comp",
    )?;
    check_grads(&gs, "comp")?;

    let ww = hw * config.lca_weight;
    let lca = check(
        lca_term(
            &f.triplets,
            &p,
            config.lca_temperature,
            c,
            active(ww).then_some((gp.as_mut_slice(), ww)),
        ),
        "lca",
    )?;
    check_grads(&gp, "lca")?;

    let ww = hw * config.norm_weight;
    let norm_v = check(
        norm_term(
            &rows,
            config.max_norm,
            active(ww).then_some((gu.as_mut_slice(), ww)),
        ),
        "norm",
    )?;
    check_grads(&gu, "norm")?;

    let total = hw
        * (config.leaf_weight * leaf
            + config.root_weight * root
            + config.comp_weight * comp
            + config.lca_weight * lca
            + config.norm_weight * norm_v);
    let breakdown = LossBreakdown {
        total: check(total, "total")?,
        leaf,
        root,
        comp,
        lca,
        norm: norm_v,
    };
    if !want_grad {
        return Ok((breakdown, None));
    }

    // centroids -> rays or prototypes
    for (ri, members) in f.centroid_members.iter().enumerate() {
        if gq[ri].iter().all(|&v| v == 0.0) {
            continue;
        }
        let shared = if members.len() == 1 {
            gq[ri].clone()
        } else {
            midpoint_vjp(q[ri], f.centroid_time[ri], &gq[ri], c)
        };
        let target = match config.root_centroid {
            RootCentroidMode::RayFeatures => &mut gs,
            RootCentroidMode::LeafPrototypes => &mut gp,
        };
        for &m in members {
            for (x, y) in target[m].iter_mut().zip(&shared) {
                *x += y;
            }
        }
    }
    // prototypes -> rays
    for (li, members) in f.groups.members.iter().enumerate() {
        if gp[li].iter().all(|&v| v == 0.0) {
            continue;
        }
        let shared = if members.len() == 1 {
            gp[li].clone()
        } else {
            midpoint_vjp(p[li], f.proto_time[li], &gp[li], c)
        };
        for &b in members {
            for (x, y) in gs[b].iter_mut().zip(&shared) {
                *x += y;
            }
        }
    }
    // rays -> tangent parameters
    let mut grad = vec![0.0; emb.params().len()];
    let d = emb.dim();
    for (b, &r) in batch.rays.iter().enumerate() {
        let out = &mut grad[r * d..(r + 1) * d];
        proj_vjp(rows[b], s[b][0], &gs[b], out);
        for (x, y) in out.iter_mut().zip(&gu[b]) {
            *x += y;
        }
    }
    if grad.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteTerm("gradient"));
    }
    Ok((breakdown, Some(grad)))
}

/// Weighted objective with its per-term breakdown. The norm term averages
/// over the batch rays.
pub fn total_loss(
    batch: &Batch<'_>,
    emb: &TrainableEmbedding,
    config: &LossConfig,
) -> Result<LossBreakdown> {
    Ok(evaluate(batch, emb, config, false)?.0)
}

/// Analytic gradient of [`total_loss`] with respect to every tangent
/// parameter, laid out like [`TrainableEmbedding::params`]. Compactness
/// prototypes are constants.
pub fn gradient(
    batch: &Batch<'_>,
    emb: &TrainableEmbedding,
    config: &LossConfig,
) -> Result<Vec<f64>> {
    Ok(evaluate(batch, emb, config, true)?
        .1
        .expect("gradient requested"))
}

pub fn loss_and_gradient(
    batch: &Batch<'_>,
    emb: &TrainableEmbedding,
    config: &LossConfig,
) -> Result<(LossBreakdown, Vec<f64>)> {
    let (l, g) = evaluate(batch, emb, config, true)?;
    Ok((l, g.expect("gradient requested")))
}

/// Per-image objectives averaged over `batches`.
pub fn multi_image_loss_and_gradient(
    batches: &[Batch<'_>],
    emb: &TrainableEmbedding,
    config: &LossConfig,
) -> Result<(LossBreakdown, Vec<f64>)> {
    if batches.is_empty() {
        return Err(Error::Empty("image batches"));
    }
    let w = 1.0 / batches.len() as f64;
    let mut acc = LossBreakdown::default();
    let mut grad = vec![0.0; emb.params().len()];
    for b in batches {
        let (l, g) = loss_and_gradient(b, emb, config)?;
        acc.scaled_add(&l, w);
        for (x, y) in grad.iter_mut().zip(&g) {
            *x += w * y;
        }
    }
    Ok((acc, grad))
}
