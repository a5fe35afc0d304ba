use alloc::vec;
use alloc::vec::Vec;

use super::features::FeatureGrid;
use crate::grid::Mask;
use crate::lorentz::Curvature;
use crate::math::sq_dist;
use crate::{Error, Result};

/// Smallest region that is re-clustered or kept as a candidate.
pub const MIN_REGION: usize = 30;
/// Weighted neighbour count (self included) that makes a point core.
pub const MIN_SAMPLES: usize = 30;
/// Upper bound on the number of generated candidates.
pub const NODE_CAP: usize = 10_000;

/// Coarse-to-fine epsilon values, 0.50 down to 0.002.
pub fn epsilon_schedule() -> Vec<f64> {
    let mut out: Vec<f64> = (0..=6).map(|i| (50 - 5 * i) as f64 / 100.0).collect();
    out.extend_from_slice(&[
        0.175, 0.15, 0.125, 0.10, 0.09, 0.075, 0.06, 0.05, 0.04, 0.035, 0.03, 0.025, 0.02, 0.015,
        0.01, 0.0075, 0.005, 0.0035, 0.002,
    ]);
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateConfig {
    pub epsilons: Vec<f64>,
    pub min_region: usize,
    pub min_samples: usize,
    pub node_cap: usize,
}

impl Default for CandidateConfig {
    fn default() -> Self {
        Self {
            epsilons: epsilon_schedule(),
            min_region: MIN_REGION,
            min_samples: MIN_SAMPLES,
            node_cap: NODE_CAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub mask: Mask,
    /// Epsilon at which the region was split off.
    pub epsilon: f64,
    /// Index of the candidate it was split from; `None` for the full image.
    pub parent: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CandidatePool {
    pub candidates: Vec<Candidate>,
}

impl CandidatePool {
    pub fn from_masks(masks: Vec<Mask>) -> Self {
        Self {
            candidates: masks
                .into_iter()
                .map(|mask| Candidate {
                    mask,
                    epsilon: 0.0,
                    parent: None,
                })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn masks(&self) -> impl Iterator<Item = &Mask> {
        self.candidates.iter().map(|c| &c.mask)
    }
}

/// Distinct points with their multiplicities, ordered by first occurrence.
struct Unique {
    points: Vec<usize>,
    weight: Vec<usize>,
    /// Unique index of every input point.
    of_input: Vec<usize>,
}

fn dedup(points: &[&[f64]]) -> Unique {
    let mut order: Vec<usize> = (0..points.len()).collect();
    let cmp = |a: &[f64], b: &[f64]| {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(core::cmp::Ordering::Equal)
    };
    order.sort_by(|&i, &j| cmp(points[i], points[j]).then(i.cmp(&j)));
    let mut rep = vec![0usize; points.len()];
    let mut k = 0;
    while k < order.len() {
        let head = order[k];
        let mut e = k;
        while e < order.len() && cmp(points[order[e]], points[head]).is_eq() {
            rep[order[e]] = head;
            e += 1;
        }
        k = e;
    }
    let mut index_of = vec![usize::MAX; points.len()];
    let mut out = Unique {
        points: Vec::new(),
        weight: Vec::new(),
        of_input: vec![0; points.len()],
    };
    for i in 0..points.len() {
        let h = rep[i];
        if index_of[h] == usize::MAX {
            index_of[h] = out.points.len();
            out.points.push(h);
            out.weight.push(0);
        }
        out.weight[index_of[h]] += 1;
        out.of_input[i] = index_of[h];
    }
    out
}

/// Indices sorted by first coordinate for windowed range queries.
struct Sweep<'a> {
    pts: Vec<&'a [f64]>,
    sorted: Vec<usize>,
}

impl<'a> Sweep<'a> {
    fn new(pts: Vec<&'a [f64]>) -> Self {
        let mut sorted: Vec<usize> = (0..pts.len()).collect();
        let key = |i: usize| pts[i].first().copied().unwrap_or(0.0);
        sorted.sort_by(|&a, &b| key(a).total_cmp(&key(b)).then(a.cmp(&b)));
        Self { pts, sorted }
    }

    /// Calls `f(j, squared distance)` for every `j` within `eps` of point `i`.
    fn within(&self, i: usize, eps: f64, mut f: impl FnMut(usize, f64)) {
        let x = self.pts[i].first().copied().unwrap_or(0.0);
        let key = |j: usize| self.pts[j].first().copied().unwrap_or(0.0);
        let lo = self.sorted.partition_point(|&j| key(j) < x - eps);
        let e2 = eps * eps;
        for &j in &self.sorted[lo..] {
            if key(j) > x + eps {
                break;
            }
            let d = sq_dist(self.pts[i], self.pts[j]);
            if d <= e2 {
                f(j, d);
            }
        }
    }
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Density clustering on an epsilon neighbourhood graph.
///
/// A point is core when at least `min_samples` points (itself included) lie
/// within Euclidean distance `eps`. Clusters are connected components of core
/// points; a non-core point within `eps` of a core point joins the cluster of
/// its nearest such core (ties by input order); everything else is noise
/// (`None`). Cluster ids follow the order of each cluster's first point.
pub fn dbscan(points: &[&[f64]], eps: f64, min_samples: usize) -> Vec<Option<usize>> {
    let n = points.len();
    if n == 0 {
        return Vec::new();
    }
    let u = dedup(points);
    let m = u.points.len();
    let sweep = Sweep::new(u.points.iter().map(|&i| points[i]).collect());
    let mut count = vec![0usize; m];
    for (i, c) in count.iter_mut().enumerate() {
        sweep.within(i, eps, |j, _| *c += u.weight[j]);
    }
    let core: Vec<bool> = count.iter().map(|&c| c >= min_samples).collect();
    let mut parent: Vec<usize> = (0..m).collect();
    for i in (0..m).filter(|&i| core[i]) {
        sweep.within(i, eps, |j, _| {
            if core[j] {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        });
    }
    // unique index -> representative core root (core) or nearest core's root
    let mut owner: Vec<Option<usize>> = vec![None; m];
    for i in 0..m {
        if core[i] {
            owner[i] = Some(find(&mut parent, i));
            continue;
        }
        let mut best: Option<(f64, usize)> = None;
        sweep.within(i, eps, |j, d| {
            if core[j] && best.is_none_or(|(bd, bj)| d < bd || (d == bd && j < bj)) {
                best = Some((d, j));
            }
        });
        owner[i] = best.map(|(_, j)| find(&mut parent, j));
    }
    // renumber clusters by first input point (unique points are in input order)
    let mut id_of_root = vec![usize::MAX; m];
    let mut next = 0;
    let mut unique_label = vec![None; m];
    for i in 0..m {
        if let Some(r) = owner[i] {
            if id_of_root[r] == usize::MAX {
                id_of_root[r] = next;
                next += 1;
            }
            unique_label[i] = Some(id_of_root[r]);
        }
    }
    u.of_input.iter().map(|&k| unique_label[k]).collect()
}

/// Gives every noise point the label of its nearest labelled point (ties by
/// input order). All-noise input stays unlabelled.
fn assign_noise(points: &[&[f64]], labels: &mut [Option<usize>]) {
    let labelled: Vec<usize> = (0..points.len()).filter(|&i| labels[i].is_some()).collect();
    if labelled.is_empty() {
        return;
    }
    for i in 0..points.len() {
        if labels[i].is_some() {
            continue;
        }
        let mut best = (f64::INFINITY, usize::MAX);
        for &j in &labelled {
            let d = sq_dist(points[i], points[j]);
            if d < best.0 {
                best = (d, j);
            }
        }
        labels[i] = labels[best.1];
    }
}

/// Recursive coarse-to-fine splitting of the view into candidate regions.
///
/// Starting from the full image, every current leaf region with at least
/// `min_region` pixels is re-clustered in tangent space at each epsilon.
/// Noise pixels join their nearest cluster, clusters below `min_region` are
/// dropped, and a split that reproduces the whole region is ignored. Accepted
/// clusters become candidates and the new leaves.
pub fn generate_candidates(
    grid: &FeatureGrid,
    c: Curvature,
    config: &CandidateConfig,
) -> Result<CandidatePool> {
    if grid.is_empty() {
        return Err(Error::Empty("feature grid"));
    }
    let (h, w) = (grid.height(), grid.width());
    let z = grid.tangent(c);
    let mut pool = CandidatePool::default();
    let mut leaves: Vec<(Vec<usize>, Option<usize>)> = vec![((0..grid.len()).collect(), None)];
    for &eps in &config.epsilons {
        let mut next = Vec::with_capacity(leaves.len());
        for (pixels, id) in leaves {
            if pixels.len() < config.min_region || pool.len() >= config.node_cap {
                next.push((pixels, id));
                continue;
            }
            let pts: Vec<&[f64]> = pixels.iter().map(|&p| z[p].as_slice()).collect();
            let mut labels = dbscan(&pts, eps, config.min_samples);
            assign_noise(&pts, &mut labels);
            let n_clusters = labels.iter().flatten().max().map_or(0, |m| m + 1);
            let mut clusters = vec![Vec::new(); n_clusters];
            for (&p, l) in pixels.iter().zip(&labels) {
                if let Some(l) = l {
                    clusters[*l].push(p);
                }
            }
            clusters.retain(|cl| cl.len() >= config.min_region);
            if clusters.is_empty() || (clusters.len() == 1 && clusters[0].len() == pixels.len()) {
                next.push((pixels, id));
                continue;
            }
            for cl in clusters {
                if pool.len() >= config.node_cap {
                    break;
                }
                pool.candidates.push(Candidate {
                    mask: Mask::from_indices(h, w, &cl),
                    epsilon: eps,
                    parent: id,
                });
                next.push((cl, Some(pool.len() - 1)));
            }
        }
        leaves = next;
    }
    Ok(pool)
}
