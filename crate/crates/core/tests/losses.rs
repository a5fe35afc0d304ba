//! Loss terms against hand-placed configurations and direct re-evaluation.

mod common;

use std::collections::BTreeSet;
use std::f64::consts::LN_2;

use hyptree_core::hierarchy::{HierForest, HierTree};
use hyptree_core::lorentz::{
    einstein_midpoint, exterior_angle, geodesic_distance, klein_inverse, lca_depth_surrogate,
    project_to_hyperboloid,
};
use hyptree_core::trainer::{
    aggregate_ray_feature, compactness_loss, compute_leaf_prototypes, compute_root_centroids,
    enumerate_lca_triplets, gradient, lca_order_loss, leaf_angular_loss, root_angular_loss,
    root_centroids_from_prototypes, sample_lca_triplets, total_loss, Batch, LossConfig, PointSet,
    RaySamples, TrainableEmbedding, Triplet,
};
use hyptree_core::{Curvature, KleinPoint, LorentzPoint, TangentVector};

fn c1() -> Curvature {
    Curvature::default()
}

fn emb(rows: &[&[f64]]) -> TrainableEmbedding {
    let dim = rows[0].len();
    let params = rows.iter().flat_map(|r| r.iter().copied()).collect();
    TrainableEmbedding::new(params, rows.len(), dim, c1()).unwrap()
}

fn point(u: &[f64]) -> LorentzPoint {
    project_to_hyperboloid(&TangentVector(u.to_vec()), c1()).unwrap()
}

/// Point at geodesic distance `d` from the origin along the first axis (c = 1).
fn at_distance(d: f64) -> LorentzPoint {
    LorentzPoint::new(vec![d.cosh(), d.sinh(), 0.0], c1()).unwrap()
}

fn forest(groups: &[&[usize]]) -> HierForest {
    HierForest::new(groups.iter().map(|g| common::grouped_tree(g)).collect())
}

fn xent(logits: &[f64], target: usize) -> f64 {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + logits.iter().map(|l| (l - m).exp()).sum::<f64>().ln();
    lse - logits[target]
}

#[test]
fn aggregate_examples() {
    let a = vec![0.2, -0.4];
    let s = RaySamples::new(vec![a.clone()], vec![1.0]).unwrap();
    assert_eq!(aggregate_ray_feature(&s, c1()).unwrap(), point(&a));
    let s = RaySamples::new(vec![a.clone(), a.clone()], vec![0.5, 0.5]).unwrap();
    assert_eq!(aggregate_ray_feature(&s, c1()).unwrap(), point(&a));
    let b = vec![1.0, 0.8];
    let s = RaySamples::new(vec![a.clone(), b.clone()], vec![0.25, 0.75]).unwrap();
    let mixed = [0.25 * a[0] + 0.75 * b[0], 0.25 * a[1] + 0.75 * b[1]];
    let got = aggregate_ray_feature(&s, c1()).unwrap();
    for (x, y) in got.as_slice().iter().zip(point(&mixed).as_slice()) {
        assert!((x - y).abs() < 1e-15);
    }
    assert!(RaySamples::new(vec![a.clone()], vec![0.9]).is_err());
    assert!(RaySamples::new(vec![], vec![]).is_err());
    let kept = RaySamples::select_high_weight(vec![a.clone(), b], &[1e-4, 0.5], 1e-3).unwrap();
    assert_eq!(kept.weights(), &[1.0]);
}

#[test]
fn prototype_examples() {
    let f = forest(&[&[2, 1]]);
    let e = emb(&[&[0.3, 0.1], &[0.5, -0.2], &[-0.5, 0.2], &[0.7, 0.7]]);
    let b = Batch::new(&f, vec![0, 1, 2, 3], vec![0, 1, 1, 2]).unwrap();
    let p = compute_leaf_prototypes(&b, &e).unwrap();
    assert_eq!(p.ids(), &[0, 1, 2]);
    assert_eq!(p.get(0).unwrap(), &e.feature(0));
    // (u, -u): the origin
    assert!(p.get(1).unwrap().space().iter().all(|v| v.abs() < 1e-15));

    let e = TrainableEmbedding::gaussian(5, 3, c1(), 0.8, 5).unwrap();
    let f = forest(&[&[1]]);
    let b = Batch::new(&f, (0..5).collect(), vec![0; 5]).unwrap();
    let p = compute_leaf_prototypes(&b, &e).unwrap();
    let feats: Vec<LorentzPoint> = (0..5).map(|i| e.feature(i)).collect();
    let oracle = einstein_midpoint(&feats, c1()).unwrap();
    for (x, y) in p.get(0).unwrap().as_slice().iter().zip(oracle.as_slice()) {
        assert!((x - y).abs() < 1e-12);
    }
}

#[test]
fn root_centroid_uses_rays() {
    // leaf 0 has three rays, leaf 1 one ray, same root
    let f = forest(&[&[2]]);
    let e = emb(&[&[0.9, 0.0], &[0.8, 0.1], &[0.85, -0.1], &[-0.4, 0.6]]);
    let b = Batch::new(&f, vec![0, 1, 2, 3], vec![0, 0, 0, 1]).unwrap();
    let q = compute_root_centroids(&b, &e).unwrap();
    let feats: Vec<LorentzPoint> = (0..4).map(|i| e.feature(i)).collect();
    let over_rays = einstein_midpoint(&feats, c1()).unwrap();
    for (x, y) in q
        .get(0)
        .unwrap()
        .as_slice()
        .iter()
        .zip(over_rays.as_slice())
    {
        assert!((x - y).abs() < 1e-12);
    }
    let protos = compute_leaf_prototypes(&b, &e).unwrap();
    let over_protos = root_centroids_from_prototypes(&protos, &f, c1()).unwrap();
    let gap = geodesic_distance(q.get(0).unwrap(), over_protos.get(0).unwrap(), c1()).unwrap();
    assert!(gap > 1e-3, "the two aggregations should differ here");
}

#[test]
fn leaf_loss_examples() {
    let f = forest(&[&[2, 2]]);
    // single observed leaf
    let e = emb(&[&[0.3, 0.1], &[0.5, -0.2]]);
    let b = Batch::new(&f, vec![0, 1], vec![2, 2]).unwrap();
    let p = compute_leaf_prototypes(&b, &e).unwrap();
    assert_eq!(leaf_angular_loss(&b, &e, &p, 0.22).unwrap(), 0.0);

    // rays at the origin see every prototype at theta = pi: uniform softmax
    let e = emb(&[&[0.0, 0.0], &[0.0, 0.0], &[0.0, 0.0]]);
    let b = Batch::new(&f, vec![0, 1, 2], vec![0, 1, 3]).unwrap();
    let protos = PointSet::new(
        vec![0, 1, 3],
        vec![point(&[0.4, 0.0]), point(&[0.0, -0.9]), point(&[-0.2, 0.3])],
    )
    .unwrap();
    let l = leaf_angular_loss(&b, &e, &protos, 0.22).unwrap();
    assert!((l - 3f64.ln()).abs() < 1e-12);

    // two leaves, hand-placed: direct re-evaluation
    let rows: [&[f64]; 3] = [&[0.6, 0.2], &[0.5, 0.4], &[-0.3, 0.7]];
    let e = emb(&rows);
    let b = Batch::new(&f, vec![0, 1, 2], vec![0, 0, 1]).unwrap();
    let p = compute_leaf_prototypes(&b, &e).unwrap();
    let tau = 0.22;
    let mut expected = 0.0;
    for (r, y) in [(0usize, 0usize), (1, 0), (2, 1)] {
        let s = e.feature(r);
        let logits: Vec<f64> = p
            .points()
            .iter()
            .map(|pv| -exterior_angle(pv, &s, c1()).unwrap() / tau)
            .collect();
        expected += xent(&logits, y);
    }
    expected /= 3.0;
    let got = leaf_angular_loss(&b, &e, &p, tau).unwrap();
    assert!((got - expected).abs() < 1e-12, "{got} vs {expected}");

    // set semantics: permuting leaf labels permutes prototypes, same loss
    let b2 = Batch::new(&f, vec![0, 1, 2], vec![3, 3, 1]).unwrap();
    let p2 = compute_leaf_prototypes(&b2, &e).unwrap();
    assert!((leaf_angular_loss(&b2, &e, &p2, tau).unwrap() - got).abs() < 1e-12);
}

#[test]
fn root_loss_examples() {
    let f = forest(&[&[2], &[1]]);
    let centroids =
        PointSet::new(vec![0, 1], vec![point(&[0.5, 0.0]), point(&[-0.5, 0.0])]).unwrap();
    // one observed root
    let protos = PointSet::new(vec![0, 1], vec![point(&[0.4, 0.1]), point(&[0.6, -0.1])]).unwrap();
    let one = PointSet::new(vec![0], vec![point(&[0.5, 0.0])]).unwrap();
    assert_eq!(
        root_angular_loss(&protos, &one, &f, 0.2, c1()).unwrap(),
        0.0
    );
    // prototypes at the origin sit at theta = pi from both centroids
    let o = LorentzPoint::origin(2, c1());
    let protos = PointSet::new(vec![0, 2], vec![o.clone(), o]).unwrap();
    let l = root_angular_loss(&protos, &centroids, &f, 0.2, c1()).unwrap();
    assert!((l - LN_2).abs() < 1e-12);
    // direct re-evaluation
    let pts = [point(&[0.3, 0.2]), point(&[0.2, -0.6]), point(&[-0.7, 0.1])];
    let protos = PointSet::new(vec![0, 1, 2], pts.to_vec()).unwrap();
    let roots = [0usize, 0, 1];
    let mut expected = 0.0;
    for (l, p) in pts.iter().enumerate() {
        let logits: Vec<f64> = centroids
            .points()
            .iter()
            .map(|q| -exterior_angle(q, p, c1()).unwrap() / 0.2)
            .collect();
        expected += xent(&logits, roots[l]);
    }
    expected /= 3.0;
    let got = root_angular_loss(&protos, &centroids, &f, 0.2, c1()).unwrap();
    assert!((got - expected).abs() < 1e-12);
}

#[test]
fn compactness_examples() {
    let f = forest(&[&[1]]);
    // ray at the origin, prototype at distance margin + 0.3
    let e = emb(&[&[0.0, 0.0]]);
    let b = Batch::new(&f, vec![0], vec![0]).unwrap();
    let far = PointSet::new(vec![0], vec![at_distance(0.4)]).unwrap();
    assert!((compactness_loss(&b, &e, &far, 0.1).unwrap() - 0.09).abs() < 1e-12);
    let edge = PointSet::new(vec![0], vec![at_distance(0.1)]).unwrap();
    assert_eq!(compactness_loss(&b, &e, &edge, 0.1 + 1e-12).unwrap(), 0.0);
    let own = compute_leaf_prototypes(&b, &e).unwrap();
    assert_eq!(compactness_loss(&b, &e, &own, 0.0).unwrap(), 0.0);
}

#[test]
fn lca_loss_examples() {
    let o = LorentzPoint::origin(2, c1());
    let t = [Triplet { i: 0, j: 1, k: 2 }];
    let same = PointSet::new(vec![0, 1, 2], vec![o.clone(), o.clone(), o]).unwrap();
    assert!((lca_order_loss(&t, &same, 0.5, c1()).unwrap() - 3f64.ln()).abs() < 1e-12);
    assert_eq!(lca_order_loss(&[], &same, 0.5, c1()).unwrap(), 0.0);

    // i, j deep and close together, k on the far side: d_o(i, j) dominates
    let k = |x: f64, y: f64| klein_inverse(&KleinPoint(vec![x, y]), c1()).unwrap();
    let sat = PointSet::new(
        vec![0, 1, 2],
        vec![k(0.999, 0.0), k(0.999, 0.001), k(-0.9, 0.0)],
    )
    .unwrap();
    assert!(lca_order_loss(&t, &sat, 0.5, c1()).unwrap() < 1e-2);

    let pts = [k(0.5, 0.1), k(0.3, 0.6), k(-0.4, -0.2)];
    let protos = PointSet::new(vec![0, 1, 2], pts.to_vec()).unwrap();
    let d = |a: usize, b: usize| lca_depth_surrogate(&pts[a], &pts[b], c1()).unwrap() / 0.5;
    let expected = xent(&[d(0, 1), d(0, 2), d(1, 2)], 0);
    assert!((lca_order_loss(&t, &protos, 0.5, c1()).unwrap() - expected).abs() < 1e-12);
}

#[test]
fn norm_regularizer_examples() {
    let e = emb(&[&[3.0, 4.0], &[0.1, 0.0]]);
    assert_eq!(e.max_norm_regularizer(5.0), 0.0);
    let e = emb(&[&[6.0, 0.0]]);
    assert_eq!(e.max_norm_regularizer(5.0), 1.0);
    let mut prev = 0.0;
    for k in 0..50 {
        let e = emb(&[&[k as f64 * 0.2, 0.0], &[1.0, 1.0]]);
        let v = e.max_norm_regularizer(2.0);
        assert!(v >= prev);
        prev = v;
    }
}

#[test]
fn triplet_examples() {
    let pair = forest(&[&[2]]);
    let all: BTreeSet<u32> = [0, 1].into();
    assert!(sample_lca_triplets(&pair, &all, 10, 0).is_empty());
    assert!(enumerate_lca_triplets(&pair, &all).is_empty());

    // ((a, b), c)
    let f = forest(&[&[2, 1]]);
    let all: BTreeSet<u32> = [0, 1, 2].into();
    let expected = vec![Triplet { i: 0, j: 1, k: 2 }, Triplet { i: 1, j: 0, k: 2 }];
    let mut enumerated = enumerate_lca_triplets(&f, &all);
    enumerated.sort();
    assert_eq!(enumerated, expected);
    let sampled: BTreeSet<Triplet> = sample_lca_triplets(&f, &all, 64, 3).into_iter().collect();
    assert_eq!(sampled.into_iter().collect::<Vec<_>>(), expected);
    // unobserved k: nothing left
    let partial: BTreeSet<u32> = [0, 1].into();
    assert!(sample_lca_triplets(&f, &partial, 8, 0).is_empty());
}

#[test]
fn sampled_triplets_satisfy_lca_predicate() {
    let mut r = common::rng(12);
    for seed in 0..50 {
        let f = common::random_forest(&mut r);
        let observed: BTreeSet<u32> = (0..f.n_leaves() as u32).collect();
        for t in sample_lca_triplets(&f, &observed, 32, seed) {
            let (ti, li) = f.locate(t.i).unwrap();
            let (tj, lj) = f.locate(t.j).unwrap();
            let (tk, lk) = f.locate(t.k).unwrap();
            assert!(ti == tj && tj == tk);
            let tree: &HierTree = &f.trees()[ti];
            let ij = tree.lca(li, lj).unwrap();
            let ik = tree.lca(li, lk).unwrap();
            assert_eq!(ik, tree.lca(lj, lk).unwrap());
            assert_ne!(ij, ik);
            assert!(tree.leaves_under(ik).unwrap().contains(&li));
            assert!(tree.ancestor_chain(ij).unwrap().contains(&ik));
            assert_eq!(tree.parent(li).unwrap(), tree.parent(lj).unwrap());
        }
    }
}

#[test]
fn total_loss_properties() {
    let f = forest(&[&[2, 1], &[2]]);
    let e = TrainableEmbedding::gaussian(8, 3, c1(), 0.7, 4).unwrap();
    let labels = vec![0, 1, 2, 3, 4, 0, 1, 3];
    let observed: BTreeSet<u32> = labels.iter().copied().collect();
    let b = Batch::new(&f, (0..8).collect(), labels)
        .unwrap()
        .with_triplets(sample_lca_triplets(&f, &observed, 4, 1));

    let zero = LossConfig::zero_weights();
    assert_eq!(total_loss(&b, &e, &zero).unwrap().total, 0.0);

    let cfg = LossConfig {
        max_norm: 0.5,
        ..LossConfig::default()
    };
    let l = total_loss(&b, &e, &cfg).unwrap();
    let expected = cfg.hierarchy_weight
        * (cfg.leaf_weight * l.leaf
            + cfg.root_weight * l.root
            + cfg.comp_weight * l.comp
            + cfg.lca_weight * l.lca
            + cfg.norm_weight * l.norm);
    assert!((l.total - expected).abs() < 1e-12);
    for v in [l.leaf, l.root, l.comp, l.lca, l.norm] {
        assert!(v.is_finite() && v > 0.0);
    }

    // each component equals its standalone evaluation
    let p = compute_leaf_prototypes(&b, &e).unwrap();
    let q = compute_root_centroids(&b, &e).unwrap();
    assert!((l.leaf - leaf_angular_loss(&b, &e, &p, cfg.leaf_temperature).unwrap()).abs() < 1e-12);
    assert!(
        (l.root - root_angular_loss(&p, &q, &f, cfg.root_temperature, c1()).unwrap()).abs() < 1e-12
    );
    assert!((l.comp - compactness_loss(&b, &e, &p, cfg.comp_margin).unwrap()).abs() < 1e-12);
    assert!(
        (l.lca - lca_order_loss(&b.triplets, &p, cfg.lca_temperature, c1()).unwrap()).abs() < 1e-12
    );
    assert!((l.norm - e.max_norm_regularizer(cfg.max_norm)).abs() < 1e-12);
}

#[test]
fn single_leaf_at_prototype_is_zero() {
    let f = forest(&[&[1]]);
    let e = emb(&[&[0.4, 0.2], &[0.4, 0.2]]);
    let b = Batch::new(&f, vec![0, 1], vec![0, 0]).unwrap();
    let l = total_loss(&b, &e, &LossConfig::default()).unwrap();
    assert_eq!((l.leaf, l.root, l.comp), (0.0, 0.0, 0.0));
    assert!(gradient(&b, &e, &LossConfig::default())
        .unwrap()
        .iter()
        .all(|&g| g == 0.0));
}

#[test]
fn compactness_prototype_is_a_constant() {
    // three clustered rays inside the margin and one far ray: only the far
    // ray has a compactness gradient
    let f = forest(&[&[1]]);
    let e = emb(&[&[0.50, 0.0], &[0.51, 0.01], &[0.49, -0.01], &[1.5, 1.0]]);
    let b = Batch::new(&f, vec![0, 1, 2, 3], vec![0; 4]).unwrap();
    let p = compute_leaf_prototypes(&b, &e).unwrap();
    let margin = 0.5;
    for r in 0..3 {
        assert!(geodesic_distance(&e.feature(r), p.get(0).unwrap(), c1()).unwrap() < margin);
    }
    assert!(geodesic_distance(&e.feature(3), p.get(0).unwrap(), c1()).unwrap() > margin);
    let cfg = LossConfig {
        comp_weight: 1.0,
        comp_margin: margin,
        hierarchy_weight: 1.0,
        ..LossConfig::zero_weights()
    };
    let g = gradient(&b, &e, &cfg).unwrap();
    assert!(g[..6].iter().all(|&v| v == 0.0), "{g:?}");
    assert!(g[6..].iter().any(|&v| v != 0.0));
}
