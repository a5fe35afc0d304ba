//! Analytic gradients against central finite differences.

mod common;

use std::collections::BTreeSet;

use hyptree_core::trainer::{
    compactness_loss, compute_leaf_prototypes, gradient, sample_lca_triplets, total_loss, Batch,
    LossConfig, RootCentroidMode, TrainableEmbedding,
};
use hyptree_core::Curvature;
use rand::Rng;

const STEP: f64 = 1e-5;
const REL_TOL: f64 = 1e-4;
/// Denominator floor for coordinates whose true derivative is ~0.
const FLOOR: f64 = 1e-6;

struct Config {
    emb: TrainableEmbedding,
    forest: hyptree_core::hierarchy::HierForest,
    rays: Vec<usize>,
    labels: Vec<u32>,
    seed: u64,
}

fn random_config(seed: u64) -> Config {
    let mut r = common::rng(seed);
    let forest = common::random_forest(&mut r);
    let n_leaves = forest.n_leaves();
    let dim = r.random_range(2..=8usize);
    let n_rays = r.random_range(n_leaves..=16.max(n_leaves));
    // every leaf observed at least once
    let mut labels: Vec<u32> = (0..n_leaves as u32).collect();
    while labels.len() < n_rays {
        labels.push(r.random_range(0..n_leaves as u32));
    }
    let c = Curvature::new([0.5, 1.0, 2.0][r.random_range(0..3usize)]).unwrap();
    let emb = TrainableEmbedding::gaussian(n_rays, dim, c, 0.6, r.random()).unwrap();
    Config {
        emb,
        forest,
        rays: (0..n_rays).collect(),
        labels,
        seed,
    }
}

fn batch(cfg: &Config) -> Batch<'_> {
    let observed: BTreeSet<u32> = cfg.labels.iter().copied().collect();
    let triplets = sample_lca_triplets(&cfg.forest, &observed, 6, cfg.seed);
    assert!(!triplets.is_empty());
    Batch::new(&cfg.forest, cfg.rays.clone(), cfg.labels.clone())
        .unwrap()
        .with_triplets(triplets)
}

fn only(term: &str) -> LossConfig {
    let mut c = LossConfig::zero_weights();
    c.hierarchy_weight = 1.0;
    // push some rays past the cap so the norm term is active
    c.max_norm = 0.8;
    match term {
        "leaf" => c.leaf_weight = 1.0,
        "root" => c.root_weight = 1.0,
        "comp" => c.comp_weight = 1.0,
        "lca" => c.lca_weight = 1.0,
        "norm" => c.norm_weight = 1.0,
        _ => unreachable!(),
    }
    c
}

/// The objective with compactness prototypes frozen at their values for
/// `base`: the function whose derivative the analytic gradient is.
fn frozen_objective(
    b: &Batch<'_>,
    base: &TrainableEmbedding,
    e: &TrainableEmbedding,
    loss: &LossConfig,
) -> f64 {
    let total = total_loss(b, e, loss).unwrap().total;
    let w = loss.hierarchy_weight * loss.comp_weight;
    if w == 0.0 {
        return total;
    }
    let live = compute_leaf_prototypes(b, e).unwrap();
    let frozen = compute_leaf_prototypes(b, base).unwrap();
    total - w * compactness_loss(b, e, &live, loss.comp_margin).unwrap()
        + w * compactness_loss(b, e, &frozen, loss.comp_margin).unwrap()
}

/// Fourth-order central difference.
fn five_point(f: impl Fn(f64) -> f64, h: f64) -> f64 {
    (f(-2.0 * h) - 8.0 * f(-h) + 8.0 * f(h) - f(2.0 * h)) / (12.0 * h)
}

/// Largest per-coordinate relative error.
fn max_rel_error(cfg: &Config, loss: &LossConfig) -> f64 {
    let b = batch(cfg);
    let analytic = gradient(&b, &cfg.emb, loss).unwrap();
    let mut worst: f64 = 0.0;
    for i in 0..analytic.len() {
        let eval = |delta: f64| {
            let mut e = cfg.emb.clone();
            e.params_mut()[i] += delta;
            frozen_objective(&b, &cfg.emb, &e, loss)
        };
        let fd = five_point(eval, STEP);
        let a = analytic[i];
        let err = (a - fd).abs() / a.abs().max(fd.abs()).max(FLOOR);
        worst = worst.max(err);
    }
    worst
}

fn check_all(term: &str, make: impl Fn() -> LossConfig) {
    let mut failures = Vec::new();
    for seed in 0..100 {
        let cfg = random_config(seed);
        let err = max_rel_error(&cfg, &make());
        if !(err < REL_TOL) {
            failures.push((seed, err));
        }
    }
    assert!(failures.is_empty(), "{term}: {failures:?}");
}

#[test]
fn leaf_term_gradient() {
    check_all("leaf", || only("leaf"));
}

#[test]
fn root_term_gradient() {
    check_all("root", || only("root"));
}

#[test]
fn root_term_gradient_prototype_centroids() {
    check_all("root/prototypes", || LossConfig {
        root_centroid: RootCentroidMode::LeafPrototypes,
        ..only("root")
    });
}

#[test]
fn comp_term_gradient() {
    check_all("comp", || only("comp"));
}

#[test]
fn lca_term_gradient() {
    check_all("lca", || only("lca"));
}

#[test]
fn norm_term_gradient() {
    check_all("norm", || only("norm"));
}

#[test]
fn total_loss_gradient() {
    check_all("total", || LossConfig {
        max_norm: 0.8,
        ..LossConfig::default()
    });
}
