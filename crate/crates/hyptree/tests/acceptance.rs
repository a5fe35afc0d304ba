//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit status on
//! any failure. Every tolerance, size and seed is a constant below.

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::Instant;

use hyptree::bench::{self, BenchMethod, BenchResult};
use hyptree::config::{BenchConfig, RecallConfig, TrainConfig};
use hyptree::pipeline::{self, Completeness};
use hyptree::reports;
use hyptree_core::eval::{
    group_recall, tangent_affinity_score, threshold_grid, threshold_mask, CandidatePool,
    DEFAULT_BUDGETS,
};
use hyptree_core::hierarchy::{
    dasgupta_cost, exact_sparsest_cut_tree, recursive_spectral_tree, AffinityGraph, HierForest,
    HierTree, EXACT_MAX_N,
};
use hyptree_core::lorentz::{
    einstein_midpoint, klein_inverse, klein_map, lorentz_inner, project_to_hyperboloid,
};
use hyptree_core::scene::{gen_scene, SyntheticScene, SyntheticSceneSpec};
use hyptree_core::trainer::{
    compactness_loss, compute_leaf_prototypes, gradient, lca_order_accuracy,
    nearest_prototype_accuracy, sample_lca_triplets, total_loss, Batch, LossConfig,
    TrainableEmbedding,
};
use hyptree_core::{Curvature, Mask, TangentVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

// 1. manifold
const C1_PROJECTIONS: usize = 10_000;
const C1_CURVATURES: [f64; 3] = [0.25, 1.0, 4.0];
const C1_TOL: f64 = 1e-9;
const C1_BUDGET_S: f64 = 5.0;

// 2. gradients
const C2_CONFIGS: u64 = 100;
const C2_STEP: f64 = 1e-4;
const C2_REL_TOL: f64 = 1e-4;
/// Gradient norms below this are compared absolutely.
const C2_NORM_FLOOR: f64 = 1e-8;
const C2_BUDGET_S: f64 = 30.0;

// 3. Dasgupta oracles and benchmark
const C3_SEED: u64 = 2024;
const C3_ORACLE_NS: std::ops::RangeInclusive<usize> = 4..=8;
const C3_GAP_NS: std::ops::RangeInclusive<usize> = 6..=12;
const C3_TRIALS: usize = 50;
const C3_DESCRIPTOR_DIM: usize = 16;
const C3_MAX_MEAN_GAP: f64 = 0.02;
const C3_BUDGET_S: f64 = 300.0;

// 4. end-to-end
const C4_SCENE_SEED: u64 = 1;
const C4_TRAIN_SEED: u64 = 2;
const C4_STEPS: usize = 2000;
const C4_DIM: usize = 16;
const C4_SIGMA: f64 = 0.05;
const C4_LCA_WEIGHT: f64 = 1.0;
const C4_MIN_TRIPLET_ACC: f64 = 0.95;
const C4_MIN_COMPLETENESS: f64 = 0.95;
const C4_BUDGET_S: f64 = 180.0;

// 5. protocol invariants
const C5_EXTRA_SCENES: [u64; 2] = [2, 3];
const C5_EXTRA_STEPS: usize = 300;
const C5_RECALL_SEEDS: usize = 10;
const C5_CTR_SLACK: f64 = 1e-9;
const C5_BUDGET_S: f64 = 60.0;

// 6. recall expectation
const C6_SEEDS: usize = 100;
const C6_BASE_SEED: u64 = 77;
const C6_IOUS: [f64; 2] = [0.6, 0.2];
const C6_SIGMAS: f64 = 3.0;
const C6_BUDGET_S: f64 = 5.0;

struct Line {
    id: usize,
    name: &'static str,
    pass: bool,
    secs: f64,
    detail: String,
}

fn report(id: usize, name: &'static str, budget: f64, f: impl FnOnce() -> (bool, String)) -> Line {
    let t = Instant::now();
    let (ok, detail) = f();
    let secs = t.elapsed().as_secs_f64();
    let pass = ok && secs < budget;
    let detail = if secs < budget {
        detail
    } else {
        format!("{detail}; over the {budget:.0} s budget")
    };
    let line = Line {
        id,
        name,
        pass,
        secs,
        detail,
    };
    println!(
        "criterion {} [{}] {} ({:.2} s): {}",
        line.id,
        line.name,
        if line.pass { "PASS" } else { "FAIL" },
        line.secs,
        line.detail
    );
    line
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn normal(r: &mut ChaCha8Rng) -> f64 {
    r.sample(StandardNormal)
}

// ---------------------------------------------------------------- 1

fn criterion_manifold() -> (bool, String) {
    let mut r = rng(1);
    let (mut worst_res, mut worst_klein, mut worst_mid) = (0.0f64, 0.0f64, 0.0f64);
    for &cv in &C1_CURVATURES {
        let c = Curvature::new(cv).unwrap();
        for k in 0..C1_PROJECTIONS {
            let dim = 1 + k % 8;
            let scale = [0.01, 0.5, 2.0][k % 3];
            let u: Vec<f64> = (0..dim).map(|_| scale * normal(&mut r)).collect();
            let x = project_to_hyperboloid(&TangentVector::new(u).unwrap(), c).unwrap();
            let inner = lorentz_inner(x.as_slice(), x.as_slice()).unwrap();
            worst_res = worst_res.max((cv * inner + 1.0).abs());
            let back = klein_inverse(&klein_map(&x), c).unwrap();
            let err = x
                .as_slice()
                .iter()
                .zip(back.as_slice())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            worst_klein = worst_klein.max(err);
            let copies = 2 + k % 4;
            let mid = einstein_midpoint(&vec![x.clone(); copies], c).unwrap();
            let err = x
                .as_slice()
                .iter()
                .zip(mid.as_slice())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            worst_mid = worst_mid.max(err);
        }
    }
    let ok = worst_res < C1_TOL && worst_klein < C1_TOL && worst_mid < C1_TOL;
    (
        ok,
        format!(
            "{} points per curvature; max |c<x,x>+1| = {worst_res:.2e}, Klein round trip {worst_klein:.2e}, \
             midpoint of duplicates {worst_mid:.2e} (tol {C1_TOL:e})",
            C1_PROJECTIONS
        ),
    )
}

// ---------------------------------------------------------------- 2

fn grouped_tree(groups: &[usize]) -> HierTree {
    let n_leaves: usize = groups.iter().sum();
    let internal = groups.iter().filter(|&&g| g > 1).count();
    let root = n_leaves;
    let mut parents = vec![None; n_leaves + 1 + internal];
    let (mut leaf, mut next) = (0, root + 1);
    for &g in groups {
        if g == 1 {
            parents[leaf] = Some(root);
            leaf += 1;
        } else {
            parents[next] = Some(root);
            for _ in 0..g {
                parents[leaf] = Some(next);
                leaf += 1;
            }
            next += 1;
        }
    }
    HierTree::from_parents(n_leaves, parents).unwrap()
}

/// At least two roots; the first tree always admits a triplet.
fn random_forest(r: &mut ChaCha8Rng) -> HierForest {
    let mut trees = vec![grouped_tree(&[2, 1 + r.random_range(0..2usize)])];
    for _ in 0..r.random_range(1..3usize) {
        let groups: Vec<usize> = (0..r.random_range(1..3usize))
            .map(|_| r.random_range(1..3usize))
            .collect();
        trees.push(if groups.iter().sum::<usize>() < 2 {
            HierTree::single_leaf()
        } else {
            grouped_tree(&groups)
        });
    }
    HierForest::new(trees)
}

struct GradCase {
    emb: TrainableEmbedding,
    forest: HierForest,
    labels: Vec<u32>,
    seed: u64,
}

fn grad_case(seed: u64) -> GradCase {
    let mut r = rng(1000 + seed);
    let forest = random_forest(&mut r);
    let n_leaves = forest.n_leaves();
    let dim = r.random_range(2..=8usize);
    let n_rays = r.random_range(n_leaves..=16);
    let mut labels: Vec<u32> = (0..n_leaves as u32).collect();
    while labels.len() < n_rays {
        labels.push(r.random_range(0..n_leaves as u32));
    }
    let c = Curvature::new([0.5, 1.0, 2.0][r.random_range(0..3usize)]).unwrap();
    let emb = TrainableEmbedding::gaussian(n_rays, dim, c, 0.6, r.random()).unwrap();
    GradCase {
        emb,
        forest,
        labels,
        seed,
    }
}

fn term_config(term: &str) -> LossConfig {
    if term == "total" {
        return LossConfig {
            max_norm: 0.8,
            ..LossConfig::default()
        };
    }
    let mut c = LossConfig::zero_weights();
    c.hierarchy_weight = 1.0;
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

/// Objective whose derivative the analytic gradient is: compactness
/// prototypes are held at their values for `base`.
fn objective(
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

fn criterion_gradients() -> (bool, String) {
    let terms = ["leaf", "root", "comp", "lca", "norm", "total"];
    let mut worst = [0.0f64; 6];
    let mut failures = Vec::new();
    for seed in 0..C2_CONFIGS {
        let case = grad_case(seed);
        let observed: BTreeSet<u32> = case.labels.iter().copied().collect();
        let triplets = sample_lca_triplets(&case.forest, &observed, 6, case.seed);
        assert!(!triplets.is_empty() && case.forest.trees().len() >= 2);
        let b = Batch::new(
            &case.forest,
            (0..case.labels.len()).collect(),
            case.labels.clone(),
        )
        .unwrap()
        .with_triplets(triplets);
        for (ti, term) in terms.iter().enumerate() {
            let loss = term_config(term);
            let a = gradient(&b, &case.emb, &loss).unwrap();
            let fd: Vec<f64> = (0..a.len())
                .map(|i| {
                    let at = |d: f64| {
                        let mut e = case.emb.clone();
                        e.params_mut()[i] += d;
                        objective(&b, &case.emb, &e, &loss)
                    };
                    (at(C2_STEP) - at(-C2_STEP)) / (2.0 * C2_STEP)
                })
                .collect();
            let diff = a
                .iter()
                .zip(&fd)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt();
            let scale = fd
                .iter()
                .map(|y| y * y)
                .sum::<f64>()
                .sqrt()
                .max(C2_NORM_FLOOR);
            let err = diff / scale;
            worst[ti] = worst[ti].max(err);
            if !(err < C2_REL_TOL) {
                failures.push(format!("{term}@{seed}:{err:.1e}"));
            }
        }
    }
    let summary: Vec<String> = terms
        .iter()
        .zip(worst)
        .map(|(t, w)| format!("{t} {w:.1e}"))
        .collect();
    (
        failures.is_empty(),
        format!(
            "{C2_CONFIGS} configs, step {C2_STEP:e}, worst relative error [{}] (tol {C2_REL_TOL:e}){}",
            summary.join(", "),
            if failures.is_empty() { String::new() } else { format!("; failing {}", failures.join(" ")) }
        ),
    )
}

// ---------------------------------------------------------------- 3

/// For every binary tree on `n` leaves (leaf insertion on each edge), the
/// LCA leaf count of every pair `a < b` in row-major order.
fn enumerate_lca_counts(n: usize) -> Vec<Vec<u8>> {
    fn rec(
        parent: &mut Vec<Option<usize>>,
        n_leaves: usize,
        next_leaf: usize,
        out: &mut Vec<Vec<u8>>,
    ) {
        if next_leaf == n_leaves {
            out.push(pair_counts(parent, n_leaves));
            return;
        }
        // insert leaf `next_leaf` above any existing vertex
        let verts: Vec<usize> = (0..parent.len())
            .filter(|&v| v < next_leaf || v >= n_leaves)
            .collect();
        for v in verts {
            let new_internal = parent.len();
            let old = parent[v];
            parent.push(old);
            parent[v] = Some(new_internal);
            parent[next_leaf] = Some(new_internal);
            rec(parent, n_leaves, next_leaf + 1, out);
            parent[next_leaf] = None;
            parent[v] = old;
            parent.pop();
        }
    }
    fn pair_counts(parent: &[Option<usize>], n: usize) -> Vec<u8> {
        let chain = |mut v: usize| {
            let mut c = vec![v];
            while let Some(p) = parent[v] {
                c.push(p);
                v = p;
            }
            c
        };
        let chains: Vec<Vec<usize>> = (0..n).map(chain).collect();
        let mut below = vec![0u8; parent.len()];
        for c in &chains {
            for &v in c {
                below[v] += 1;
            }
        }
        let mut out = Vec::with_capacity(n * (n - 1) / 2);
        for a in 0..n {
            for b in (a + 1)..n {
                let lca = chains[a].iter().find(|v| chains[b].contains(v)).unwrap();
                out.push(below[*lca]);
            }
        }
        out
    }
    // leaves 0..n, leaf 0 starts alone; internal vertices are appended
    let mut parent: Vec<Option<usize>> = vec![None; n];
    let mut out = Vec::new();
    if n == 1 {
        return vec![Vec::new()];
    }
    // first internal node joins leaves 0 and 1
    parent.push(None);
    parent[0] = Some(n);
    parent[1] = Some(n);
    rec(&mut parent, n, 2, &mut out);
    out
}

fn brute_force_cost(tree: &HierTree, w: &AffinityGraph) -> f64 {
    let n = w.n();
    let mut cost = 0.0;
    for a in 0..n {
        let ca = tree.ancestor_chain(a).unwrap();
        for b in (a + 1)..n {
            let cb = tree.ancestor_chain(b).unwrap();
            let lca = *ca.iter().find(|v| cb.contains(v)).unwrap();
            let wab = w.get(a, b);
            if wab != 0.0 {
                cost += wab * tree.leaves_under(lca).unwrap().len() as f64;
            }
        }
    }
    cost
}

fn costs_from_counts(counts: &[u8], w: &AffinityGraph) -> f64 {
    let n = w.n();
    let mut cost = 0.0;
    let mut k = 0;
    for a in 0..n {
        for b in (a + 1)..n {
            let wab = w.get(a, b);
            if wab != 0.0 {
                cost += wab * f64::from(counts[k]);
            }
            k += 1;
        }
    }
    cost
}

fn bench_config() -> BenchConfig {
    BenchConfig {
        n_min: *C3_GAP_NS.start(),
        n_max: *C3_GAP_NS.end(),
        trials: C3_TRIALS,
        descriptor_dim: C3_DESCRIPTOR_DIM,
        seed: C3_SEED,
    }
}

fn criterion_dasgupta(csv: &mut Vec<(String, Vec<u8>)>) -> (bool, String) {
    let mut oracle_bad = Vec::new();
    let mut checked = 0usize;
    for n in C3_ORACLE_NS {
        let trees = enumerate_lca_counts(n);
        let expected_trees: usize = (1..n).map(|k| 2 * k - 1).product();
        if trees.len() != expected_trees {
            oracle_bad.push(format!("n={n}: {} trees enumerated", trees.len()));
        }
        for trial in 0..C3_TRIALS {
            let w = bench::random_graph(C3_SEED ^ 0xA5A5, n, trial, C3_DESCRIPTOR_DIM).unwrap();
            let spectral = recursive_spectral_tree(&w).unwrap();
            let exact = exact_sparsest_cut_tree(&w, EXACT_MAX_N).unwrap();
            let opt = trees
                .iter()
                .map(|t| costs_from_counts(t, &w))
                .fold(f64::INFINITY, f64::min);
            for (name, t) in [("spectral", &spectral), ("exact", &exact)] {
                let c = dasgupta_cost(t, &w).unwrap();
                if c != brute_force_cost(t, &w) {
                    oracle_bad.push(format!(
                        "n={n} trial={trial} {name}: cost differs from brute force"
                    ));
                }
                if !(c >= opt) {
                    oracle_bad.push(format!(
                        "n={n} trial={trial} {name}: {c} below optimum {opt}"
                    ));
                }
            }
            checked += 1;
        }
    }
    let r: BenchResult = bench::run(&bench_config()).unwrap();
    csv.push((
        "bench_costs.csv".into(),
        reports::bench_costs(&r.records).unwrap(),
    ));
    csv.push((
        "bench_gaps.csv".into(),
        reports::bench_gaps(&r.gaps).unwrap(),
    ));
    let gap_bad: Vec<String> = r
        .gaps
        .iter()
        .filter(|g| !(g.mean_gap.abs() <= C3_MAX_MEAN_GAP))
        .map(|g| format!("n={} mean gap {:.4}", g.n, g.mean_gap))
        .collect();
    // the optimum bounds both builders on the benchmark graphs as well
    let mut below_opt = 0;
    for chunk in r.records.chunks(3) {
        let opt = chunk
            .iter()
            .find(|x| x.method == BenchMethod::Optimal)
            .map(|x| x.cost);
        if let Some(opt) = opt {
            below_opt += chunk
                .iter()
                .filter(|x| x.method != BenchMethod::Optimal && x.cost < opt * (1.0 - 1e-12))
                .count();
        }
    }
    let ratio = |n: usize| {
        let t = |m: &str| {
            r.timing
                .iter()
                .find(|x| x.n == n && x.method == m)
                .unwrap()
                .mean_seconds
        };
        t("exact") / t("spectral")
    };
    let (lo, hi) = (ratio(*C3_GAP_NS.start()), ratio(*C3_GAP_NS.end()));
    let gaps: Vec<String> = r
        .gaps
        .iter()
        .map(|g| format!("{}:{:+.4}", g.n, g.mean_gap))
        .collect();
    let ok = oracle_bad.is_empty() && gap_bad.is_empty() && below_opt == 0 && hi > lo;
    let mut detail = format!(
        "{checked} oracle graphs (n 4..8, brute-force cost exact, builders >= enumerated optimum); \
         mean gaps [{}] (|gap| <= {C3_MAX_MEAN_GAP}); exact/spectral time ratio n=6 {lo:.1}, n=12 {hi:.1}",
        gaps.join(" ")
    );
    for msg in oracle_bad.iter().chain(&gap_bad).take(5) {
        detail.push_str("; ");
        detail.push_str(msg);
    }
    if below_opt > 0 {
        detail.push_str(&format!(
            "; {below_opt} benchmark trees below the DP optimum"
        ));
    }
    (ok, detail)
}

// ---------------------------------------------------------------- 4

fn scene_spec(seed: u64) -> SyntheticSceneSpec {
    SyntheticSceneSpec {
        branching: vec![4, 2, 2],
        noise_sigma: C4_SIGMA,
        seed,
        ..SyntheticSceneSpec::default()
    }
}

fn train_config(seed: u64, steps: usize) -> TrainConfig {
    let mut cfg = TrainConfig {
        dim: C4_DIM,
        seed,
        ..TrainConfig::default()
    };
    cfg.loss.lca_weight = C4_LCA_WEIGHT;
    cfg.schedule.steps = steps;
    cfg.schedule.warmup_steps = steps / 2;
    cfg
}

struct Trained {
    scene: SyntheticScene,
    emb: TrainableEmbedding,
    completeness: Completeness,
}

fn train_and_measure(
    scene_seed: u64,
    train_seed: u64,
    steps: usize,
    csv: &mut Vec<(String, Vec<u8>)>,
) -> (Trained, Vec<f64>, Vec<Option<f64>>) {
    let scene = gen_scene(&scene_spec(scene_seed)).unwrap();
    let cfg = train_config(train_seed, steps);
    let (emb, history) = pipeline::train_scene(&scene, &cfg).unwrap();
    let emb = pipeline::checkpoint_precision(&emb).unwrap();
    csv.push((
        format!("loss_scene{scene_seed}.csv"),
        reports::loss_history(&history).unwrap(),
    ));
    let forests = scene.view_forests(&cfg.forest_config()).unwrap();
    let images = scene.training_images(&forests).unwrap();
    let acc: Vec<f64> = images
        .iter()
        .map(|i| nearest_prototype_accuracy(&emb, i).unwrap())
        .collect();
    let lca: Vec<Option<f64>> = images
        .iter()
        .map(|i| lca_order_accuracy(&emb, i).unwrap().map(|(a, _)| a))
        .collect();
    let completeness = pipeline::completeness(&scene, &emb).unwrap();
    csv.push((
        format!("completeness_scene{scene_seed}.csv"),
        reports::completeness(&format!("scene{scene_seed}"), &completeness).unwrap(),
    ));
    (
        Trained {
            scene,
            emb,
            completeness,
        },
        acc,
        lca,
    )
}

fn criterion_end_to_end(csv: &mut Vec<(String, Vec<u8>)>) -> ((bool, String), Trained) {
    let (t, acc, lca) = train_and_measure(C4_SCENE_SEED, C4_TRAIN_SEED, C4_STEPS, csv);
    let acc_ok = acc.iter().all(|&a| a == 1.0);
    let lca_ok = lca
        .iter()
        .all(|a| a.is_some_and(|a| a >= C4_MIN_TRIPLET_ACC));
    let comp_ok = t
        .completeness
        .viewwise
        .iter()
        .all(|&v| v >= C4_MIN_COMPLETENESS);
    let detail = format!(
        "16 leaves, D={C4_DIM}, {C4_STEPS} steps, lca weight {C4_LCA_WEIGHT}; prototype accuracy {:?}; \
         triplet order {:?} (>= {C4_MIN_TRIPLET_ACC}); view-wise completeness {} (>= {C4_MIN_COMPLETENESS})",
        acc,
        lca.iter().map(|a| a.map(|v| (v * 1e4).round() / 1e4)).collect::<Vec<_>>(),
        t.completeness
            .levels
            .iter()
            .zip(&t.completeness.viewwise)
            .map(|(l, v)| format!("{l} {v:.4}"))
            .collect::<Vec<_>>()
            .join(", ")
    );
    ((acc_ok && lca_ok && comp_ok, detail), t)
}

// ---------------------------------------------------------------- 5

fn check_protocols(
    t: &Trained,
    label: &str,
    csv: &mut Vec<(String, Vec<u8>)>,
    bad: &mut Vec<String>,
) {
    let c = &t.completeness;
    for l in 0..c.levels.len() {
        if !(c.viewwise[l] >= c.levelwise[l]) {
            bad.push(format!(
                "{label} {}: view-wise below level-wise",
                c.levels[l]
            ));
        }
        if let Some(r) = c.ctr[l] {
            if !(r <= 1.0 + C5_CTR_SLACK) {
                bad.push(format!("{label} {}: CTR {r}", c.levels[l]));
            }
        }
    }
    let grid = threshold_grid();
    let eval = t.scene.eval_scene(&t.emb).unwrap();
    for (v, view) in eval.views.iter().enumerate() {
        let score = tangent_affinity_score(&view.features, view.query, t.emb.curvature()).unwrap();
        let mut prev: Option<Mask> = None;
        for &th in &grid {
            let m = threshold_mask(&score, th);
            if let Some(p) = &prev {
                if !m.is_subset_of(p) {
                    bad.push(format!("{label} view {v}: masks not nested at {th}"));
                    break;
                }
            }
            prev = Some(m);
        }
    }
    for v in 0..t.scene.views.len() {
        let probe = RecallConfig {
            seeds: 1,
            budgets: vec![1],
            ..RecallConfig::default()
        };
        let (pool, _) = pipeline::recall(&t.scene, &t.emb, v, &probe).unwrap();
        let mut budgets = DEFAULT_BUDGETS.to_vec();
        budgets.push(pool.max(1));
        let cfg = RecallConfig {
            seeds: C5_RECALL_SEEDS,
            budgets,
            seed: 5,
            ..RecallConfig::default()
        };
        let (_, rep) = pipeline::recall(&t.scene, &t.emb, v, &cfg).unwrap();
        csv.push((
            format!("recall_{label}_view{v}.csv"),
            reports::recall(&rep).unwrap(),
        ));
        for pair in rep.budgets.windows(2) {
            let (a, b) = (&pair[0].mean, &pair[1].mean);
            if b.miou < a.miou || b.r50 < a.r50 || b.r75 < a.r75 {
                bad.push(format!(
                    "{label} view {v}: recall drops from K={} to K={}",
                    pair[0].budget, pair[1].budget
                ));
            }
        }
        for b in &rep.budgets {
            if b.mean.r75 > b.mean.r50 {
                bad.push(format!(
                    "{label} view {v}: R@0.75 > R@0.50 at K={}",
                    b.budget
                ));
            }
            if b.budget >= pool && b.mean != rep.native {
                bad.push(format!(
                    "{label} view {v}: K={} >= |pool|={pool} differs from native",
                    b.budget
                ));
            }
        }
        if rep.native.r75 > rep.native.r50 {
            bad.push(format!("{label} view {v}: native R@0.75 > R@0.50"));
        }
    }
}

fn criterion_protocols(main: &Trained, csv: &mut Vec<(String, Vec<u8>)>) -> (bool, String) {
    let mut bad = Vec::new();
    check_protocols(main, &format!("scene{C4_SCENE_SEED}"), csv, &mut bad);
    // the same scene before training
    let cfg = train_config(C4_TRAIN_SEED, 0);
    let init = TrainableEmbedding::gaussian(
        main.emb.rays(),
        C4_DIM,
        main.emb.curvature(),
        cfg.schedule.init_std,
        C4_TRAIN_SEED,
    )
    .unwrap();
    let untrained = Trained {
        completeness: pipeline::completeness(&main.scene, &init).unwrap(),
        scene: main.scene.clone(),
        emb: init,
    };
    check_protocols(&untrained, "untrained", csv, &mut bad);
    let mut scenes = 2;
    for &s in &C5_EXTRA_SCENES {
        let (t, _, _) = train_and_measure(s, s + 100, C5_EXTRA_STEPS, csv);
        check_protocols(&t, &format!("scene{s}"), csv, &mut bad);
        scenes += 1;
    }
    let mut detail = format!(
        "{scenes} scenes: view-wise >= level-wise, CTR <= 1+{C5_CTR_SLACK:e}, 1000-threshold nesting, \
         recall monotone in K, R@0.75 <= R@0.50, K >= |pool| equals native"
    );
    for b in bad.iter().take(5) {
        detail.push_str("; ");
        detail.push_str(b);
    }
    (bad.is_empty(), detail)
}

// ---------------------------------------------------------------- 6

fn criterion_recall_expectation(csv: &mut Vec<(String, Vec<u8>)>) -> (bool, String) {
    // ground truth: 5 pixels; candidates: 3 of them (IoU 0.6) and 1 (IoU 0.2)
    let gt = Mask::from_indices(1, 10, &[0, 1, 2, 3, 4]);
    let pool = CandidatePool::from_masks(vec![
        Mask::from_indices(1, 10, &[0, 1, 2]),
        Mask::from_indices(1, 10, &[0]),
    ]);
    let ious: Vec<f64> = pool
        .masks()
        .map(|m| hyptree_core::eval::iou(&gt, m).unwrap())
        .collect();
    let rep = group_recall(&pool, &[gt], &[1], C6_SEEDS, C6_BASE_SEED).unwrap();
    csv.push((
        "recall_constructed.csv".into(),
        reports::recall(&rep).unwrap(),
    ));
    let expect = (C6_IOUS[0] + C6_IOUS[1]) / 2.0;
    // one fair draw between the two values per seed
    let se = (C6_IOUS[0] - C6_IOUS[1]).abs() * 0.5 / (C6_SEEDS as f64).sqrt();
    let mean = rep.budgets[0].mean.miou;
    let ok = ious == C6_IOUS && (mean - expect).abs() <= C6_SIGMAS * se;
    (
        ok,
        format!(
            "IoUs {ious:?}, K=1, {C6_SEEDS} seeds: mean mIoU {mean:.4} vs {expect} (3 SE = {:.4})",
            C6_SIGMAS * se
        ),
    )
}

// ---------------------------------------------------------------- 7

fn run_deterministic_block(csv: &mut Vec<(String, Vec<u8>)>) -> Vec<Line> {
    let mut lines = Vec::new();
    lines.push(report(3, "dasgupta", C3_BUDGET_S, || {
        criterion_dasgupta(csv)
    }));
    let mut trained = None;
    lines.push(report(4, "end-to-end", C4_BUDGET_S, || {
        let (r, t) = criterion_end_to_end(csv);
        trained = Some(t);
        r
    }));
    let t = trained.expect("criterion 4 ran");
    lines.push(report(5, "protocols", C5_BUDGET_S, || {
        criterion_protocols(&t, csv)
    }));
    lines.push(report(6, "recall-expectation", C6_BUDGET_S, || {
        criterion_recall_expectation(csv)
    }));
    lines
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().collect();
    // `cargo test -- --list` and filters from other targets must not rerun everything
    if args.iter().any(|a| a == "--list") {
        println!("acceptance: test");
        return ExitCode::SUCCESS;
    }
    let mut lines = Vec::new();
    lines.push(report(1, "manifold", C1_BUDGET_S, criterion_manifold));
    lines.push(report(2, "gradients", C2_BUDGET_S, criterion_gradients));
    let mut first = Vec::new();
    lines.extend(run_deterministic_block(&mut first));
    println!("-- rerunning criteria 3-6 with identical seeds");
    let mut second = Vec::new();
    let rerun = run_deterministic_block(&mut second);
    lines.push(report(7, "determinism", f64::INFINITY, || {
        let names: Vec<&str> = first.iter().map(|(n, _)| n.as_str()).collect();
        let same_names = names == second.iter().map(|(n, _)| n.as_str()).collect::<Vec<_>>();
        let differing: Vec<&str> = first
            .iter()
            .zip(&second)
            .filter(|(a, b)| a.1 != b.1)
            .map(|(a, _)| a.0.as_str())
            .collect();
        let rerun_ok = rerun
            .iter()
            .zip(&lines[2..6])
            .all(|(a, b)| a.pass == b.pass);
        (
            same_names && differing.is_empty() && rerun_ok,
            format!(
                "{} CSV files compared byte for byte, {} differ{}",
                first.len(),
                differing.len(),
                if differing.is_empty() {
                    String::new()
                } else {
                    format!(": {}", differing.join(", "))
                }
            ),
        )
    }));
    let failed: Vec<usize> = lines.iter().filter(|l| !l.pass).map(|l| l.id).collect();
    if failed.is_empty() {
        println!("acceptance: all {} criteria passed", lines.len());
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}");
        ExitCode::FAILURE
    }
}
