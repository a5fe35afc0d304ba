use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::batch::{enumerate_lca_triplets, sample_lca_triplets, Batch};
use super::config::{LossConfig, Schedule};
use super::embedding::TrainableEmbedding;
use super::loss::{compute_leaf_prototypes, loss_and_gradient, LossBreakdown};
use crate::hierarchy::HierForest;
use crate::lorentz::{distance_unchecked, klein_map, lca_surrogate_klein};
use crate::math::norm;
use crate::{Error, Result};

/// Supervision of one image: its forest and the leaf label of each ray.
#[derive(Debug, Clone)]
pub struct TrainingImage {
    pub forest: HierForest,
    pub rays: Vec<usize>,
    pub labels: Vec<u32>,
}

impl TrainingImage {
    pub fn new(forest: HierForest, rays: Vec<usize>, labels: Vec<u32>) -> Result<Self> {
        Batch::new(&forest, rays.clone(), labels.clone())?;
        Ok(Self {
            forest,
            rays,
            labels,
        })
    }

    /// Batch over every ray of the image, without triplets.
    pub fn full_batch(&self) -> Result<Batch<'_>> {
        Batch::new(&self.forest, self.rays.clone(), self.labels.clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossRecord {
    pub step: usize,
    pub loss: LossBreakdown,
}

/// Training aborted at `step`; `history` holds the steps completed before it.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainError {
    pub step: usize,
    pub error: Error,
    pub history: Vec<LossRecord>,
}

impl core::fmt::Display for TrainError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "training failed at step {}: {}", self.step, self.error)
    }
}

impl core::error::Error for TrainError {}

/// Adam with bias correction, decoupled from the loss.
struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    b1_pow: f64,
    b2_pow: f64,
}

impl Adam {
    fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            b1_pow: 1.0,
            b2_pow: 1.0,
        }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64, s: &Schedule) {
        self.b1_pow *= s.beta1;
        self.b2_pow *= s.beta2;
        let c1 = 1.0 - self.b1_pow;
        let c2 = 1.0 - self.b2_pow;
        for (((x, g), m), v) in params
            .iter_mut()
            .zip(grad)
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            *m = s.beta1 * *m + (1.0 - s.beta1) * g;
            *v = s.beta2 * *v + (1.0 - s.beta2) * g * g;
            let mhat = *m / c1;
            let vhat = *v / c2;
            *x -= lr * mhat / (libm::sqrt(vhat) + s.adam_eps);
        }
    }
}

/// Runs `schedule.steps` Adam steps. Each step picks one image, samples up to
/// `batch_size` of its rays without replacement and draws LCA triplets among
/// the observed leaves. The gradient is clipped to global norm
/// `grad_clip` (0 disables clipping), then weight decay `wd * u` is added.
pub fn train(
    emb: &mut TrainableEmbedding,
    images: &[TrainingImage],
    schedule: &Schedule,
    config: &LossConfig,
    seed: u64,
) -> core::result::Result<Vec<LossRecord>, TrainError> {
    let fail = |step, error, history| TrainError {
        step,
        error,
        history,
    };
    if let Err(e) = schedule.validate().and(config.validate()) {
        return Err(fail(0, e, Vec::new()));
    }
    if schedule.steps > 0 && images.is_empty() {
        return Err(fail(0, Error::Empty("training images"), Vec::new()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut adam = Adam::new(emb.params().len());
    let mut history = Vec::with_capacity(schedule.steps);
    for step in 0..schedule.steps {
        let img = &images[rng.random_range(0..images.len())];
        let m = schedule.batch_size.min(img.rays.len());
        let picks = sample(&mut rng, img.rays.len(), m).into_vec();
        let rays = picks.iter().map(|&i| img.rays[i]).collect();
        let labels: Vec<u32> = picks.iter().map(|&i| img.labels[i]).collect();
        let observed: BTreeSet<u32> = labels.iter().copied().collect();
        let tseed: u64 = rng.random();
        let batch = match Batch::new(&img.forest, rays, labels) {
            Ok(b) => b.with_triplets(sample_lca_triplets(
                &img.forest,
                &observed,
                schedule.triplets_per_step,
                tseed,
            )),
            Err(e) => return Err(fail(step, e, history)),
        };
        let (loss, mut grad) = match loss_and_gradient(&batch, emb, config) {
            Ok(v) => v,
            Err(e) => return Err(fail(step, e, history)),
        };
        let gn = norm(&grad);
        if schedule.grad_clip > 0.0 && gn > schedule.grad_clip {
            let k = schedule.grad_clip / gn;
            grad.iter_mut().for_each(|g| *g *= k);
        }
        if schedule.weight_decay > 0.0 {
            for (g, u) in grad.iter_mut().zip(emb.params()) {
                *g += schedule.weight_decay * u;
            }
        }
        adam.step(
            emb.params_mut(),
            &grad,
            schedule.learning_rate(step),
            schedule,
        );
        if emb.params().iter().any(|v| !v.is_finite()) {
            return Err(fail(step, Error::NonFiniteTerm("parameters"), history));
        }
        history.push(LossRecord { step, loss });
    }
    Ok(history)
}

/// Fraction of rays whose nearest leaf prototype (geodesic distance, over all
/// rays of the image) is their own leaf. Ties resolve to the lower label.
pub fn nearest_prototype_accuracy(emb: &TrainableEmbedding, image: &TrainingImage) -> Result<f64> {
    let batch = image.full_batch()?;
    let protos = compute_leaf_prototypes(&batch, emb)?;
    let c = emb.curvature();
    let mut hits = 0usize;
    for (&r, &y) in image.rays.iter().zip(&image.labels) {
        let s = emb.feature(r);
        let mut best = (f64::INFINITY, u32::MAX);
        for (&id, p) in protos.ids().iter().zip(protos.points()) {
            let d = distance_unchecked(s.as_slice(), p.as_slice(), c);
            if d < best.0 {
                best = (d, id);
            }
        }
        hits += usize::from(best.1 == y);
    }
    Ok(hits as f64 / image.rays.len() as f64)
}

/// Fraction of all valid LCA triplets over the image's observed leaves whose
/// prototypes satisfy `d_o(i, j) > max(d_o(i, k), d_o(j, k))`, with the
/// triplet count. `None` when no valid triplet exists.
pub fn lca_order_accuracy(
    emb: &TrainableEmbedding,
    image: &TrainingImage,
) -> Result<Option<(f64, usize)>> {
    let batch = image.full_batch()?;
    let protos = compute_leaf_prototypes(&batch, emb)?;
    let triplets = enumerate_lca_triplets(&image.forest, &batch.observed_leaves());
    if triplets.is_empty() {
        return Ok(None);
    }
    let c = emb.curvature();
    let k = |l: u32| klein_map(protos.get(l).expect("observed leaf has a prototype")).0;
    let mut ok = 0usize;
    for t in &triplets {
        let (ki, kj, kk) = (k(t.i), k(t.j), k(t.k));
        let dij = lca_surrogate_klein(&ki, &kj, c).0;
        let dik = lca_surrogate_klein(&ki, &kk, c).0;
        let djk = lca_surrogate_klein(&kj, &kk, c).0;
        ok += usize::from(dij > dik.max(djk));
    }
    Ok(Some((ok as f64 / triplets.len() as f64, triplets.len())))
}
