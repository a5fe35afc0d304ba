use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::candidates::CandidatePool;
use super::completeness::iou;
use crate::grid::Mask;
use crate::math::sqrt;
use crate::{Error, Result};

/// Proposal budgets of the recall curve.
pub const DEFAULT_BUDGETS: [usize; 10] = [50, 100, 150, 180, 300, 500, 750, 1000, 1500, 2000];

/// mIoU and recall at IoU 0.50 / 0.75.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RecallMetrics {
    pub miou: f64,
    pub r50: f64,
    pub r75: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BudgetMetrics {
    pub budget: usize,
    pub mean: RecallMetrics,
    /// Population standard deviation over seeds.
    pub std: RecallMetrics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecallReport {
    pub native: RecallMetrics,
    pub budgets: Vec<BudgetMetrics>,
    /// Normalized area under each budget curve.
    pub auc: RecallMetrics,
    pub seeds: usize,
}

/// Best IoU per ground-truth group over the candidates listed in `subset`.
fn metrics(best_of: &[Vec<f64>], subset: &[usize]) -> RecallMetrics {
    let n = best_of.len() as f64;
    let mut out = RecallMetrics::default();
    for row in best_of {
        let b = subset.iter().map(|&c| row[c]).fold(0.0, f64::max);
        out.miou += b;
        out.r50 += f64::from(u8::from(b >= 0.5));
        out.r75 += f64::from(u8::from(b >= 0.75));
    }
    out.miou /= n;
    out.r50 /= n;
    out.r75 /= n;
    out
}

/// Mean and population std. The mean is accumulated as offsets from the
/// first value, so identical inputs return that value exactly.
fn mean_std(xs: &[f64]) -> (f64, f64) {
    let x0 = xs[0];
    let n = xs.len() as f64;
    let mean = x0 + xs.iter().map(|x| x - x0).sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, sqrt(var))
}

/// Trapezoidal area under `(0, 0), (K_1, m_1), ...` divided by the largest
/// budget.
pub fn auc(points: &[(usize, f64)]) -> f64 {
    let Some(&(kmax, _)) = points.last() else {
        return 0.0;
    };
    if kmax == 0 {
        return 0.0;
    }
    let mut prev = (0.0, 0.0);
    let mut area = 0.0;
    for &(k, m) in points {
        let k = k as f64;
        area += (k - prev.0) * (m + prev.1) / 2.0;
        prev = (k, m);
    }
    area / kmax as f64
}

/// Group recall of a candidate pool against ground-truth groups.
///
/// Native metrics use the whole pool. For each seed the pool is shuffled once
/// and budget `K` takes its first `min(K, |pool|)` entries, so larger budgets
/// always see a superset; per-budget values are averaged over the seeds
/// `base_seed .. base_seed + seeds`.
pub fn group_recall(
    pool: &CandidatePool,
    gt: &[Mask],
    budgets: &[usize],
    seeds: usize,
    base_seed: u64,
) -> Result<RecallReport> {
    if gt.is_empty() {
        return Err(Error::Empty("ground-truth groups"));
    }
    if seeds == 0 {
        return Err(Error::InvalidConfig("at least one seed is required".into()));
    }
    let mut sorted_budgets = budgets.to_vec();
    sorted_budgets.sort_unstable();
    sorted_budgets.dedup();
    if pool.is_empty() {
        let zero = RecallMetrics::default();
        return Ok(RecallReport {
            native: zero,
            budgets: sorted_budgets
                .into_iter()
                .map(|budget| BudgetMetrics {
                    budget,
                    mean: zero,
                    std: zero,
                })
                .collect(),
            auc: zero,
            seeds,
        });
    }
    let best_of: Vec<Vec<f64>> = gt
        .iter()
        .map(|g| {
            pool.masks()
                .map(|m| iou(g, m))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let all: Vec<usize> = (0..pool.len()).collect();
    let native = metrics(&best_of, &all);

    let mut per_budget: Vec<Vec<RecallMetrics>> =
        vec![Vec::with_capacity(seeds); sorted_budgets.len()];
    for s in 0..seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(base_seed.wrapping_add(s as u64));
        let mut perm = all.clone();
        perm.shuffle(&mut rng);
        for (bi, &k) in sorted_budgets.iter().enumerate() {
            let take = k.min(perm.len());
            per_budget[bi].push(metrics(&best_of, &perm[..take]));
        }
    }
    let mut out = Vec::with_capacity(sorted_budgets.len());
    for (bi, &budget) in sorted_budgets.iter().enumerate() {
        let runs = &per_budget[bi];
        let col = |f: fn(&RecallMetrics) -> f64| mean_std(&runs.iter().map(f).collect::<Vec<_>>());
        let (m_miou, s_miou) = col(|r| r.miou);
        let (m_r50, s_r50) = col(|r| r.r50);
        let (m_r75, s_r75) = col(|r| r.r75);
        out.push(BudgetMetrics {
            budget,
            mean: RecallMetrics {
                miou: m_miou,
                r50: m_r50,
                r75: m_r75,
            },
            std: RecallMetrics {
                miou: s_miou,
                r50: s_r50,
                r75: s_r75,
            },
        });
    }
    let curve = |f: fn(&RecallMetrics) -> f64| {
        auc(&out
            .iter()
            .map(|b| (b.budget, f(&b.mean)))
            .collect::<Vec<_>>())
    };
    let auc_metrics = RecallMetrics {
        miou: curve(|r| r.miou),
        r50: curve(|r| r.r50),
        r75: curve(|r| r.r75),
    };
    Ok(RecallReport {
        native,
        budgets: out,
        auc: auc_metrics,
        seeds,
    })
}
