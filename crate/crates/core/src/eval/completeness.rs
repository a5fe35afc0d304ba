use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::features::{tangent_affinity_score, FeatureGrid, ScoreMap};
use crate::grid::{Grid, Mask};
use crate::lorentz::Curvature;
use crate::{Error, Result};

/// Number of thresholds in the completeness sweep.
pub const N_THRESHOLDS: usize = 1000;
/// Largest threshold of the sweep.
pub const THRESHOLD_MAX: f64 = 0.99;

/// `N_THRESHOLDS` values linearly spaced over `[0, THRESHOLD_MAX]`, both
/// endpoints exact.
pub fn threshold_grid() -> Vec<f64> {
    let last = N_THRESHOLDS - 1;
    (0..N_THRESHOLDS)
        .map(|i| {
            if i == last {
                THRESHOLD_MAX
            } else {
                THRESHOLD_MAX * i as f64 / last as f64
            }
        })
        .collect()
}

/// Pixels with `score >= t`.
pub fn threshold_mask(score: &ScoreMap, t: f64) -> Mask {
    score.map(|&s| s >= t)
}

/// `|a & b| / |a | b|`; two empty masks give 0.
pub fn iou(a: &Mask, b: &Mask) -> Result<f64> {
    a.same_shape(b)?;
    let inter = a.intersection_count(b);
    let union = a.union_count(b);
    if union == 0 {
        log::warn!("IoU of two empty masks taken as 0");
        return Ok(0.0);
    }
    Ok(inter as f64 / union as f64)
}

/// One view: Lorentz features, the query pixel and one ground-truth mask per
/// scene level.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalView {
    pub features: FeatureGrid,
    pub query: (usize, usize),
    pub level_masks: Vec<Mask>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalScene {
    pub levels: Vec<String>,
    pub views: Vec<EvalView>,
}

impl EvalScene {
    pub fn new(levels: Vec<String>, views: Vec<EvalView>) -> Result<Self> {
        if views.is_empty() {
            return Err(Error::Empty("scene views"));
        }
        if levels.is_empty() {
            return Err(Error::Empty("scene levels"));
        }
        for v in &views {
            let (h, w) = (v.features.height(), v.features.width());
            if v.query.0 >= h || v.query.1 >= w {
                return Err(Error::InvalidConfig("query pixel outside the grid".into()));
            }
            if v.level_masks.len() != levels.len() {
                return Err(Error::DimensionMismatch {
                    expected: levels.len(),
                    got: v.level_masks.len(),
                });
            }
            for m in &v.level_masks {
                if m.height() != h || m.width() != w {
                    return Err(Error::ShapeMismatch(h, w, m.height(), m.width()));
                }
                if m.get(v.query.0, v.query.1) != Some(&true) {
                    return Err(Error::InvalidConfig(
                        "ground-truth level mask must contain the query".into(),
                    ));
                }
            }
        }
        Ok(Self { levels, views })
    }
}

/// IoU of `M(t)` against `gt` for every `t` of `thresholds` (ascending),
/// computed from one descending sort of the scores.
fn iou_curve(score: &ScoreMap, gt: &Mask, thresholds: &[f64]) -> Vec<f64> {
    let mut order: Vec<(f64, bool)> = score
        .as_slice()
        .iter()
        .copied()
        .zip(gt.as_slice().iter().copied())
        .collect();
    order.sort_by(|a, b| b.0.total_cmp(&a.0));
    let gt_area = gt.area();
    let mut out = vec![0.0; thresholds.len()];
    let mut taken = 0usize;
    let mut inter = 0usize;
    let mut warned = false;
    for (ti, &t) in thresholds.iter().enumerate().rev() {
        while taken < order.len() && order[taken].0 >= t {
            inter += usize::from(order[taken].1);
            taken += 1;
        }
        let union = taken + gt_area - inter;
        out[ti] = if union == 0 {
            if !warned {
                log::warn!("IoU of two empty masks taken as 0");
                warned = true;
            }
            0.0
        } else {
            inter as f64 / union as f64
        };
    }
    out
}

/// `curves[level][view][threshold]`.
fn curves(scene: &EvalScene, c: Curvature, thresholds: &[f64]) -> Result<Vec<Vec<Vec<f64>>>> {
    let maps = scene
        .views
        .iter()
        .map(|v| tangent_affinity_score(&v.features, v.query, c))
        .collect::<Result<Vec<Grid<f64>>>>()?;
    Ok((0..scene.levels.len())
        .map(|l| {
            scene
                .views
                .iter()
                .zip(&maps)
                .map(|(v, m)| iou_curve(m, &v.level_masks[l], thresholds))
                .collect()
        })
        .collect())
}

/// Per level: mean over views of the best IoU over the threshold grid.
pub fn completeness_viewwise(scene: &EvalScene, c: Curvature) -> Result<Vec<f64>> {
    let grid = threshold_grid();
    let n = scene.views.len() as f64;
    Ok(curves(scene, c, &grid)?
        .iter()
        .map(|views| {
            let s: f64 = views
                .iter()
                .map(|curve| curve.iter().copied().fold(0.0, f64::max))
                .sum();
            s / n
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelwiseReport {
    /// Mean IoU over views at the shared threshold, per level.
    pub scores: Vec<f64>,
    /// Chosen threshold per level.
    pub thresholds: Vec<f64>,
}

/// Per level: one threshold maximizing the IoU summed over views; ties go to
/// the larger threshold.
pub fn completeness_levelwise(scene: &EvalScene, c: Curvature) -> Result<LevelwiseReport> {
    let grid = threshold_grid();
    let n = scene.views.len() as f64;
    let mut scores = Vec::new();
    let mut thresholds = Vec::new();
    for views in curves(scene, c, &grid)? {
        let mut best = (f64::NEG_INFINITY, 0);
        for ti in 0..grid.len() {
            let s: f64 = views.iter().map(|curve| curve[ti]).sum();
            if s >= best.0 {
                best = (s, ti);
            }
        }
        scores.push(best.0 / n);
        thresholds.push(grid[best.1]);
    }
    Ok(LevelwiseReport { scores, thresholds })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CtrReport {
    /// Mean ratio across scenes per level; `None` when no scene defines it.
    pub per_level: Vec<Option<f64>>,
    /// Mean of the defined per-level values.
    pub mean: Option<f64>,
}

/// Cross-view threshold retention: level-wise over view-wise completeness,
/// per scene and level, averaged across scenes. Ratios with a zero view-wise
/// score are skipped.
pub fn ctr(viewwise: &[Vec<f64>], levelwise: &[Vec<f64>]) -> Result<CtrReport> {
    if viewwise.is_empty() {
        return Err(Error::Empty("scene set"));
    }
    if viewwise.len() != levelwise.len() {
        return Err(Error::DimensionMismatch {
            expected: viewwise.len(),
            got: levelwise.len(),
        });
    }
    let levels = viewwise[0].len();
    let mut sums = vec![(0.0, 0usize); levels];
    for (v, l) in viewwise.iter().zip(levelwise) {
        if v.len() != levels || l.len() != levels {
            return Err(Error::DimensionMismatch {
                expected: levels,
                got: v.len().min(l.len()),
            });
        }
        for (k, (&vv, &ll)) in v.iter().zip(l).enumerate() {
            if vv == 0.0 {
                log::warn!("level {k}: view-wise completeness is 0, ratio skipped");
                continue;
            }
            sums[k].0 += ll / vv;
            sums[k].1 += 1;
        }
    }
    let per_level: Vec<Option<f64>> = sums
        .iter()
        .map(|&(s, n)| (n > 0).then(|| s / n as f64))
        .collect();
    let defined: Vec<f64> = per_level.iter().flatten().copied().collect();
    let mean = (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64);
    Ok(CtrReport { per_level, mean })
}
