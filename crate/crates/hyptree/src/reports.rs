//! CSV emitters. Rows are produced in a fixed order so identical inputs give
//! byte-identical files.

use std::fs;
use std::path::Path;

use hyptree_core::eval::RecallReport;
use hyptree_core::pca::Pca;
use hyptree_core::trainer::LossRecord;
use serde::Serialize;

use crate::bench::{BenchRecord, GapSummary, TimingSummary};
use crate::error::{CliError, Result};
use crate::pipeline::Completeness;

fn to_csv<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner()
        .map_err(|e| CliError::config(format!("CSV output: {e}")))
}

/// Header-only output still needs the column names.
fn to_csv_with_header<T: Serialize>(header: &[&str], rows: Vec<T>) -> Result<Vec<u8>> {
    if rows.is_empty() {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        return w
            .into_inner()
            .map_err(|e| CliError::config(format!("CSV output: {e}")));
    }
    to_csv(rows)
}

pub fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

#[derive(Serialize)]
struct LossRow {
    step: usize,
    total: f64,
    leaf: f64,
    root: f64,
    comp: f64,
    lca: f64,
    norm: f64,
}

pub fn loss_history(history: &[LossRecord]) -> Result<Vec<u8>> {
    let rows = history
        .iter()
        .map(|r| LossRow {
            step: r.step,
            total: r.loss.total,
            leaf: r.loss.leaf,
            root: r.loss.root,
            comp: r.loss.comp,
            lca: r.loss.lca,
            norm: r.loss.norm,
        })
        .collect();
    to_csv_with_header(
        &["step", "total", "leaf", "root", "comp", "lca", "norm"],
        rows,
    )
}

#[derive(Serialize)]
struct MetricRow<'a> {
    scene: &'a str,
    level: &'a str,
    mode: &'a str,
    value: f64,
}

/// Columns `(scene, level, mode, value)`; modes are `viewwise`, `levelwise`,
/// `threshold` (the shared level-wise threshold) and `ctr`.
pub fn completeness(scene: &str, c: &Completeness) -> Result<Vec<u8>> {
    let mut rows = Vec::new();
    for (l, level) in c.levels.iter().enumerate() {
        rows.push(MetricRow {
            scene,
            level,
            mode: "viewwise",
            value: c.viewwise[l],
        });
        rows.push(MetricRow {
            scene,
            level,
            mode: "levelwise",
            value: c.levelwise[l],
        });
        rows.push(MetricRow {
            scene,
            level,
            mode: "threshold",
            value: c.thresholds[l],
        });
        if let Some(r) = c.ctr[l] {
            rows.push(MetricRow {
                scene,
                level,
                mode: "ctr",
                value: r,
            });
        }
    }
    to_csv(rows)
}

#[derive(Serialize)]
struct RecallRow {
    budget: String,
    metric: &'static str,
    mean: f64,
    std: f64,
}

/// Columns `(budget, metric, mean, std)`. Budget rows come first in
/// ascending order, then `native` (whole pool) and `auc`.
pub fn recall(report: &RecallReport) -> Result<Vec<u8>> {
    let mut rows = Vec::new();
    let mut push = |budget: String,
                    m: &hyptree_core::eval::RecallMetrics,
                    s: Option<&hyptree_core::eval::RecallMetrics>| {
        for (metric, mean, std) in [
            ("miou", m.miou, s.map_or(0.0, |s| s.miou)),
            ("r50", m.r50, s.map_or(0.0, |s| s.r50)),
            ("r75", m.r75, s.map_or(0.0, |s| s.r75)),
        ] {
            rows.push(RecallRow {
                budget: budget.clone(),
                metric,
                mean,
                std,
            });
        }
    };
    for b in &report.budgets {
        push(b.budget.to_string(), &b.mean, Some(&b.std));
    }
    push("native".into(), &report.native, None);
    push("auc".into(), &report.auc, None);
    to_csv(rows)
}

#[derive(Serialize)]
struct CostRow<'a> {
    n: usize,
    trial: usize,
    method: &'a str,
    cost: f64,
}

/// Columns `(n, trial, method, cost)`; deterministic given the seed.
pub fn bench_costs(records: &[BenchRecord]) -> Result<Vec<u8>> {
    to_csv(records.iter().map(|r| CostRow {
        n: r.n,
        trial: r.trial,
        method: r.method.name(),
        cost: r.cost,
    }))
}

pub fn bench_gaps(gaps: &[GapSummary]) -> Result<Vec<u8>> {
    to_csv(gaps)
}

/// Wall-clock timings; not reproducible across runs.
pub fn bench_timing(timing: &[TimingSummary]) -> Result<Vec<u8>> {
    to_csv(timing)
}

#[derive(Serialize)]
struct PcaRow {
    row: usize,
    col: usize,
    pc1: Option<f64>,
    pc2: Option<f64>,
    pc3: Option<f64>,
}

/// Per-pixel projections `(row, col, pc1, pc2, pc3)`; missing components
/// of rank-deficient input are left empty.
pub fn pca_projection(p: &Pca, rows: &[Vec<f64>], width: usize) -> Result<Vec<u8>> {
    to_csv(rows.iter().enumerate().map(|(i, x)| {
        let y = p.project(x);
        PcaRow {
            row: i / width,
            col: i % width,
            pc1: y.first().copied(),
            pc2: y.get(1).copied(),
            pc3: y.get(2).copied(),
        }
    }))
}

#[derive(Serialize)]
struct VarianceRow {
    component: usize,
    variance: f64,
    fraction: f64,
}

pub fn pca_variance(p: &Pca) -> Result<Vec<u8>> {
    let rows = p
        .variances
        .iter()
        .enumerate()
        .map(|(k, &v)| VarianceRow {
            component: k + 1,
            variance: v,
            fraction: if p.total_variance > 0.0 {
                v / p.total_variance
            } else {
                0.0
            },
        })
        .collect();
    to_csv_with_header(&["component", "variance", "fraction"], rows)
}
