//! Spectral versus exact sparsest-cut tree construction on random affinity
//! graphs.

use std::time::Instant;

use hyptree_core::hierarchy::{
    build_affinity, dasgupta_cost, exact_sparsest_cut_tree, optimal_dasgupta_cost,
    recursive_spectral_tree, AffinityGraph, RegionDescriptor, EXACT_MAX_N,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::config::BenchConfig;
use crate::error::{CliError, Result};

/// Largest `n` for which the enumerated optimum is also reported.
pub const OPTIMAL_MAX_N: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum BenchMethod {
    Spectral,
    Exact,
    Optimal,
}

impl BenchMethod {
    pub fn name(self) -> &'static str {
        match self {
            BenchMethod::Spectral => "spectral",
            BenchMethod::Exact => "exact",
            BenchMethod::Optimal => "optimal",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub n: usize,
    pub trial: usize,
    pub method: BenchMethod,
    pub cost: f64,
    pub seconds: f64,
}

/// Signed relative gap `cost_spectral / cost_exact - 1` per `n`; equal
/// costs give 0.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapSummary {
    pub n: usize,
    pub mean_gap: f64,
    pub median_gap: f64,
    pub mean_abs_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimingSummary {
    pub n: usize,
    pub method: &'static str,
    pub mean_seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchResult {
    pub records: Vec<BenchRecord>,
    pub gaps: Vec<GapSummary>,
    pub timing: Vec<TimingSummary>,
}

/// Affinity graph of `n` random unit descriptors; one independent stream per
/// `(n, trial)`.
pub fn random_graph(seed: u64, n: usize, trial: usize, dim: usize) -> Result<AffinityGraph> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((n as u64) << 32) | trial as u64);
    let descriptors = (0..n)
        .map(|_| RegionDescriptor::from_vec((0..dim).map(|_| rng.sample(StandardNormal)).collect()))
        .collect::<hyptree_core::Result<Vec<_>>>()?;
    Ok(build_affinity(&descriptors)?)
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let t = Instant::now();
    let out = f();
    (out, t.elapsed().as_secs_f64())
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let m = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[m]
    } else {
        0.5 * (xs[m - 1] + xs[m])
    }
}

pub fn run(config: &BenchConfig) -> Result<BenchResult> {
    if config.n_min < 2 || config.n_min > config.n_max {
        return Err(CliError::config("need 2 <= n_min <= n_max"));
    }
    if config.n_max > EXACT_MAX_N {
        return Err(CliError::config(format!(
            "n_max must be at most {EXACT_MAX_N}"
        )));
    }
    if config.trials == 0 || config.descriptor_dim == 0 {
        return Err(CliError::config(
            "trials and descriptor_dim must be positive",
        ));
    }
    let mut records = Vec::new();
    let mut gaps = Vec::new();
    let mut timing = Vec::new();
    for n in config.n_min..=config.n_max {
        let mut rel = Vec::with_capacity(config.trials);
        let (mut ts, mut te) = (0.0, 0.0);
        for trial in 0..config.trials {
            let w = random_graph(config.seed, n, trial, config.descriptor_dim)?;
            let (spectral, s_secs) = timed(|| recursive_spectral_tree(&w));
            let (exact, e_secs) = timed(|| exact_sparsest_cut_tree(&w, EXACT_MAX_N));
            let cs = dasgupta_cost(&spectral?, &w)?;
            let ce = dasgupta_cost(&exact?, &w)?;
            ts += s_secs;
            te += e_secs;
            // equal costs (both zero included) count as no gap
            rel.push(if cs == ce { 0.0 } else { cs / ce - 1.0 });
            records.push(BenchRecord {
                n,
                trial,
                method: BenchMethod::Spectral,
                cost: cs,
                seconds: s_secs,
            });
            records.push(BenchRecord {
                n,
                trial,
                method: BenchMethod::Exact,
                cost: ce,
                seconds: e_secs,
            });
            if n <= OPTIMAL_MAX_N {
                let (opt, o_secs) = timed(|| optimal_dasgupta_cost(&w));
                records.push(BenchRecord {
                    n,
                    trial,
                    method: BenchMethod::Optimal,
                    cost: opt?,
                    seconds: o_secs,
                });
            }
        }
        let k = config.trials as f64;
        gaps.push(GapSummary {
            n,
            mean_gap: rel.iter().sum::<f64>() / k,
            median_gap: median(rel.clone()),
            mean_abs_gap: rel.iter().map(|g| g.abs()).sum::<f64>() / k,
        });
        timing.push(TimingSummary {
            n,
            method: "spectral",
            mean_seconds: ts / k,
        });
        timing.push(TimingSummary {
            n,
            method: "exact",
            mean_seconds: te / k,
        });
    }
    Ok(BenchResult {
        records,
        gaps,
        timing,
    })
}
