//! Collapse curves: how much attribution the near-duplicate feature keeps as
//! its redundancy with feature 0 grows.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{BenchError, Result};
use crate::fit::{ridge, RIDGE_LAMBDA};
use crate::methods::{feature_importance, Method};
use crate::tasks::redundancy_dataset;

/// Index of the redundant copy in the sweep data.
pub const DUPLICATE: usize = 1;
/// Row label of the `1 - alpha` guide line.
pub const REFERENCE_LABEL: &str = "reference";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveRow {
    pub explainer: String,
    pub alpha: f64,
    pub duplicate_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveTable {
    pub rows: Vec<CurveRow>,
    /// Methods left out, with the reason.
    pub skipped: Vec<(String, String)>,
}

impl CurveTable {
    /// Scores of one explainer in alpha order.
    pub fn series(&self, explainer: &str) -> Vec<(f64, f64)> {
        self.rows.iter().filter(|r| r.explainer == explainer).map(|r| (r.alpha, r.duplicate_score)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub d: usize,
    pub alpha_grid: Vec<f64>,
    pub n: usize,
}

/// Run `f` on a pool of `workers` threads.
pub(crate) fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| BenchError::config(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Raw duplicate-feature importance of every method in one (alpha, seed) cell.
fn cell(spec: &SweepSpec, methods: &[Method], alpha: f64, seed: u64) -> Result<Vec<f64>> {
    let data = redundancy_dataset(spec.d, alpha, spec.n, seed)?;
    let all: Vec<usize> = (0..spec.d).collect();
    let model = ridge(&data, &all, RIDGE_LAMBDA)?.to_model()?;
    methods.iter().map(|&m| feature_importance(m, &model, &data, seed, DUPLICATE)).collect()
}

/// Collapse curve per method, averaged over `seeds`. Each curve is scaled by
/// its maximum over the grid, except MI which stays in nats. Cells run on
/// `workers` threads; results do not depend on the worker count.
pub fn run_collapse_curve(spec: &SweepSpec, methods: &[Method], seeds: &[u64], workers: usize) -> Result<CurveTable> {
    if spec.alpha_grid.is_empty() || seeds.is_empty() {
        return Err(BenchError::config("collapse curve needs a nonempty alpha grid and seed list"));
    }
    if spec.d <= DUPLICATE {
        return Err(BenchError::config("collapse curve needs d >= 2"));
    }
    let mut skipped = Vec::new();
    let mut active = Vec::new();
    for &m in methods {
        match m.incompatibility(spec.d) {
            Some(reason) => {
                log::warn!("skipping {}: {reason}", m.label());
                skipped.push((m.label().to_string(), reason));
            }
            None => active.push(m),
        }
    }
    let cells: Vec<(usize, u64)> =
        (0..spec.alpha_grid.len()).flat_map(|a| seeds.iter().map(move |&s| (a, s))).collect();
    let results: Vec<Result<Vec<f64>>> =
        with_workers(workers, || cells.par_iter().map(|&(a, s)| cell(spec, &active, spec.alpha_grid[a], s)).collect())?;

    // mean over seeds, in cell order
    let mut means = vec![vec![0.0; active.len()]; spec.alpha_grid.len()];
    for (&(a, _), r) in cells.iter().zip(results) {
        for (m, v) in means[a].iter_mut().zip(r?) {
            *m += v;
        }
    }
    let k = seeds.len() as f64;
    means.iter_mut().flatten().for_each(|v| *v /= k);

    let mut rows = Vec::new();
    for (j, &m) in active.iter().enumerate() {
        let peak = means.iter().map(|r| r[j]).fold(0.0_f64, f64::max);
        let scale = if m == Method::Mi || peak == 0.0 { 1.0 } else { peak };
        for (a, &alpha) in spec.alpha_grid.iter().enumerate() {
            rows.push(CurveRow { explainer: m.label().to_string(), alpha, duplicate_score: means[a][j] / scale });
        }
    }
    for &alpha in &spec.alpha_grid {
        rows.push(CurveRow { explainer: REFERENCE_LABEL.to_string(), alpha, duplicate_score: 1.0 - alpha });
    }
    Ok(CurveTable { rows, skipped })
}
