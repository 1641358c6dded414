//! Reliability vs. usefulness: drift of each explainer next to how well its
//! top-ranked features predict the target.

use eri_core::eri::{eri_r, eri_s, eri_t_inputs, EriConfig, RedundancySetup};
use eri_core::transforms::PerturbationLaw;
use serde::Serialize;

use crate::error::{BenchError, Result};
use crate::fit::{ridge, split, subset_r2, RIDGE_LAMBDA};
use crate::methods::{build_explainer, mean_abs_attribution, Method, SUMMARY_ROWS};
use crate::stats::top_k;
use crate::tasks::temporal_ar;

pub const DEFAULT_BASELINES: [Method; 4] =
    [Method::GradTimesInput, Method::Constant, Method::MeanAttrib, Method::LabelOnly];

#[derive(Debug, Clone, PartialEq)]
pub struct DecouplingSpec {
    pub t: usize,
    pub phi: f64,
    pub noise_sigma: f64,
    /// Scale of the input perturbations behind the S drift.
    pub perturbation_sigma: f64,
    pub top_k: usize,
    pub data_seed: u64,
}

impl Default for DecouplingSpec {
    fn default() -> Self {
        Self { t: 200, phi: 0.9, noise_sigma: 0.1, perturbation_sigma: 0.1, top_k: 2, data_seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecouplingRow {
    pub explainer: String,
    pub delta_s: f64,
    pub delta_r: f64,
    pub delta_t: f64,
    pub eri_t: f64,
    pub topk_r2: f64,
}

pub fn run_decoupling(spec: &DecouplingSpec, methods: &[Method], cfg: &EriConfig) -> Result<Vec<DecouplingRow>> {
    cfg.validate()?;
    if spec.top_k == 0 {
        return Err(BenchError::config("top_k must be positive"));
    }
    let task = temporal_ar(spec.t, spec.phi, spec.noise_sigma, spec.data_seed)?;
    let data = &task.data;
    let d = data.dim();
    if spec.top_k > d {
        return Err(BenchError::config(format!("top_k = {} exceeds d = {d}", spec.top_k)));
    }
    let all: Vec<usize> = (0..d).collect();
    let model = ridge(data, &all, RIDGE_LAMBDA)?.to_model()?;
    let (train_set, test_set) = split(data, 0.7)?;
    let anchor = &data.rows[data.len() / 2];
    let law = PerturbationLaw::new(spec.perturbation_sigma, spec.data_seed);
    let redundancy = RedundancySetup::new(task.informative[0], task.informative[1]);
    let summary_rows: Vec<Vec<f64>> = data.rows.iter().take(SUMMARY_ROWS).cloned().collect();

    let mut rows = Vec::new();
    for &m in methods {
        if let Some(reason) = m.incompatibility(d) {
            log::warn!("skipping {}: {reason}", m.label());
            continue;
        }
        let e = build_explainer(m, &model, data, spec.data_seed)?;
        let (_, s) = eri_s(&model, e.as_ref(), anchor, &law, cfg)?;
        let (_, r) = eri_r(&model, e.as_ref(), anchor, &redundancy, cfg)?;
        let (t_score, t) = eri_t_inputs(&model, e.as_ref(), &data.rows, cfg)?;
        let importance = mean_abs_attribution(e.as_ref(), &model, &summary_rows)?;
        let chosen = top_k(&importance, spec.top_k);
        rows.push(DecouplingRow {
            explainer: m.label().to_string(),
            delta_s: s.mean_drift,
            delta_r: r.mean_drift,
            delta_t: t.mean_drift,
            eri_t: t_score.value,
            topk_r2: subset_r2(&train_set, &test_set, &chosen)?,
        });
    }
    Ok(rows)
}
