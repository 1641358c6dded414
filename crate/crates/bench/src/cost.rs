//! Wall-time of exact Shapley enumeration as the feature count grows.

use std::time::Instant;

use eri_core::explainers::{exact_shapley, ShapleyValueFn};
use eri_core::model::Activation;
use eri_core::NeuralModel;
use serde::Serialize;

use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostPoint {
    pub d: usize,
    pub seconds: f64,
}

/// Best-of-`repeats` wall time of one exact Shapley explanation of a small
/// MLP for each `d`.
pub fn shapley_cost(dims: &[usize], repeats: usize, seed: u64) -> Result<Vec<CostPoint>> {
    let mut out = Vec::with_capacity(dims.len());
    for &d in dims {
        let model = NeuralModel::random(&[d, 8, 1], Activation::Tanh, seed)?;
        let x: Vec<f64> = (0..d).map(|i| (i as f64 * 0.37).sin()).collect();
        let value_fn = ShapleyValueFn::BaselineReplacement(vec![0.0; d]);
        let mut best = f64::INFINITY;
        for _ in 0..repeats.max(1) {
            let start = Instant::now();
            let phi = exact_shapley(&model, &x, &value_fn)?;
            best = best.min(start.elapsed().as_secs_f64());
            std::hint::black_box(phi);
        }
        out.push(CostPoint { d, seconds: best });
    }
    Ok(out)
}

/// Geometric-mean growth factor per added feature across the points.
pub fn growth_per_feature(points: &[CostPoint]) -> Option<f64> {
    let (first, last) = (points.first()?, points.last()?);
    let steps = last.d.checked_sub(first.d)?;
    if steps == 0 || first.seconds <= 0.0 {
        return None;
    }
    Some((last.seconds / first.seconds).powf(1.0 / steps as f64))
}
