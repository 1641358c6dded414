//! Model fitting: ridge regression (closed form) and small MLPs.

use eri_core::model::{train, Activation, Optimizer, TrainConfig};
use eri_core::{Dataset, Model, NeuralModel};
use nalgebra::{DMatrix, DVector};

use crate::error::{BenchError, Result};

/// Default ridge penalty; small enough to be OLS on well-conditioned data,
/// large enough to stay solvable when two columns coincide.
pub const RIDGE_LAMBDA: f64 = 1e-3;

/// Fitted linear model `y = w . x + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearFit {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearFit {
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.bias
    }

    pub fn to_model(&self) -> Result<NeuralModel> {
        Ok(NeuralModel::linear(&self.weights, self.bias)?)
    }
}

/// Ridge regression on `features` of `data`; the intercept is not penalized.
/// The penalty is scaled by `n` so it acts per sample.
pub fn ridge(data: &Dataset, features: &[usize], lambda: f64) -> Result<LinearFit> {
    let n = data.len();
    let k = features.len();
    if n == 0 {
        return Err(BenchError::config("cannot fit on an empty dataset"));
    }
    if let Some(&bad) = features.iter().find(|&&j| j >= data.dim()) {
        return Err(BenchError::config(format!("feature {bad} out of range")));
    }
    // center to keep the intercept out of the penalty
    let means: Vec<f64> = features.iter().map(|&j| data.rows.iter().map(|r| r[j]).sum::<f64>() / n as f64).collect();
    let y_mean = data.targets.iter().sum::<f64>() / n as f64;
    let x = DMatrix::from_fn(n, k, |i, c| data.rows[i][features[c]] - means[c]);
    let y = DVector::from_iterator(n, data.targets.iter().map(|t| t - y_mean));
    let mut gram = x.transpose() * &x;
    for c in 0..k {
        gram[(c, c)] += lambda * n as f64;
    }
    let rhs = x.transpose() * y;
    let w = gram
        .cholesky()
        .ok_or_else(|| BenchError::Numeric(eri_core::Error::Guard("ridge system is not positive definite".into())))?
        .solve(&rhs);
    let weights: Vec<f64> = w.iter().copied().collect();
    let bias = y_mean - weights.iter().zip(&means).map(|(w, m)| w * m).sum::<f64>();
    Ok(LinearFit { weights, bias })
}

/// Coefficient of determination; `1 - SSE/SST`, negative when worse than the mean.
pub fn r_squared(pred: &[f64], y: &[f64]) -> f64 {
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let sst: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let sse: f64 = pred.iter().zip(y).map(|(p, v)| (p - v).powi(2)).sum();
    if sst == 0.0 {
        return 0.0;
    }
    1.0 - sse / sst
}

/// Split rows `[0, floor(frac n))` / rest, preserving order.
pub fn split(data: &Dataset, frac: f64) -> Result<(Dataset, Dataset)> {
    let cut = ((data.len() as f64) * frac).floor() as usize;
    if cut == 0 || cut >= data.len() {
        return Err(BenchError::config("split leaves an empty side"));
    }
    let a = Dataset::new(data.rows[..cut].to_vec(), data.targets[..cut].to_vec())?;
    let b = Dataset::new(data.rows[cut..].to_vec(), data.targets[cut..].to_vec())?;
    Ok((a, b))
}

/// Held-out R² of an OLS refit restricted to `features`.
pub fn subset_r2(train_set: &Dataset, test_set: &Dataset, features: &[usize]) -> Result<f64> {
    let fit = ridge(train_set, features, 0.0).or_else(|_| ridge(train_set, features, RIDGE_LAMBDA))?;
    let pred: Vec<f64> = test_set
        .rows
        .iter()
        .map(|r| {
            let sub: Vec<f64> = features.iter().map(|&j| r[j]).collect();
            fit.predict(&sub)
        })
        .collect();
    Ok(r_squared(&pred, &test_set.targets))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpSpec {
    pub width: usize,
    pub steps: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
}

impl Default for MlpSpec {
    fn default() -> Self {
        Self { width: 32, steps: 1500, learning_rate: 0.01, batch_size: 64 }
    }
}

/// One-hidden-layer tanh MLP trained with Adam on minibatches.
pub fn fit_mlp(data: &Dataset, spec: &MlpSpec, seed: u64) -> Result<NeuralModel> {
    let init = NeuralModel::random(&[data.dim(), spec.width, 1], Activation::Tanh, seed)?;
    let cfg = TrainConfig {
        learning_rate: spec.learning_rate,
        steps: spec.steps,
        seed,
        snapshot_every: spec.steps,
        optimizer: Optimizer::ADAM,
        batch_size: Some(spec.batch_size),
    };
    let mut checkpoints = train(&init, data, &cfg)?;
    Ok(checkpoints.pop().expect("train returns the final checkpoint").params)
}

/// Model predictions over a dataset.
pub fn predictions(model: &dyn Model, data: &Dataset) -> Result<Vec<f64>> {
    Ok(data.rows.iter().map(|r| model.forward(r)).collect::<eri_core::Result<_>>()?)
}
