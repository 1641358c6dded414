//! Synthetic data generators for the benchmark protocols.

use eri_core::rng::{mix, stream, Purpose};
use eri_core::transforms::{default_alpha_grid, redundant_value};
use eri_core::Dataset;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SyntheticTask {
    /// Feature 1 is an `alpha`-controlled near-copy of feature 0.
    RedundancySweep { d: usize, alpha_grid: Vec<f64>, n: usize },
    /// `(X1, X2)` cause `Y`; `X3` is noise.
    LinearScm { n: usize },
    /// Five causes with effect ordering `X1 >> X3 >> {X2, X4, X5}`.
    NonlinearScm { n: usize },
    /// Independent AR(1) feature processes with a linear read-out.
    TemporalAr { t: usize, phi: f64, noise_sigma: f64 },
}

impl SyntheticTask {
    pub fn redundancy_sweep(n: usize) -> Self {
        SyntheticTask::RedundancySweep { d: 4, alpha_grid: default_alpha_grid(), n }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SyntheticTask::RedundancySweep { d, alpha_grid, n } => {
                if *d < 2 {
                    return Err(BenchError::config("redundancy sweep needs d >= 2"));
                }
                if alpha_grid.is_empty() || alpha_grid.iter().any(|a| !(0.0..=1.0).contains(a)) {
                    return Err(BenchError::config("alpha grid must be nonempty and inside [0, 1]"));
                }
                if *n < 100 {
                    return Err(BenchError::config("redundancy sweep needs n >= 100"));
                }
            }
            SyntheticTask::LinearScm { n } | SyntheticTask::NonlinearScm { n } => {
                if *n < 100 {
                    return Err(BenchError::config("SCM tasks need n >= 100"));
                }
            }
            SyntheticTask::TemporalAr { t, phi, noise_sigma } => {
                if *t < 20 {
                    return Err(BenchError::config("temporal task needs T >= 20"));
                }
                if !(phi.abs() < 1.0) {
                    return Err(BenchError::config("AR coefficient must satisfy |phi| < 1"));
                }
                if !(*noise_sigma > 0.0) {
                    return Err(BenchError::config("noise sigma must be positive"));
                }
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &'static str {
        match self {
            SyntheticTask::RedundancySweep { .. } => "redundancy_sweep",
            SyntheticTask::LinearScm { .. } => "linear_scm",
            SyntheticTask::NonlinearScm { .. } => "nonlinear_scm",
            SyntheticTask::TemporalAr { .. } => "temporal_ar",
        }
    }
}

fn gaussian_rows(n: usize, d: usize, seed: u64, purpose_index: u64) -> Vec<Vec<f64>> {
    let mut rng = stream(seed, Purpose::Data, purpose_index);
    (0..n).map(|_| (0..d).map(|_| StandardNormal.sample(&mut rng)).collect()).collect()
}

fn noise(n: usize, seed: u64, purpose_index: u64) -> Vec<f64> {
    let mut rng = stream(seed, Purpose::Data, purpose_index);
    (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
}

/// Target noise scale of the redundancy sweep.
pub const SWEEP_NOISE: f64 = 0.5;

/// `y = x0 + x1 + 0.5 eps`, with `x1 = alpha x0 + sqrt(1 - alpha^2) z` and
/// the remaining features independent noise. Base draws are shared across
/// `alpha`, so the sweep varies only the redundancy.
pub fn redundancy_dataset(d: usize, alpha: f64, n: usize, seed: u64) -> Result<Dataset> {
    let mut rows = gaussian_rows(n, d, seed, 0);
    let z = noise(n, seed, 1);
    let eps = noise(n, seed, 2);
    for (r, zr) in rows.iter_mut().zip(&z) {
        r[1] = redundant_value(r[0], alpha, *zr);
    }
    let targets = rows.iter().zip(&eps).map(|(r, e)| r[0] + r[1] + SWEEP_NOISE * e).collect();
    Ok(Dataset::new(rows, targets)?)
}

/// Data with known per-feature effect magnitudes.
#[derive(Debug, Clone)]
pub struct ScmData {
    pub data: Dataset,
    /// Ground-truth effect magnitude of each feature on `Y`.
    pub effects: Vec<f64>,
    /// Features with a causal path to `Y`.
    pub causal: Vec<usize>,
}

pub const LINEAR_SCM_EFFECTS: [f64; 3] = [2.0, 1.5, 0.0];

/// `Y = 2 X1 + 1.5 X2 + 0.1 eps`; `X3` is independent noise.
pub fn linear_scm(n: usize, seed: u64) -> Result<ScmData> {
    let rows = gaussian_rows(n, 3, mix(seed, 11), 0);
    let eps = noise(n, mix(seed, 11), 1);
    let targets = rows
        .iter()
        .zip(&eps)
        .map(|(r, e)| LINEAR_SCM_EFFECTS[0] * r[0] + LINEAR_SCM_EFFECTS[1] * r[1] + 0.1 * e)
        .collect();
    Ok(ScmData { data: Dataset::new(rows, targets)?, effects: LINEAR_SCM_EFFECTS.to_vec(), causal: vec![0, 1] })
}

pub const NONLINEAR_SCM_EFFECTS: [f64; 5] = [3.0, 0.3, 1.2, 0.3, 0.3];

/// `Y = 3 tanh(1.5 X1) + 1.2 X3 + 0.3 (X2 + X4 + X5) + 0.1 eps`.
pub fn nonlinear_scm(n: usize, seed: u64) -> Result<ScmData> {
    let rows = gaussian_rows(n, 5, mix(seed, 12), 0);
    let eps = noise(n, mix(seed, 12), 1);
    let e = NONLINEAR_SCM_EFFECTS;
    let targets = rows
        .iter()
        .zip(&eps)
        .map(|(r, n)| e[0] * (1.5 * r[0]).tanh() + e[2] * r[2] + e[1] * r[1] + e[3] * r[3] + e[4] * r[4] + 0.1 * n)
        .collect();
    Ok(ScmData { data: Dataset::new(rows, targets)?, effects: e.to_vec(), causal: vec![0, 1, 2, 3, 4] })
}

/// Feature count of the temporal task.
pub const TEMPORAL_DIM: usize = 8;
/// Read-out weights; only features 0 and 1 are informative.
pub const TEMPORAL_WEIGHTS: [f64; 2] = [10.0, -8.0];

#[derive(Debug, Clone)]
pub struct TemporalData {
    /// `T` consecutive states in time order; doubles as a regression set.
    pub data: Dataset,
    pub informative: Vec<usize>,
}

/// `x_{t+1} = phi x_t + sigma eps_t` per feature, started from stationarity;
/// `y_t = 10 x_{t,0} - 8 x_{t,1} + 0.2 sigma nu_t`.
pub fn temporal_ar(t: usize, phi: f64, noise_sigma: f64, seed: u64) -> Result<TemporalData> {
    let shocks = gaussian_rows(t, TEMPORAL_DIM, mix(seed, 13), 0);
    let nu = noise(t, mix(seed, 13), 1);
    let stationary_sd = noise_sigma / (1.0 - phi * phi).sqrt();
    let mut state: Vec<f64> = noise(TEMPORAL_DIM, mix(seed, 13), 2).iter().map(|z| stationary_sd * z).collect();
    let mut rows = Vec::with_capacity(t);
    for s in &shocks {
        state = state.iter().zip(s).map(|(x, e)| phi * x + noise_sigma * e).collect();
        rows.push(state.clone());
    }
    let targets = rows
        .iter()
        .zip(&nu)
        .map(|(r, v)| TEMPORAL_WEIGHTS[0] * r[0] + TEMPORAL_WEIGHTS[1] * r[1] + 0.2 * noise_sigma * v)
        .collect();
    Ok(TemporalData { data: Dataset::new(rows, targets)?, informative: vec![0, 1] })
}
