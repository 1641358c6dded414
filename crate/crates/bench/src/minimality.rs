//! Minimality suite: each counterexample wrapper must fail its own axiom
//! test and pass the other three.

use eri_core::eri::{eri_m, eri_r, eri_s_with_deltas, EriConfig, RedundancySetup};
use eri_core::metrics::distance;
use eri_core::rng::{stream, Purpose};
use eri_core::transforms::{wrap_counterexample, BreakVariant, PerturbationLaw};
use eri_core::{Checkpoint, DistanceKind, EvalContext, Explainer, ExplainerKind, Model, NeuralModel};
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{BenchError, Result};

/// Drift (or score jump) above this fails a test.
pub const TOLERANCE: f64 = 1e-3;

const D: usize = 4;
const KEEP: usize = 0;
const REMOVE: usize = 1;
/// Size of the A1 probe perturbation.
const PROBE: f64 = 1e-6;

/// Offsets used by the wrappers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BreakParams {
    pub k: f64,
    pub eta: f64,
    pub u_level: f64,
    pub w_level: f64,
}

impl Default for BreakParams {
    fn default() -> Self {
        Self { k: 1.0, eta: 0.5, u_level: 0.5, w_level: 0.5 }
    }
}

impl BreakParams {
    /// Break variants in axiom order. `v` is concentrated on the kept
    /// feature so it is asymmetric in the redundant pair; `u` and `w` are
    /// uniform so they are symmetric in it.
    pub fn variants(&self, tau: f64) -> Vec<BreakVariant> {
        let mut v = vec![0.0; D];
        v[KEEP] = 1.0;
        vec![
            BreakVariant::A1 { k: self.k },
            BreakVariant::A2 { eta: self.eta, v },
            BreakVariant::A3 { u: vec![self.u_level; D] },
            BreakVariant::A4 { tau, w: vec![self.w_level; D] },
        ]
    }
}

/// Fixture for one seed: a linear model whose weights are tied on the
/// redundant pair, and a query point.
struct Fixture {
    model: NeuralModel,
    x: Vec<f64>,
    /// Direction sign of the A1 probe.
    probe_sign: f64,
}

impl Fixture {
    fn new(seed: u64) -> Result<Self> {
        let mut rng = stream(seed, Purpose::Custom(0xA11), 0);
        let mut draw = || -> f64 { StandardNormal.sample(&mut rng) };
        let tied = draw();
        let weights = [tied, tied, draw(), draw()];
        let x: Vec<f64> = (0..D).map(|_| draw()).collect();
        let probe_sign = if draw() >= 0.0 { 1.0 } else { -1.0 };
        Ok(Self { model: NeuralModel::linear(&weights, draw())?, x, probe_sign })
    }
}

/// The sigma grid swept by the A4 test and the threshold it crosses.
fn sigma_grid() -> Vec<f64> {
    (1..=20).map(|k| k as f64 * 0.05).collect()
}

fn threshold() -> f64 {
    // strictly between grid points 0.50 and 0.55
    PerturbationLaw::new(0.525, 0).expected_norm(D)
}

/// Test statistic of each axiom; the test passes when it is `<= TOLERANCE`.
fn axiom_statistics(fx: &Fixture, e: &dyn Explainer, seed: u64) -> Result<[f64; 4]> {
    let cfg = EriConfig { mc_samples: 32, seeds: vec![seed], distance: DistanceKind::L2, ..EriConfig::default() };

    // A1: drift must vanish for a vanishing perturbation
    let mut delta = vec![0.0; D];
    delta[D - 1] = fx.probe_sign * PROBE;
    let (_, s) = eri_s_with_deltas(&fx.model, e, &fx.x, &[delta], &cfg)?;

    // A2: perfectly redundant pair collapses without drift
    let setup = RedundancySetup { alpha_lo: 0.95, ..RedundancySetup::new(KEEP, REMOVE) };
    let (_, r) = eri_r(&fx.model, e, &fx.x, &setup, &cfg)?;

    // A3: frozen parameters give no checkpoint drift
    let frozen: Vec<Checkpoint> =
        (0..4).map(|k| Checkpoint { step: k, params: fx.model.clone(), train_loss: 0.0 }).collect();
    let (_, m) = eri_m(&frozen, e, &fx.x, &cfg)?;

    // A4: the score moves continuously with the perturbation scale
    let grid = sigma_grid();
    let at = |sigma: f64| {
        let ctx = EvalContext {
            law_mean_norm: Some(PerturbationLaw::new(sigma, seed).expected_norm(D)),
            checkpoint: Some(0),
            delta: None,
        };
        e.explain(&fx.model, &fx.x, &ctx)
    };
    let reference = at(grid[0])?;
    let mut scores = Vec::with_capacity(grid.len());
    for &sigma in &grid {
        scores.push(1.0 / (1.0 + distance(&reference, &at(sigma)?, DistanceKind::L2)?));
    }
    let jump = scores.windows(2).map(|w| (w[0] - w[1]).abs()).fold(0.0_f64, f64::max);

    Ok([s.mean_drift, r.mean_drift, m.mean_drift, jump])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinimalityCell {
    pub seed: u64,
    pub wrapper: String,
    pub test: String,
    pub statistic: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinimalityReport {
    pub cells: Vec<MinimalityCell>,
    /// `pass[w][t]` for each seed, wrapper `w` and test `t`.
    pub matrices: Vec<(u64, [[bool; 4]; 4])>,
}

impl MinimalityReport {
    /// Every seed's matrix fails exactly on the diagonal.
    pub fn is_diagonal(&self) -> bool {
        self.matrices.iter().all(|(_, m)| (0..4).all(|w| (0..4).all(|t| m[w][t] == (w != t))))
    }
}

/// Run the 4x4 wrapper-vs-test matrix on the fixture task for each seed.
/// The base explainer must pass all four tests first.
pub fn run_minimality_suite(base: &ExplainerKind, params: &BreakParams, seeds: &[u64]) -> Result<MinimalityReport> {
    if seeds.is_empty() {
        return Err(BenchError::config("minimality suite needs at least one seed"));
    }
    let mut cells = Vec::new();
    let mut matrices = Vec::new();
    for &seed in seeds {
        let fx = Fixture::new(seed)?;
        if fx.model.input_dim() != D {
            return Err(BenchError::Preflight("fixture dimension".into()));
        }
        let base_stats = axiom_statistics(&fx, base, seed)?;
        if let Some(t) = base_stats.iter().position(|s| *s > TOLERANCE) {
            return Err(BenchError::Preflight(format!(
                "base explainer {} fails the A{} test on seed {seed} (statistic {})",
                base.name(),
                t + 1,
                base_stats[t]
            )));
        }
        let mut matrix = [[false; 4]; 4];
        for (w, variant) in params.variants(threshold()).into_iter().enumerate() {
            let wrapped = wrap_counterexample(Box::new(base.clone()), variant)?;
            let stats = axiom_statistics(&fx, &wrapped, seed)?;
            for (t, s) in stats.iter().enumerate() {
                let passed = *s <= TOLERANCE;
                matrix[w][t] = passed;
                cells.push(MinimalityCell {
                    seed,
                    wrapper: format!("A{}Break", w + 1),
                    test: format!("A{}", t + 1),
                    statistic: *s,
                    passed,
                });
            }
        }
        matrices.push((seed, matrix));
    }
    Ok(MinimalityReport { cells, matrices })
}
