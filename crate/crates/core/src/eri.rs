//! The ERI component estimators (S, R, T, M, D) and the combined report.
//!
//! Every Monte Carlo component is driven by one engine: draws are numbered
//! `0..seeds * n`, grouped into fixed chunks, reduced per chunk and merged in
//! chunk order. The result therefore does not depend on the worker count.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{check_dim, Error, Result};
use crate::explainers::{EvalContext, Explainer};
use crate::metrics::{
    aggregate, distance_slices, AggregatorKind, AttributionVector, Component, DistanceKind, DriftAccumulator,
    DriftEstimate, EriScore, NORMALIZE_EPS,
};
use crate::model::{Checkpoint, Model};
use crate::rng::{mix, stream, Purpose};
use crate::transforms::{
    collapse_explanation, collapse_input, inject_redundancy, sample_alpha, sample_perturbation, CollapsePair,
    PerturbationLaw, RedundancyInjection,
};

/// Draws per reduction chunk. Fixed so parallel and serial runs agree bit for bit.
pub const CHUNK: usize = 64;

/// How Monte Carlo samples are reduced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Reduction {
    /// Online accumulation; memory independent of the sample count.
    #[default]
    Streaming,
    /// Keep every sample and reduce at the end.
    Batch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EriConfig {
    pub distance: DistanceKind,
    /// Monte Carlo draws per seed.
    pub mc_samples: usize,
    pub seeds: Vec<u64>,
    /// Divide each drift sample by `||reference|| + eps`.
    pub normalize: bool,
    pub confidence: f64,
    pub workers: usize,
    pub reduction: Reduction,
}

impl Default for EriConfig {
    fn default() -> Self {
        Self {
            distance: DistanceKind::L2,
            mc_samples: 500,
            seeds: (0..10).collect(),
            normalize: false,
            confidence: 0.95,
            workers: 1,
            reduction: Reduction::Streaming,
        }
    }
}

impl EriConfig {
    pub fn validate(&self) -> Result<()> {
        self.distance.validate()?;
        if self.mc_samples == 0 {
            return Err(Error::invalid("mc_samples must be positive"));
        }
        if self.seeds.is_empty() {
            return Err(Error::Empty("seed list"));
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(Error::invalid(format!("confidence must lie in (0,1), got {}", self.confidence)));
        }
        if self.workers == 0 {
            return Err(Error::invalid("workers must be positive"));
        }
        Ok(())
    }

    /// Known upper limit on a drift sample, when Hoeffding intervals apply.
    fn sample_bound(&self) -> Option<f64> {
        match self.distance {
            DistanceKind::ClampedL2 { cap } if !self.normalize => Some(cap),
            _ => None,
        }
    }

    /// Stable digest of the configuration, for report provenance.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(format!("{self:?}").as_bytes()))
    }

    /// Drift between a reference explanation and another one.
    fn drift(&self, reference: &[f64], other: &[f64]) -> Result<f64> {
        let d = distance_slices(reference, other, self.distance)?;
        if self.normalize {
            let norm = reference.iter().map(|v| v * v).sum::<f64>().sqrt();
            Ok(d / (norm + NORMALIZE_EPS))
        } else {
            Ok(d)
        }
    }
}

fn base_context() -> EvalContext<'static> {
    EvalContext { delta: None, checkpoint: Some(0), law_mean_norm: Some(0.0) }
}

/// Reduce `samples` with the configured strategy. `draw(g)` yields drift
/// sample number `g`; `total` draws are taken.
fn reduce<F>(cfg: &EriConfig, total: usize, draw: F) -> Result<DriftEstimate>
where
    F: Fn(usize) -> Result<f64> + Sync,
{
    if total == 0 {
        return Err(Error::Empty("drift samples"));
    }
    let chunks: Vec<std::ops::Range<usize>> = (0..total).step_by(CHUNK).map(|s| s..(s + CHUNK).min(total)).collect();
    let run_chunk = |r: &std::ops::Range<usize>| -> Result<Vec<f64>> {
        r.clone().map(|g| draw(g).map_err(|e| e.at_draw(g))).collect()
    };
    let per_chunk: Vec<Vec<f64>> = if cfg.workers > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()
            .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
        pool.install(|| chunks.par_iter().map(run_chunk).collect::<Result<_>>())?
    } else {
        chunks.iter().map(run_chunk).collect::<Result<_>>()?
    };
    match cfg.reduction {
        Reduction::Streaming => {
            let mut total_acc = DriftAccumulator::new();
            for chunk in &per_chunk {
                let mut acc = DriftAccumulator::new();
                for &s in chunk {
                    acc.push(s)?;
                }
                total_acc.merge(&acc);
            }
            total_acc.finalize(cfg.confidence, cfg.sample_bound())
        }
        Reduction::Batch => batch_estimate(&per_chunk.concat(), cfg.confidence, cfg.sample_bound()),
    }
}

/// Two-pass reduction of a fully materialized sample.
pub fn batch_estimate(samples: &[f64], confidence: f64, bound: Option<f64>) -> Result<DriftEstimate> {
    if samples.is_empty() {
        return Err(Error::Empty("drift samples"));
    }
    if samples.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
        return Err(Error::invalid("drift samples must be finite and nonnegative"));
    }
    let n = samples.len();
    let mean = samples.iter().sum::<f64>() / n as f64;
    let std_error = if n > 1 {
        let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    } else {
        0.0
    };
    let hoeffding_radius = match bound {
        Some(b) => Some(crate::metrics::hoeffding_radius(n, confidence, b)?),
        None => None,
    };
    Ok(DriftEstimate { mean_drift: mean, n, hoeffding_radius, std_error, confidence })
}

/// Monte Carlo over `(seed, index)` pairs, pooled across seeds.
fn monte_carlo<F>(cfg: &EriConfig, draw: F) -> Result<DriftEstimate>
where
    F: Fn(u64, u64) -> Result<f64> + Sync,
{
    cfg.validate()?;
    let n = cfg.mc_samples;
    reduce(cfg, n * cfg.seeds.len(), |g| draw(cfg.seeds[g / n], (g % n) as u64))
}

fn scored(est: DriftEstimate) -> Result<(EriScore, DriftEstimate)> {
    Ok((EriScore::from_drift(est.clone())?, est))
}

/// Perturbation stability: `1 / (1 + E_delta d(E(x), E(x + delta)))`.
pub fn eri_s(
    model: &dyn Model,
    explainer: &dyn Explainer,
    x: &[f64],
    law: &PerturbationLaw,
    cfg: &EriConfig,
) -> Result<(EriScore, DriftEstimate)> {
    law.validate()?;
    let d = model.input_dim();
    check_dim(d, x.len())?;
    let ctx = EvalContext { law_mean_norm: Some(law.expected_norm(d)), ..base_context() };
    let reference = explainer.explain(model, x, &ctx)?;
    let est = monte_carlo(cfg, |seed, index| {
        let delta = sample_perturbation(&law.with_seed(mix(law.seed, seed)), d, index)?;
        let xp: Vec<f64> = x.iter().zip(&delta).map(|(a, b)| a + b).collect();
        let e = explainer.explain(model, &xp, &EvalContext { delta: Some(&delta), ..ctx })?;
        cfg.drift(reference.as_slice(), e.as_slice())
    })?;
    scored(est)
}

/// ERI-S over an explicit list of perturbations (no sampling).
pub fn eri_s_with_deltas(
    model: &dyn Model,
    explainer: &dyn Explainer,
    x: &[f64],
    deltas: &[Vec<f64>],
    cfg: &EriConfig,
) -> Result<(EriScore, DriftEstimate)> {
    cfg.validate()?;
    check_dim(model.input_dim(), x.len())?;
    let reference = explainer.explain(model, x, &base_context())?;
    let est = reduce(cfg, deltas.len(), |g| {
        let delta = &deltas[g];
        check_dim(x.len(), delta.len())?;
        let xp: Vec<f64> = x.iter().zip(delta).map(|(a, b)| a + b).collect();
        let e = explainer.explain(model, &xp, &EvalContext { delta: Some(delta), ..base_context() })?;
        cfg.drift(reference.as_slice(), e.as_slice())
    })?;
    scored(est)
}

/// Where the model over the collapsed `d - 1` inputs comes from.
#[derive(Clone)]
pub enum CollapsedModel {
    /// Project the model itself (merged first-layer columns).
    Projected,
    /// A separately obtained model, e.g. retrained on collapsed data.
    Provided(Arc<dyn Model>),
}

impl std::fmt::Debug for CollapsedModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CollapsedModel::Projected => write!(f, "Projected"),
            CollapsedModel::Provided(m) => write!(f, "Provided(d={})", m.input_dim()),
        }
    }
}

/// Redundant pair and redundancy range for ERI-R.
#[derive(Debug, Clone)]
pub struct RedundancySetup {
    pub keep: usize,
    pub remove: usize,
    /// `alpha` is drawn uniformly from `[alpha_lo, 1)`.
    pub alpha_lo: f64,
    pub model: CollapsedModel,
}

impl RedundancySetup {
    pub fn new(keep: usize, remove: usize) -> Self {
        Self { keep, remove, alpha_lo: 0.5, model: CollapsedModel::Projected }
    }

    fn validate(&self, d: usize) -> Result<()> {
        CollapsePair { keep: self.keep, remove: self.remove, alpha: 0.0 }.validate(d)?;
        if !(0.0..1.0).contains(&self.alpha_lo) {
            return Err(Error::invalid(format!("alpha_lo must lie in [0,1), got {}", self.alpha_lo)));
        }
        Ok(())
    }
}

fn collapse_drift(
    model: &dyn Model,
    explainer: &dyn Explainer,
    x: &[f64],
    setup: &RedundancySetup,
    alpha: f64,
    noise_seed: u64,
    cfg: &EriConfig,
) -> Result<f64> {
    let inj = RedundancyInjection { source: setup.keep, target: setup.remove, alpha, noise_seed };
    let xr = inject_redundancy(x, &inj)?;
    let pair = CollapsePair { keep: setup.keep, remove: setup.remove, alpha };
    let ctx = base_context();
    let reference = collapse_explanation(&explainer.explain(model, &xr, &ctx)?, setup.remove)?;
    let projected;
    let col_model: &dyn Model = match &setup.model {
        CollapsedModel::Projected => {
            projected = model.collapse(&pair).ok_or_else(|| {
                Error::MissingContext("model has no collapsed form; provide a collapsed model".into())
            })?;
            projected.as_ref()
        }
        CollapsedModel::Provided(m) => m.as_ref(),
    };
    check_dim(x.len() - 1, col_model.input_dim())?;
    let col_explainer = explainer.collapse(&pair)?;
    let e = col_explainer.explain(col_model, &collapse_input(&xr, &pair)?, &ctx)?;
    cfg.drift(reference.as_slice(), e.as_slice())
}

/// Redundancy robustness, averaged over `alpha ~ U[alpha_lo, 1)` and the
/// injection noise.
pub fn eri_r(
    model: &dyn Model,
    explainer: &dyn Explainer,
    x: &[f64],
    setup: &RedundancySetup,
    cfg: &EriConfig,
) -> Result<(EriScore, DriftEstimate)> {
    check_dim(model.input_dim(), x.len())?;
    setup.validate(x.len())?;
    let est = monte_carlo(cfg, |seed, index| {
        let alpha = sample_alpha(seed, index, setup.alpha_lo);
        collapse_drift(model, explainer, x, setup, alpha, mix(seed, index), cfg)
    })?;
    scored(est)
}

/// ERI-R at a fixed redundancy level, averaged over the injection noise.
pub fn eri_r_at_alpha(
    model: &dyn Model,
    explainer: &dyn Explainer,
    x: &[f64],
    setup: &RedundancySetup,
    alpha: f64,
    cfg: &EriConfig,
) -> Result<(EriScore, DriftEstimate)> {
    check_dim(model.input_dim(), x.len())?;
    setup.validate(x.len())?;
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::invalid(format!("alpha must lie in [0,1], got {alpha}")));
    }
    let est = monte_carlo(cfg, |seed, index| collapse_drift(model, explainer, x, setup, alpha, mix(seed, index), cfg))?;
    scored(est)
}

fn consecutive<I>(cfg: &EriConfig, items: I) -> Result<DriftEstimate>
where
    I: IntoIterator<Item = Result<AttributionVector>>,
{
    cfg.validate()?;
    let mut prev: Option<AttributionVector> = None;
    let mut samples = Vec::new();
    let mut acc = DriftAccumulator::new();
    for (t, item) in items.into_iter().enumerate() {
        let cur = item.map_err(|e| e.at_draw(t))?;
        if let Some(p) = &prev {
            let s = cfg.drift(p.as_slice(), cur.as_slice()).map_err(|e| e.at_draw(t))?;
            match cfg.reduction {
                Reduction::Streaming => acc.push(s)?,
                Reduction::Batch => samples.push(s),
            }
        }
        prev = Some(cur);
    }
    match cfg.reduction {
        Reduction::Streaming if !acc.is_empty() => acc.finalize(cfg.confidence, cfg.sample_bound()),
        Reduction::Batch if !samples.is_empty() => batch_estimate(&samples, cfg.confidence, cfg.sample_bound()),
        _ => Err(Error::invalid("need at least two explanations")),
    }
}

/// Temporal consistency: mean drift between consecutive explanations.
pub fn eri_t(explanations: &[AttributionVector], cfg: &EriConfig) -> Result<(EriScore, DriftEstimate)> {
    if explanations.len() < 2 {
        return Err(Error::invalid(format!("ERI-T needs T >= 2 explanations, got {}", explanations.len())));
    }
    scored(consecutive(cfg, explanations.iter().cloned().map(Ok))?)
}

/// ERI-T over a sequence of inputs, explaining each on the fly and keeping
/// only the previous explanation.
pub fn eri_t_inputs(
    model: &dyn Model,
    explainer: &dyn Explainer,
    sequence: &[Vec<f64>],
    cfg: &EriConfig,
) -> Result<(EriScore, DriftEstimate)> {
    if sequence.len() < 2 {
        return Err(Error::invalid(format!("ERI-T needs T >= 2 inputs, got {}", sequence.len())));
    }
    let ctx = base_context();
    scored(consecutive(cfg, sequence.iter().map(|x| explainer.explain(model, x, &ctx)))?)
}

/// Parameter smoothness along a training trajectory at fixed `x`.
pub fn eri_m(
    checkpoints: &[Checkpoint],
    explainer: &dyn Explainer,
    x: &[f64],
    cfg: &EriConfig,
) -> Result<(EriScore, DriftEstimate)> {
    if checkpoints.len() < 2 {
        return Err(Error::invalid(format!("ERI-M needs K >= 2 checkpoints, got {}", checkpoints.len())));
    }
    let items = checkpoints.iter().enumerate().map(|(k, c)| {
        let ctx = EvalContext { checkpoint: Some(k), ..base_context() };
        explainer.explain(&c.params, x, &ctx)
    });
    scored(consecutive(cfg, items)?)
}

/// A distribution that can be sampled reproducibly by `(seed, index)`.
pub trait SampleSource: Send + Sync {
    fn dim(&self) -> usize;

    /// Sample count for finite sources; `None` means draw `mc_samples`.
    fn size(&self) -> Option<usize> {
        None
    }

    fn sample(&self, seed: u64, index: u64) -> Result<Vec<f64>>;
}

/// `N(mean, sd^2 I)`. Two sources with the same seed share their noise, so
/// comparing them isolates the shift.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianSource {
    pub mean: Vec<f64>,
    pub sd: f64,
}

impl SampleSource for GaussianSource {
    fn dim(&self) -> usize {
        self.mean.len()
    }

    fn sample(&self, seed: u64, index: u64) -> Result<Vec<f64>> {
        if !(self.sd >= 0.0 && self.sd.is_finite()) {
            return Err(Error::invalid("source standard deviation must be finite and >= 0"));
        }
        let mut rng = stream(seed, Purpose::Sampling, index);
        Ok(self.mean.iter().map(|m| m + self.sd * Distribution::<f64>::sample(&StandardNormal, &mut rng)).collect())
    }
}

/// Every row of a fixed sample, in order.
#[derive(Debug, Clone, PartialEq)]
pub struct RowSource {
    pub rows: Vec<Vec<f64>>,
}

impl SampleSource for RowSource {
    fn dim(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    fn size(&self) -> Option<usize> {
        Some(self.rows.len())
    }

    fn sample(&self, _seed: u64, index: u64) -> Result<Vec<f64>> {
        self.rows.get(index as usize).cloned().ok_or(Error::Empty("row source"))
    }
}

fn mean_attribution(
    model: &dyn Model,
    explainer: &dyn Explainer,
    source: &dyn SampleSource,
    seed: u64,
    cfg: &EriConfig,
) -> Result<Vec<f64>> {
    let n = source.size().unwrap_or(cfg.mc_samples);
    if n == 0 {
        return Err(Error::Empty("sample source"));
    }
    check_dim(model.input_dim(), source.dim())?;
    let ctx = base_context();
    let chunk_sum = |start: usize| -> Result<Vec<f64>> {
        let mut sum = vec![0.0; source.dim()];
        for g in start..(start + CHUNK).min(n) {
            let x = source.sample(seed, g as u64).map_err(|e| e.at_draw(g))?;
            let e = explainer.explain(model, &x, &ctx).map_err(|e| e.at_draw(g))?;
            check_dim(sum.len(), e.len())?;
            sum.iter_mut().zip(e.as_slice()).for_each(|(s, v)| *s += v);
        }
        Ok(sum)
    };
    let starts: Vec<usize> = (0..n).step_by(CHUNK).collect();
    let sums: Vec<Vec<f64>> = if cfg.workers > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()
            .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
        pool.install(|| starts.par_iter().map(|s| chunk_sum(*s)).collect::<Result<_>>())?
    } else {
        starts.iter().map(|s| chunk_sum(*s)).collect::<Result<_>>()?
    };
    let mut total = vec![0.0; source.dim()];
    for s in &sums {
        total.iter_mut().zip(s).for_each(|(t, v)| *t += v);
    }
    Ok(total.into_iter().map(|t| t / n as f64).collect())
}

/// Distributional robustness: distance between the mean attributions under
/// `P` and `P'`, one sample per seed.
pub fn eri_d(
    model: &dyn Model,
    explainer: &dyn Explainer,
    p: &dyn SampleSource,
    q: &dyn SampleSource,
    cfg: &EriConfig,
) -> Result<(EriScore, DriftEstimate)> {
    cfg.validate()?;
    check_dim(p.dim(), q.dim())?;
    let mut samples = Vec::with_capacity(cfg.seeds.len());
    for &seed in &cfg.seeds {
        let mp = mean_attribution(model, explainer, p, seed, cfg)?;
        let mq = mean_attribution(model, explainer, q, seed, cfg)?;
        samples.push(cfg.drift(&mp, &mq)?);
    }
    let est = match cfg.reduction {
        Reduction::Streaming => {
            let mut acc = DriftAccumulator::new();
            for s in &samples {
                acc.push(*s)?;
            }
            acc.finalize(cfg.confidence, cfg.sample_bound())?
        }
        Reduction::Batch => batch_estimate(&samples, cfg.confidence, cfg.sample_bound())?,
    };
    scored(est)
}

/// Inputs each component needs; supply only what is requested.
#[derive(Clone, Default)]
pub struct ContextBundle {
    pub x: Option<Vec<f64>>,
    pub law: Option<PerturbationLaw>,
    pub redundancy: Option<RedundancySetup>,
    pub sequence: Option<Vec<Vec<f64>>>,
    pub checkpoints: Option<Vec<Checkpoint>>,
    pub distributions: Option<(Arc<dyn SampleSource>, Arc<dyn SampleSource>)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EriReport {
    pub explainer_name: String,
    pub components: BTreeMap<Component, EriScore>,
    pub aggregate: Option<(AggregatorKind, f64)>,
    /// Smallest component score, reported next to any aggregate.
    pub minimum: Option<f64>,
    pub config_hash: String,
}

impl EriReport {
    pub fn score(&self, c: Component) -> Option<f64> {
        self.components.get(&c).map(|s| s.value)
    }
}

fn need<'a, T>(v: &'a Option<T>, c: Component, what: &str) -> Result<&'a T> {
    v.as_ref().ok_or_else(|| Error::MissingContext(format!("ERI-{} needs {what}", c.label())))
}

pub fn eri_report(
    model: &dyn Model,
    explainer: &dyn Explainer,
    requested: &[Component],
    ctx: &ContextBundle,
    cfg: &EriConfig,
    aggregator: Option<AggregatorKind>,
) -> Result<EriReport> {
    cfg.validate()?;
    let mut components = BTreeMap::new();
    for &c in requested {
        let (score, _) = match c {
            Component::S => {
                eri_s(model, explainer, need(&ctx.x, c, "an input x")?, need(&ctx.law, c, "a perturbation law")?, cfg)?
            }
            Component::R => eri_r(
                model,
                explainer,
                need(&ctx.x, c, "an input x")?,
                need(&ctx.redundancy, c, "a redundant feature pair")?,
                cfg,
            )?,
            Component::T => eri_t_inputs(model, explainer, need(&ctx.sequence, c, "an input sequence")?, cfg)?,
            Component::M => eri_m(
                need(&ctx.checkpoints, c, "training checkpoints")?,
                explainer,
                need(&ctx.x, c, "an input x")?,
                cfg,
            )?,
            Component::D => {
                let (p, q) = need(&ctx.distributions, c, "a distribution pair")?;
                eri_d(model, explainer, p.as_ref(), q.as_ref(), cfg)?
            }
        };
        components.insert(c, score);
    }
    let values: BTreeMap<Component, f64> = components.iter().map(|(c, s)| (*c, s.value)).collect();
    let (aggregate_value, minimum) = match aggregator {
        Some(kind) => {
            let v = aggregate(&values, &kind)?;
            let min = aggregate(&values, &AggregatorKind::Minimum)?;
            (Some((kind, v)), Some(min))
        }
        None => (None, None),
    };
    let mut hasher = Sha256::new();
    hasher.update(cfg.hash().as_bytes());
    hasher.update(format!("{requested:?}").as_bytes());
    Ok(EriReport {
        explainer_name: explainer.name(),
        components,
        aggregate: aggregate_value,
        minimum,
        config_hash: hex::encode(hasher.finalize()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::explainers::ExplainerKind;
    use crate::model::NeuralModel;

    fn quick() -> EriConfig {
        EriConfig { mc_samples: 50, seeds: vec![1, 2], ..EriConfig::default() }
    }

    #[test]
    fn config_validation() {
        assert!(EriConfig::default().validate().is_ok());
        assert!(EriConfig { mc_samples: 0, ..quick() }.validate().is_err());
        assert!(EriConfig { seeds: vec![], ..quick() }.validate().is_err());
        assert!(EriConfig { confidence: 1.0, ..quick() }.validate().is_err());
        assert!(EriConfig { workers: 0, ..quick() }.validate().is_err());
        assert_eq!(EriConfig::default().seeds.len(), 10);
        assert_eq!(quick().hash(), quick().hash());
        assert_ne!(quick().hash(), EriConfig::default().hash());
    }

    #[test]
    fn eri_s_examples() {
        let m = NeuralModel::linear(&[1.0, -2.0, 0.5], 0.1).unwrap();
        let x = [0.3, 0.2, -1.0];
        let law = PerturbationLaw::new(0.1, 3);
        let (s, d) = eri_s(&m, &ExplainerKind::Constant(vec![1.0, 0.0, 0.0]), &x, &law, &quick()).unwrap();
        assert_eq!((s.value, d.mean_drift), (1.0, 0.0));
        let (s, _) = eri_s(&m, &ExplainerKind::GradientOnly, &x, &law, &quick()).unwrap();
        assert_eq!(s.value, 1.0);
    }

    #[test]
    fn tightness_construction() {
        let m = NeuralModel::linear(&[2.0], 0.0).unwrap();
        let e = ExplainerKind::OutputScaled { scale: 3.0 };
        let (s, d) = eri_s_with_deltas(&m, &e, &[0.7], &[vec![0.1]], &quick()).unwrap();
        assert!((d.mean_drift - 0.6).abs() < 1e-12);
        assert!((s.value - 1.0 / 1.6).abs() < 1e-12);
    }

    #[test]
    fn explainer_errors_carry_draw_index() {
        let m = NeuralModel::linear(&[1.0, 1.0], 0.0).unwrap();
        let bad = ExplainerKind::Constant(vec![1.0]);
        let err =
            eri_s_with_deltas(&m, &ExplainerKind::GradientOnly, &[0.0, 0.0], &[vec![0.0, 0.0], vec![1.0]], &quick())
                .unwrap_err();
        assert!(matches!(err, Error::Draw { index: 1, .. }), "{err}");
        assert!(eri_s(&m, &bad, &[0.0, 0.0], &PerturbationLaw::new(0.1, 0), &quick()).is_err());
    }

    #[test]
    fn eri_t_examples() {
        let v = |a: &[f64]| AttributionVector::new(a.to_vec()).unwrap();
        let cfg = quick();
        let (s, _) = eri_t(&vec![v(&[1.0, 2.0]); 4], &cfg).unwrap();
        assert_eq!(s.value, 1.0);
        let steps: Vec<AttributionVector> = (0..10).map(|t| v(&[0.05 * t as f64, 1.0])).collect();
        let (s, d) = eri_t(&steps, &cfg).unwrap();
        assert!((d.mean_drift - 0.05).abs() < 1e-12);
        assert!((s.value - 1.0 / 1.05).abs() < 1e-12);
        let (s, d) = eri_t(&[v(&[0.0, 0.0]), v(&[3.0, 0.0])], &cfg).unwrap();
        assert_eq!((d.mean_drift, s.value), (3.0, 0.25));
        assert!(eri_t(&[v(&[1.0])], &cfg).is_err());
    }

    #[test]
    fn eri_m_examples() {
        let m = NeuralModel::linear(&[1.0, 2.0], 0.0).unwrap();
        let ck = |step| Checkpoint { step, params: m.clone(), train_loss: 0.0 };
        let frozen = vec![ck(0), ck(1), ck(2)];
        let (s, _) = eri_m(&frozen, &ExplainerKind::GradTimesInput, &[1.0, 1.0], &quick()).unwrap();
        assert_eq!(s.value, 1.0);
        assert!(eri_m(&frozen[..1], &ExplainerKind::GradTimesInput, &[1.0, 1.0], &quick()).is_err());
    }

    #[test]
    fn eri_d_examples() {
        let m = NeuralModel::linear(&[1.5], 0.0).unwrap();
        let p = GaussianSource { mean: vec![0.0], sd: 1.0 };
        let q = GaussianSource { mean: vec![0.2], sd: 1.0 };
        let cfg = quick();
        let (s, _) = eri_d(&m, &ExplainerKind::GradTimesInput, &p, &p, &cfg).unwrap();
        assert_eq!(s.value, 1.0);
        let (_, d) = eri_d(&m, &ExplainerKind::GradTimesInput, &p, &q, &cfg).unwrap();
        assert!((d.mean_drift - 0.3).abs() < 1e-9, "{}", d.mean_drift);
        let (_, d) = eri_d(&m, &ExplainerKind::Constant(vec![4.0]), &p, &q, &cfg).unwrap();
        assert_eq!(d.mean_drift, 0.0);
        let empty = RowSource { rows: vec![] };
        assert!(eri_d(&m, &ExplainerKind::GradTimesInput, &p, &empty, &cfg).is_err());
    }

    #[test]
    fn report_requires_context() {
        let m = NeuralModel::linear(&[1.0, 2.0], 0.0).unwrap();
        let ctx = ContextBundle { x: Some(vec![1.0, 1.0]), ..Default::default() };
        let err = eri_report(&m, &ExplainerKind::GradientOnly, &[Component::S], &ctx, &quick(), None).unwrap_err();
        assert!(matches!(err, Error::MissingContext(ref s) if s.contains("perturbation law")), "{err}");
    }
}
