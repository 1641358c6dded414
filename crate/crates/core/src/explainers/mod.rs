//! Feature-attribution methods behind one pure-function contract.
//!
//! An explainer maps `(model, x)` to an [`AttributionVector`]. The
//! [`EvalContext`] carries the side information some transformation-aware
//! explainers need (the perturbation that produced `x`, the checkpoint index,
//! the active perturbation law); ordinary explainers ignore it.

mod shapley;

use std::sync::Arc;

use rand_distr::{Distribution, StandardNormal};

pub use shapley::{exact_shapley, ShapleyValueFn, MAX_SHAPLEY_DIM};

use crate::error::{check_dim, Error, Result};
use crate::metrics::AttributionVector;
use crate::model::{Dataset, Model};
use crate::rng::{fingerprint, mix, stream, Purpose};
use crate::transforms::{collapse_input, remove_coordinate, CollapsePair};

/// Default number of midpoint steps for integrated gradients.
pub const DEFAULT_IG_STEPS: usize = 256;

#[derive(Debug, Clone, Copy, Default)]
pub struct EvalContext<'a> {
    /// Perturbation that produced the query point, when there is one.
    pub delta: Option<&'a [f64]>,
    /// Index of the checkpoint whose parameters the model carries.
    pub checkpoint: Option<usize>,
    /// `E||delta||` of the perturbation law in force.
    pub law_mean_norm: Option<f64>,
}

pub trait Explainer: Send + Sync {
    fn name(&self) -> String;

    fn explain(&self, model: &dyn Model, x: &[f64], ctx: &EvalContext<'_>) -> Result<AttributionVector>;

    /// The same explainer acting on collapsed inputs of dimension `d - 1`.
    fn collapse(&self, pair: &CollapsePair) -> Result<Box<dyn Explainer>>;
}

impl<T: Explainer + ?Sized> Explainer for Box<T> {
    fn name(&self) -> String {
        (**self).name()
    }

    fn explain(&self, model: &dyn Model, x: &[f64], ctx: &EvalContext<'_>) -> Result<AttributionVector> {
        (**self).explain(model, x, ctx)
    }

    fn collapse(&self, pair: &CollapsePair) -> Result<Box<dyn Explainer>> {
        (**self).collapse(pair)
    }
}

#[derive(Debug, Clone)]
pub enum ExplainerKind {
    /// `x ⊙ ∇f(x)`
    GradTimesInput,
    /// `∇f(x)`
    GradientOnly,
    IntegratedGradients {
        steps: usize,
        baseline: Vec<f64>,
    },
    /// `f(x) - f(x with x_i := baseline_i)` per feature.
    Occlusion {
        baseline: Vec<f64>,
    },
    PermutationImportance {
        shuffles: usize,
        eval_set: Arc<Dataset>,
        seed: u64,
    },
    ExactShapley(ShapleyValueFn),
    /// Standard normal noise keyed by the seed and the input bits.
    Random {
        seed: u64,
    },
    Constant(Vec<f64>),
    /// A fixed mean attribution, typically of another explainer over a dataset.
    MeanAttrib(Vec<f64>),
    /// `f(x) e_1`.
    LabelOnly,
    /// `scale f(x) e_1`.
    OutputScaled {
        scale: f64,
    },
    /// `A x` for a row-major `d x d` matrix, ignoring the model.
    LinearMap {
        matrix: Vec<f64>,
        dim: usize,
    },
}

impl ExplainerKind {
    pub fn integrated_gradients(d: usize) -> Self {
        ExplainerKind::IntegratedGradients { steps: DEFAULT_IG_STEPS, baseline: vec![0.0; d] }
    }

    /// Mean attribution of `base` over `rows`, frozen into a constant explainer.
    pub fn mean_attrib(base: &dyn Explainer, model: &dyn Model, rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Empty("reference rows"));
        }
        let mut sum = vec![0.0; model.input_dim()];
        for r in rows {
            let e = base.explain(model, r, &EvalContext::default())?;
            check_dim(sum.len(), e.len())?;
            sum.iter_mut().zip(e.as_slice()).for_each(|(s, v)| *s += v);
        }
        let n = rows.len() as f64;
        Ok(ExplainerKind::MeanAttrib(sum.into_iter().map(|s| s / n).collect()))
    }

    fn short_name(&self) -> &'static str {
        match self {
            ExplainerKind::GradTimesInput => "GradTimesInput",
            ExplainerKind::GradientOnly => "GradientOnly",
            ExplainerKind::IntegratedGradients { .. } => "IntegratedGradients",
            ExplainerKind::Occlusion { .. } => "Occlusion",
            ExplainerKind::PermutationImportance { .. } => "PermutationImportance",
            ExplainerKind::ExactShapley(_) => "ExactShapley",
            ExplainerKind::Random { .. } => "Random",
            ExplainerKind::Constant(_) => "Constant",
            ExplainerKind::MeanAttrib(_) => "MeanAttrib",
            ExplainerKind::LabelOnly => "LabelOnly",
            ExplainerKind::OutputScaled { .. } => "OutputScaled",
            ExplainerKind::LinearMap { .. } => "LinearMap",
        }
    }
}

impl Explainer for ExplainerKind {
    fn name(&self) -> String {
        self.short_name().to_string()
    }

    fn explain(&self, model: &dyn Model, x: &[f64], _ctx: &EvalContext<'_>) -> Result<AttributionVector> {
        let d = model.input_dim();
        check_dim(d, x.len())?;
        let values = match self {
            ExplainerKind::GradTimesInput => {
                let g = model.input_gradient(x)?;
                g.iter().zip(x).map(|(g, x)| g * x).collect()
            }
            ExplainerKind::GradientOnly => model.input_gradient(x)?,
            ExplainerKind::IntegratedGradients { steps, baseline } => {
                return integrated_gradients(model, x, baseline, *steps);
            }
            ExplainerKind::Occlusion { baseline } => {
                check_dim(d, baseline.len())?;
                let fx = model.forward(x)?;
                let mut probe = x.to_vec();
                let mut out = Vec::with_capacity(d);
                for i in 0..d {
                    probe[i] = baseline[i];
                    out.push(fx - model.forward(&probe)?);
                    probe[i] = x[i];
                }
                out
            }
            ExplainerKind::PermutationImportance { shuffles, eval_set, seed } => {
                return permutation_importance(model, eval_set, *shuffles, *seed);
            }
            ExplainerKind::ExactShapley(value_fn) => return exact_shapley(model, x, value_fn),
            ExplainerKind::Random { seed } => {
                let mut rng = stream(*seed, Purpose::RandomExplainer, fingerprint(x));
                (0..d).map(|_| StandardNormal.sample(&mut rng)).collect()
            }
            ExplainerKind::Constant(c) | ExplainerKind::MeanAttrib(c) => {
                check_dim(d, c.len())?;
                c.clone()
            }
            ExplainerKind::LabelOnly => scaled_output(model, x, 1.0)?,
            ExplainerKind::OutputScaled { scale } => scaled_output(model, x, *scale)?,
            ExplainerKind::LinearMap { matrix, dim } => {
                check_dim(*dim, d)?;
                check_dim(dim * dim, matrix.len())?;
                matrix.chunks_exact(*dim).map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum()).collect()
            }
        };
        AttributionVector::new(values)
    }

    fn collapse(&self, pair: &CollapsePair) -> Result<Box<dyn Explainer>> {
        let collapsed = match self {
            ExplainerKind::IntegratedGradients { steps, baseline } => {
                ExplainerKind::IntegratedGradients { steps: *steps, baseline: collapse_input(baseline, pair)? }
            }
            ExplainerKind::Occlusion { baseline } => {
                ExplainerKind::Occlusion { baseline: collapse_input(baseline, pair)? }
            }
            ExplainerKind::PermutationImportance { shuffles, eval_set, seed } => {
                let rows = eval_set.rows.iter().map(|r| collapse_input(r, pair)).collect::<Result<Vec<_>>>()?;
                ExplainerKind::PermutationImportance {
                    shuffles: *shuffles,
                    eval_set: Arc::new(Dataset::new(rows, eval_set.targets.clone())?),
                    seed: *seed,
                }
            }
            ExplainerKind::ExactShapley(v) => ExplainerKind::ExactShapley(v.collapse(pair)?),
            ExplainerKind::Constant(c) => ExplainerKind::Constant(remove_coordinate(c, pair.remove)?),
            ExplainerKind::MeanAttrib(c) => ExplainerKind::MeanAttrib(remove_coordinate(c, pair.remove)?),
            ExplainerKind::LinearMap { .. } => {
                return Err(Error::invalid("LinearMap explainer has no collapsed form"));
            }
            other => other.clone(),
        };
        Ok(Box::new(collapsed))
    }
}

fn scaled_output(model: &dyn Model, x: &[f64], scale: f64) -> Result<Vec<f64>> {
    let mut out = vec![0.0; x.len()];
    out[0] = scale * model.forward(x)?;
    Ok(out)
}

/// Midpoint-rule integrated gradients along the straight path from `baseline`.
pub fn integrated_gradients(model: &dyn Model, x: &[f64], baseline: &[f64], steps: usize) -> Result<AttributionVector> {
    if steps < 1 {
        return Err(Error::invalid("integrated gradients needs at least one step"));
    }
    let d = model.input_dim();
    check_dim(d, x.len())?;
    check_dim(d, baseline.len())?;
    let mut avg = vec![0.0; d];
    let mut point = vec![0.0; d];
    for k in 0..steps {
        let a = (k as f64 + 0.5) / steps as f64;
        point.iter_mut().enumerate().for_each(|(i, p)| *p = baseline[i] + a * (x[i] - baseline[i]));
        let g = model.input_gradient(&point)?;
        avg.iter_mut().zip(&g).for_each(|(s, g)| *s += g);
    }
    AttributionVector::new(avg.iter().enumerate().map(|(i, s)| (x[i] - baseline[i]) * s / steps as f64).collect())
}

/// Mean increase in squared-error loss when a single column of `eval_set`
/// is permuted, averaged over `shuffles` independent permutations.
pub fn permutation_importance(
    model: &dyn Model,
    eval_set: &Dataset,
    shuffles: usize,
    seed: u64,
) -> Result<AttributionVector> {
    if eval_set.len() < 2 {
        return Err(Error::invalid("permutation importance needs at least two rows"));
    }
    if shuffles == 0 {
        return Err(Error::invalid("shuffles must be positive"));
    }
    let d = model.input_dim();
    check_dim(d, eval_set.dim())?;
    let preds = eval_set.rows.iter().map(|r| model.forward(r)).collect::<Result<Vec<_>>>()?;
    let base: f64 =
        preds.iter().zip(&eval_set.targets).map(|(p, y)| (p - y).powi(2)).sum::<f64>() / eval_set.len() as f64;
    let mut out = Vec::with_capacity(d);
    let mut probe = vec![0.0; d];
    for j in 0..d {
        let column = eval_set.column(j);
        let mut total = 0.0;
        for s in 0..shuffles {
            let mut rng = stream(mix(seed, j as u64), Purpose::Shuffle, s as u64);
            let perm = rand::seq::index::sample(&mut rng, column.len(), column.len());
            let mut loss = 0.0;
            for (r, (row, y)) in eval_set.rows.iter().zip(&eval_set.targets).enumerate() {
                probe.copy_from_slice(row);
                probe[j] = column[perm.index(r)];
                loss += (model.forward(&probe)? - y).powi(2);
            }
            total += loss / eval_set.len() as f64 - base;
        }
        out.push(total / shuffles as f64);
    }
    AttributionVector::new(out)
}
