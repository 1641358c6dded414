//! Attribution methods selectable from a bench config, and their
//! dataset-level summaries.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use eri_core::dependence::{hsic, mcir, mutual_information, BinningSpec, KernelSpec, McirConfig, McirExplainer};
use eri_core::explainers::{ShapleyValueFn, MAX_SHAPLEY_DIM};
use eri_core::{AttributionVector, Dataset, EvalContext, Explainer, ExplainerKind, Model};
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};
use crate::local::LocalDependence;

/// Rows used as Shapley background.
pub const SHAPLEY_BACKGROUND: usize = 32;
/// Rows averaged for dataset-level attribution summaries.
pub const SUMMARY_ROWS: usize = 200;
/// Rows used by kernel statistics (quadratic cost).
pub const HSIC_ROWS: usize = 1000;
/// Shuffles per feature for permutation importance.
pub const PI_SHUFFLES: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    GradTimesInput,
    Gradient,
    IntegratedGradients,
    Occlusion,
    PermutationImportance,
    ExactShapley,
    Random,
    Constant,
    MeanAttrib,
    LabelOnly,
    Mcir,
    Mi,
    Hsic,
    LocalMi,
    LocalHsic,
}

impl Method {
    pub const ALL: [Method; 15] = [
        Method::GradTimesInput,
        Method::Gradient,
        Method::IntegratedGradients,
        Method::Occlusion,
        Method::PermutationImportance,
        Method::ExactShapley,
        Method::Random,
        Method::Constant,
        Method::MeanAttrib,
        Method::LabelOnly,
        Method::Mcir,
        Method::Mi,
        Method::Hsic,
        Method::LocalMi,
        Method::LocalHsic,
    ];

    pub fn key(self) -> &'static str {
        match self {
            Method::GradTimesInput => "grad_times_input",
            Method::Gradient => "gradient",
            Method::IntegratedGradients => "integrated_gradients",
            Method::Occlusion => "occlusion",
            Method::PermutationImportance => "permutation_importance",
            Method::ExactShapley => "exact_shapley",
            Method::Random => "random",
            Method::Constant => "constant",
            Method::MeanAttrib => "mean_attrib",
            Method::LabelOnly => "label_only",
            Method::Mcir => "mcir",
            Method::Mi => "mi",
            Method::Hsic => "hsic",
            Method::LocalMi => "local_mi",
            Method::LocalHsic => "local_hsic",
        }
    }

    /// Display name used in reports.
    pub fn label(self) -> &'static str {
        match self {
            Method::GradTimesInput => "GradTimesInput",
            Method::Gradient => "Gradient",
            Method::IntegratedGradients => "IG",
            Method::Occlusion => "Occlusion",
            Method::PermutationImportance => "Permutation",
            Method::ExactShapley => "SHAP",
            Method::Random => "Random",
            Method::Constant => "Constant",
            Method::MeanAttrib => "MeanAttrib",
            Method::LabelOnly => "LabelOnly",
            Method::Mcir => "MCIR",
            Method::Mi => "MI",
            Method::Hsic => "HSIC",
            Method::LocalMi => "LocalMI",
            Method::LocalHsic => "LocalHSIC",
        }
    }

    /// Why the method cannot run on a `d`-dimensional task, if it cannot.
    pub fn incompatibility(self, d: usize) -> Option<String> {
        match self {
            Method::ExactShapley if d > MAX_SHAPLEY_DIM => {
                Some(format!("exact Shapley enumerates 2^{d} coalitions (limit d <= {MAX_SHAPLEY_DIM})"))
            }
            Method::Mcir if d < 2 => Some("MCIR needs at least two features".into()),
            _ => None,
        }
    }

    /// Dataset-level methods give one vector for the whole task.
    pub fn is_global(self) -> bool {
        matches!(self, Method::Mcir | Method::Mi | Method::Hsic)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for Method {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase().replace('-', "_");
        Method::ALL
            .into_iter()
            .find(|m| m.key() == s || m.label().to_ascii_lowercase() == s)
            .ok_or_else(|| BenchError::config(format!("unknown explainer '{s}'")))
    }
}

fn head(rows: &[Vec<f64>], k: usize) -> Vec<Vec<f64>> {
    rows.iter().take(k).cloned().collect()
}

fn subsample(data: &Dataset, k: usize) -> Result<Dataset> {
    let k = k.min(data.len());
    Ok(Dataset::new(data.rows[..k].to_vec(), data.targets[..k].to_vec())?)
}

/// Feature-wise dependence between each column and the target.
pub fn dependence_vector(method: Method, data: &Dataset) -> Result<Vec<f64>> {
    match method {
        Method::Mcir => Ok(mcir(data, &McirConfig::default())?.into_vec()),
        Method::Mi => {
            let spec = BinningSpec::default();
            (0..data.dim()).map(|j| Ok(mutual_information(&data.column(j), &data.targets, &spec)?)).collect()
        }
        Method::Hsic => {
            let sub = subsample(data, HSIC_ROWS)?;
            let spec = KernelSpec::default();
            (0..sub.dim()).map(|j| Ok(hsic(&sub.column(j), &sub.targets, &spec)?)).collect()
        }
        other => Err(BenchError::config(format!("{} is not a dependence baseline", other.label()))),
    }
}

/// Build an instance-level explainer for `method` on a fitted model.
///
/// `reference` supplies evaluation data (permutation importance), Shapley
/// background and the rows behind MeanAttrib.
pub fn build_explainer(
    method: Method,
    model: &dyn Model,
    reference: &Dataset,
    seed: u64,
) -> Result<Box<dyn Explainer>> {
    let d = model.input_dim();
    if let Some(reason) = method.incompatibility(d) {
        return Err(BenchError::config(reason));
    }
    let e: Box<dyn Explainer> = match method {
        Method::GradTimesInput => Box::new(ExplainerKind::GradTimesInput),
        Method::Gradient => Box::new(ExplainerKind::GradientOnly),
        Method::IntegratedGradients => Box::new(ExplainerKind::integrated_gradients(d)),
        Method::Occlusion => Box::new(ExplainerKind::Occlusion { baseline: vec![0.0; d] }),
        Method::PermutationImportance => Box::new(ExplainerKind::PermutationImportance {
            shuffles: PI_SHUFFLES,
            eval_set: Arc::new(subsample(reference, 1000)?),
            seed,
        }),
        Method::ExactShapley => Box::new(ExplainerKind::ExactShapley(ShapleyValueFn::BackgroundExpectation(head(
            &reference.rows,
            SHAPLEY_BACKGROUND,
        )))),
        Method::Random => Box::new(ExplainerKind::Random { seed }),
        // deliberately uninformative: weight grows with the feature index
        Method::Constant => Box::new(ExplainerKind::Constant((0..d).map(|i| (i + 1) as f64 / d as f64).collect())),
        Method::MeanAttrib => {
            let rows = head(&reference.rows, SUMMARY_ROWS);
            let summary = mean_abs_attribution(&ExplainerKind::GradTimesInput, model, &rows)?;
            Box::new(ExplainerKind::MeanAttrib(summary))
        }
        Method::LabelOnly => Box::new(ExplainerKind::LabelOnly),
        Method::Mcir => {
            Box::new(McirExplainer::from_scores(AttributionVector::new(dependence_vector(method, reference)?)?))
        }
        Method::Mi | Method::Hsic => Box::new(ExplainerKind::Constant(dependence_vector(method, reference)?)),
        Method::LocalMi => Box::new(LocalDependence::mi(seed)),
        Method::LocalHsic => Box::new(LocalDependence::hsic(seed)),
    };
    Ok(e)
}

/// Mean absolute attribution over `rows`.
pub fn mean_abs_attribution(explainer: &dyn Explainer, model: &dyn Model, rows: &[Vec<f64>]) -> Result<Vec<f64>> {
    if rows.is_empty() {
        return Err(BenchError::config("no rows to summarize"));
    }
    let ctx = EvalContext::default();
    let mut sum = vec![0.0; model.input_dim()];
    for r in rows {
        let e = explainer.explain(model, r, &ctx)?;
        sum.iter_mut().zip(e.as_slice()).for_each(|(s, v)| *s += v.abs());
    }
    Ok(sum.into_iter().map(|s| s / rows.len() as f64).collect())
}

/// Dataset-level importance of each feature: the dependence vector for
/// global methods, otherwise mean |E(x)| over the first rows of `data`.
pub fn global_importance(method: Method, model: &dyn Model, data: &Dataset, seed: u64) -> Result<Vec<f64>> {
    if method.is_global() {
        return dependence_vector(method, data);
    }
    if method == Method::PermutationImportance {
        // already a dataset-level quantity
        let e = build_explainer(method, model, data, seed)?;
        return Ok(e.explain(model, &data.rows[0], &EvalContext::default())?.into_vec());
    }
    let e = build_explainer(method, model, data, seed)?;
    mean_abs_attribution(e.as_ref(), model, &head(&data.rows, SUMMARY_ROWS))
}

/// Importance of a single feature; avoids computing pairwise dependence
/// statistics for the other columns.
pub fn feature_importance(method: Method, model: &dyn Model, data: &Dataset, seed: u64, feature: usize) -> Result<f64> {
    if feature >= data.dim() {
        return Err(BenchError::config(format!("feature {feature} out of range")));
    }
    match method {
        Method::Mi => Ok(mutual_information(&data.column(feature), &data.targets, &BinningSpec::default())?),
        Method::Hsic => {
            let sub = subsample(data, HSIC_ROWS)?;
            Ok(hsic(&sub.column(feature), &sub.targets, &KernelSpec::default())?)
        }
        _ => Ok(global_importance(method, model, data, seed)?[feature]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keys_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.key().parse::<Method>().unwrap(), m);
            assert_eq!(m.label().parse::<Method>().unwrap(), m);
        }
        assert!("deeplift".parse::<Method>().is_err());
    }

    #[test]
    fn shapley_incompatible_in_high_dimension() {
        assert!(Method::ExactShapley.incompatibility(21).is_some());
        assert!(Method::ExactShapley.incompatibility(4).is_none());
    }
}
