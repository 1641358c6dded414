//! Causal usefulness: do attribution rankings follow the true effect sizes
//! of a structural causal model?

use eri_core::rng::mix;
use eri_core::{ExplainerKind, NeuralModel};
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};
use crate::fit::{fit_mlp, MlpSpec};
use crate::methods::{global_importance, mean_abs_attribution, Method, SUMMARY_ROWS};
use crate::stats::{kendall_tau_b, mean, spearman, top_k};
use crate::tasks::{linear_scm, nonlinear_scm, ScmData, LINEAR_SCM_EFFECTS, NONLINEAR_SCM_EFFECTS};

/// Repetitions averaged for the random explainer.
pub const RANDOM_REPS: u64 = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScmKind {
    Linear,
    Nonlinear,
}

impl ScmKind {
    pub fn label(self) -> &'static str {
        match self {
            ScmKind::Linear => "linear_scm",
            ScmKind::Nonlinear => "nonlinear_scm",
        }
    }

    fn generate(self, n: usize, seed: u64) -> Result<ScmData> {
        match self {
            ScmKind::Linear => linear_scm(n, seed),
            ScmKind::Nonlinear => nonlinear_scm(n, seed),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScmRow {
    pub task: String,
    pub explainer: String,
    pub seed: u64,
    /// `None` when the attribution is constant across features.
    pub spearman: Option<f64>,
    pub kendall: Option<f64>,
    /// 1-based index of the most important feature.
    pub top_feature: usize,
    /// Share of total importance on features with a causal path to `Y`.
    pub causal_mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScmSummary {
    pub task: String,
    pub explainer: String,
    pub mean_spearman: Option<f64>,
    pub mean_kendall: Option<f64>,
    /// Seeds on which the strongest true cause ranked first.
    pub strongest_first: usize,
    pub seeds: usize,
    pub mean_causal_mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScmReport {
    pub rows: Vec<ScmRow>,
    pub summary: Vec<ScmSummary>,
}

impl ScmReport {
    pub fn summary_for(&self, explainer: &str) -> Option<&ScmSummary> {
        self.summary.iter().find(|s| s.explainer == explainer)
    }
}

fn mass_on(importance: &[f64], causal: &[usize]) -> f64 {
    let total: f64 = importance.iter().sum();
    if total == 0.0 {
        return 0.0;
    }
    causal.iter().map(|&j| importance[j]).sum::<f64>() / total
}

fn defined_mean(v: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let vals: Vec<f64> = v.flatten().collect();
    (!vals.is_empty()).then(|| mean(&vals))
}

fn row_for(kind: ScmKind, m: Method, seed: u64, importance: &[f64], scm: &ScmData) -> ScmRow {
    ScmRow {
        task: kind.label().into(),
        explainer: m.label().into(),
        seed,
        spearman: spearman(importance, &scm.effects),
        kendall: kendall_tau_b(importance, &scm.effects),
        top_feature: top_k(importance, 1)[0] + 1,
        causal_mass: mass_on(importance, &scm.causal),
    }
}

/// Rank agreement per (explainer, seed) plus a per-explainer summary. A
/// width-`mlp.width` MLP is trained per seed; the random explainer's
/// correlations are averaged over [`RANDOM_REPS`] draws.
pub fn run_scm(kind: ScmKind, n: usize, methods: &[Method], seeds: &[u64], mlp: &MlpSpec) -> Result<ScmReport> {
    if seeds.is_empty() {
        return Err(BenchError::config("SCM run needs at least one seed"));
    }
    let mut rows = Vec::new();
    for &seed in seeds {
        let scm = kind.generate(n, seed)?;
        let model: NeuralModel = fit_mlp(&scm.data, mlp, seed)?;
        for &m in methods {
            if let Some(reason) = m.incompatibility(scm.data.dim()) {
                log::warn!("skipping {}: {reason}", m.label());
                continue;
            }
            if m == Method::Random {
                let summary_rows: Vec<Vec<f64>> = scm.data.rows.iter().take(SUMMARY_ROWS).cloned().collect();
                let reps = (0..RANDOM_REPS)
                    .map(|r| {
                        let e = ExplainerKind::Random { seed: mix(seed, r) };
                        let imp = mean_abs_attribution(&e, &model, &summary_rows)?;
                        Ok(row_for(kind, m, seed, &imp, &scm))
                    })
                    .collect::<Result<Vec<_>>>()?;
                rows.push(ScmRow {
                    spearman: defined_mean(reps.iter().map(|r| r.spearman)),
                    kendall: defined_mean(reps.iter().map(|r| r.kendall)),
                    causal_mass: mean(&reps.iter().map(|r| r.causal_mass).collect::<Vec<_>>()),
                    ..reps[0].clone()
                });
                continue;
            }
            let imp = global_importance(m, &model, &scm.data, seed)?;
            rows.push(row_for(kind, m, seed, &imp, &scm));
        }
    }

    let mut summary = Vec::new();
    let mut labels: Vec<&str> = Vec::new();
    for r in &rows {
        if !labels.contains(&r.explainer.as_str()) {
            labels.push(&r.explainer);
        }
    }
    let effects: &[f64] = match kind {
        ScmKind::Linear => &LINEAR_SCM_EFFECTS,
        ScmKind::Nonlinear => &NONLINEAR_SCM_EFFECTS,
    };
    let strongest = top_k(effects, 1)[0] + 1;
    for label in labels {
        let mine: Vec<&ScmRow> = rows.iter().filter(|r| r.explainer == label).collect();
        summary.push(ScmSummary {
            task: kind.label().into(),
            explainer: label.into(),
            mean_spearman: defined_mean(mine.iter().map(|r| r.spearman)),
            mean_kendall: defined_mean(mine.iter().map(|r| r.kendall)),
            strongest_first: mine.iter().filter(|r| r.top_feature == strongest).count(),
            seeds: mine.len(),
            mean_causal_mass: mean(&mine.iter().map(|r| r.causal_mass).collect::<Vec<_>>()),
        });
    }
    Ok(ScmReport { rows, summary })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mass_and_undefined_correlation() {
        assert_eq!(mass_on(&[1.0, 1.0, 2.0], &[0, 1]), 0.5);
        assert!((defined_mean([None, Some(0.2), Some(0.4)].into_iter()).unwrap() - 0.3).abs() < 1e-12);
        assert_eq!(defined_mean([None, None].into_iter()), None);
    }

    #[test]
    fn linear_scm_gradient_mass() {
        let spec = MlpSpec { steps: 400, ..MlpSpec::default() };
        let r = run_scm(ScmKind::Linear, 1000, &[Method::GradTimesInput, Method::Constant], &[3], &spec).unwrap();
        let s = r.summary_for("GradTimesInput").unwrap();
        assert!(s.mean_causal_mass > 0.85, "{s:?}");
        assert_eq!(s.strongest_first, 1);
    }
}
