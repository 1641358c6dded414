//! Flat key-value bench configuration (TOML syntax).
//!
//! Every key is optional; unknown keys are rejected.

use std::path::{Path, PathBuf};

use eri_core::eri::{EriConfig, Reduction};
use eri_core::transforms::default_alpha_grid;
use eri_core::{Component, DistanceKind};
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};
use crate::fit::MlpSpec;
use crate::methods::Method;
use crate::tasks::SyntheticTask;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// The config file as written, with defaults filled in. Embedded verbatim in
/// every report manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RawConfig {
    /// `redundancy_sweep`, `linear_scm`, `nonlinear_scm` or `temporal_ar`;
    /// each subcommand has its own default.
    pub task: Option<String>,
    pub n: usize,
    pub d: usize,
    pub alpha_grid: Vec<f64>,
    pub t: usize,
    pub phi: f64,
    pub noise_sigma: f64,
    /// Method keys; each subcommand has its own default set.
    pub explainers: Option<Vec<String>>,
    pub seeds: Vec<u64>,
    pub mc_samples: usize,
    /// `l1`, `l2`, `linf`, `cosine` or `clamped_l2`.
    pub distance: String,
    pub clamp: f64,
    pub normalize: bool,
    pub confidence: f64,
    pub workers: usize,
    /// `streaming` or `batch`.
    pub reduction: String,
    pub perturbation_sigma: f64,
    pub top_k: usize,
    pub mlp_width: usize,
    pub mlp_steps: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    /// ERI components for `score`.
    pub components: Vec<String>,
    /// Where reports go; not part of the experiment, so left out of the
    /// manifest and its hash.
    #[serde(skip_serializing)]
    pub output_dir: PathBuf,
    pub formats: Vec<Format>,
}

impl Default for RawConfig {
    fn default() -> Self {
        let mlp = MlpSpec::default();
        Self {
            task: None,
            n: 5000,
            d: 4,
            alpha_grid: default_alpha_grid(),
            t: 200,
            phi: 0.9,
            noise_sigma: 0.1,
            explainers: None,
            seeds: (0..10).collect(),
            mc_samples: 500,
            distance: "l2".into(),
            clamp: 1.0,
            normalize: false,
            confidence: 0.95,
            workers: 1,
            reduction: "streaming".into(),
            perturbation_sigma: 0.1,
            top_k: 2,
            mlp_width: mlp.width,
            mlp_steps: mlp.steps,
            learning_rate: mlp.learning_rate,
            batch_size: mlp.batch_size,
            components: Component::ALL.iter().map(|c| c.label().to_string()).collect(),
            output_dir: PathBuf::from("eri-out"),
            formats: vec![Format::Csv, Format::Json],
        }
    }
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| BenchError::config(format!("config: {}", e.message())))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BenchError::config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Validated view; `default_task` and `default_explainers` apply when
    /// the file does not name them.
    pub fn resolve(&self, default_task: &str, default_explainers: &[Method]) -> Result<BenchConfig> {
        let task = match self.task.as_deref().unwrap_or(default_task) {
            "redundancy_sweep" => {
                SyntheticTask::RedundancySweep { d: self.d, alpha_grid: self.alpha_grid.clone(), n: self.n }
            }
            "linear_scm" => SyntheticTask::LinearScm { n: self.n },
            "nonlinear_scm" => SyntheticTask::NonlinearScm { n: self.n },
            "temporal_ar" => SyntheticTask::TemporalAr { t: self.t, phi: self.phi, noise_sigma: self.noise_sigma },
            other => return Err(BenchError::config(format!("unknown task '{other}'"))),
        };
        task.validate()?;
        let explainers = match &self.explainers {
            Some(keys) => keys.iter().map(|k| k.parse()).collect::<Result<Vec<Method>>>()?,
            None => default_explainers.to_vec(),
        };
        if explainers.is_empty() {
            return Err(BenchError::config("explainer list is empty"));
        }
        let distance = match self.distance.as_str() {
            "l1" => DistanceKind::L1,
            "l2" => DistanceKind::L2,
            "linf" => DistanceKind::Linf,
            "cosine" => DistanceKind::Cosine,
            "clamped_l2" => DistanceKind::ClampedL2 { cap: self.clamp },
            other => return Err(BenchError::config(format!("unknown distance '{other}'"))),
        };
        let reduction = match self.reduction.as_str() {
            "streaming" => Reduction::Streaming,
            "batch" => Reduction::Batch,
            other => return Err(BenchError::config(format!("unknown reduction '{other}'"))),
        };
        let eri = EriConfig {
            distance,
            mc_samples: self.mc_samples,
            seeds: self.seeds.clone(),
            normalize: self.normalize,
            confidence: self.confidence,
            workers: self.workers,
            reduction,
        };
        eri.validate().map_err(|e| BenchError::config(e.to_string()))?;
        if self.formats.is_empty() {
            return Err(BenchError::config("formats must name at least one of csv, json"));
        }
        if !(self.perturbation_sigma >= 0.0 && self.perturbation_sigma.is_finite()) {
            return Err(BenchError::config("perturbation_sigma must be finite and >= 0"));
        }
        if self.mlp_width == 0 || self.mlp_steps == 0 || self.batch_size == 0 {
            return Err(BenchError::config("mlp_width, mlp_steps and batch_size must be positive"));
        }
        let components = self
            .components
            .iter()
            .map(|c| c.parse::<Component>().map_err(|e| BenchError::config(e.to_string())))
            .collect::<Result<Vec<_>>>()?;
        Ok(BenchConfig {
            task,
            explainers,
            eri,
            output_dir: self.output_dir.clone(),
            formats: self.formats.clone(),
            perturbation_sigma: self.perturbation_sigma,
            top_k: self.top_k,
            mlp: MlpSpec {
                width: self.mlp_width,
                steps: self.mlp_steps,
                learning_rate: self.learning_rate,
                batch_size: self.batch_size,
            },
            components,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub task: SyntheticTask,
    pub explainers: Vec<Method>,
    pub eri: EriConfig,
    pub output_dir: PathBuf,
    pub formats: Vec<Format>,
    pub perturbation_sigma: f64,
    pub top_k: usize,
    pub mlp: MlpSpec,
    pub components: Vec<Component>,
}

impl BenchConfig {
    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_overrides() {
        let raw =
            RawConfig::parse("n = 1000\nseeds = [7]\nexplainers = [\"mcir\", \"MI\"]\ndistance = \"clamped_l2\"\n")
                .unwrap();
        let cfg = raw.resolve("redundancy_sweep", &[]).unwrap();
        assert_eq!(cfg.explainers, vec![Method::Mcir, Method::Mi]);
        assert_eq!(cfg.eri.seeds, vec![7]);
        assert_eq!(cfg.eri.distance, DistanceKind::CLAMPED_UNIT);
        assert!(matches!(cfg.task, SyntheticTask::RedundancySweep { n: 1000, d: 4, .. }));
        assert_eq!(cfg.formats, vec![Format::Csv, Format::Json]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(RawConfig::parse("bogus = 1").is_err());
        assert!(RawConfig::parse("n = \"many\"").is_err());
        let bad = |text: &str| RawConfig::parse(text).unwrap().resolve("linear_scm", &[Method::Gradient]).is_err();
        assert!(bad("task = \"cifar\""));
        assert!(bad("explainers = [\"deeplift\"]"));
        assert!(bad("seeds = []"));
        assert!(bad("formats = []"));
        assert!(bad("confidence = 1.5"));
        assert!(bad("components = [\"Q\"]"));
        assert!(bad("n = 10"));
    }
}
