//! Command-line entry point.

use std::ffi::OsString;
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use eri_core::eri::{eri_report, ContextBundle, EriReport, GaussianSource, RedundancySetup, SampleSource};
use eri_core::metrics::hoeffding_sample_size;
use eri_core::model::{train, Activation, Optimizer, TrainConfig};
use eri_core::transforms::PerturbationLaw;
use eri_core::{AggregatorKind, ExplainerKind, Model, NeuralModel};
use serde::Serialize;
use serde_json::json;

use crate::collapse::{run_collapse_curve, SweepSpec};
use crate::config::{BenchConfig, RawConfig};
use crate::decoupling::{run_decoupling, DecouplingSpec, DEFAULT_BASELINES};
use crate::error::{BenchError, Result};
use crate::methods::{build_explainer, Method};
use crate::minimality::{run_minimality_suite, BreakParams};
use crate::report::{emit, Manifest};
use crate::scm::{run_scm, ScmKind};
use crate::tasks::{linear_scm, nonlinear_scm, redundancy_dataset, temporal_ar, SyntheticTask};

#[derive(Debug, Parser)]
#[command(name = "eri-bench", version, about = "Explanation reliability benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Duplicate-feature attribution across the redundancy grid.
    CollapseCurve(RunArgs),
    /// Drift and top-k usefulness of trivial and gradient baselines.
    Decoupling(RunArgs),
    /// Rank agreement with structural causal model effects.
    Scm(RunArgs),
    /// Counterexample wrapper vs. axiom test matrix.
    Minimality(RunArgs),
    /// ERI components of configured explainers on a fitted fixture model.
    Score(RunArgs),
    /// Monte Carlo draws needed for accuracy eta with failure probability delta.
    SampleSize {
        #[arg(long)]
        eta: f64,
        #[arg(long)]
        delta: f64,
    },
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Config file (flat TOML); defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    /// Run with this single seed instead of the configured list.
    #[arg(long)]
    seed: Option<u64>,
}

impl RunArgs {
    fn load(&self) -> Result<RawConfig> {
        let mut raw = match &self.config {
            Some(p) => RawConfig::load(p)?,
            None => RawConfig::default(),
        };
        if let Some(dir) = &self.output_dir {
            raw.output_dir = dir.clone();
        }
        if let Some(w) = self.workers {
            raw.workers = w;
        }
        if let Some(s) = self.seed {
            raw.seeds = vec![s];
        }
        Ok(raw)
    }
}

/// Parse `argv` (program name first), run, and return the process exit code:
/// 0 on success, 2 on usage or config errors, 3 on numerical failures.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn run(command: Command) -> Result<()> {
    let (name, args) = match command {
        Command::SampleSize { eta, delta } => {
            let n = hoeffding_sample_size(eta, delta).map_err(|e| BenchError::config(e.to_string()))?;
            println!("{n}");
            return Ok(());
        }
        Command::CollapseCurve(a) => ("collapse-curve", a),
        Command::Decoupling(a) => ("decoupling", a),
        Command::Scm(a) => ("scm", a),
        Command::Minimality(a) => ("minimality", a),
        Command::Score(a) => ("score", a),
    };
    let raw = args.load()?;
    let manifest = Manifest::new(name, &raw)?;
    let written = match name {
        "collapse-curve" => {
            let cfg = raw.resolve("redundancy_sweep", &COLLAPSE_DEFAULTS)?;
            let SyntheticTask::RedundancySweep { d, alpha_grid, n } = cfg.task.clone() else {
                return Err(BenchError::config("collapse-curve needs task = \"redundancy_sweep\""));
            };
            let table =
                run_collapse_curve(&SweepSpec { d, alpha_grid, n }, &cfg.explainers, &cfg.eri.seeds, cfg.eri.workers)?;
            emit(&cfg, &manifest, "collapse_curve", &table.rows, Some(json!({ "skipped": table.skipped })))?
        }
        "decoupling" => {
            let cfg = raw.resolve("temporal_ar", &DEFAULT_BASELINES)?;
            let SyntheticTask::TemporalAr { t, phi, noise_sigma } = cfg.task else {
                return Err(BenchError::config("decoupling needs task = \"temporal_ar\""));
            };
            let spec = DecouplingSpec {
                t,
                phi,
                noise_sigma,
                perturbation_sigma: cfg.perturbation_sigma,
                top_k: cfg.top_k,
                data_seed: cfg.eri.seeds[0],
            };
            let rows = run_decoupling(&spec, &cfg.explainers, &cfg.eri)?;
            emit(&cfg, &manifest, "decoupling", &rows, None)?
        }
        "scm" => {
            let cfg = raw.resolve("nonlinear_scm", &SCM_DEFAULTS)?;
            let (kind, n) = match cfg.task {
                SyntheticTask::LinearScm { n } => (ScmKind::Linear, n),
                SyntheticTask::NonlinearScm { n } => (ScmKind::Nonlinear, n),
                _ => return Err(BenchError::config("scm needs task = \"linear_scm\" or \"nonlinear_scm\"")),
            };
            let report = run_scm(kind, n, &cfg.explainers, &cfg.eri.seeds, &cfg.mlp)?;
            emit(&cfg, &manifest, "scm", &report.rows, Some(json!({ "summary": report.summary })))?
        }
        "minimality" => {
            let cfg = raw.resolve("linear_scm", &[Method::Gradient])?;
            let base = match cfg.explainers.as_slice() {
                [Method::Gradient] => ExplainerKind::GradientOnly,
                [Method::GradTimesInput] => ExplainerKind::GradTimesInput,
                _ => {
                    return Err(BenchError::config("minimality takes one base explainer: gradient or grad_times_input"))
                }
            };
            let report = run_minimality_suite(&base, &BreakParams::default(), &cfg.eri.seeds)?;
            let extra = json!({ "matrices": report.matrices, "diagonal": report.is_diagonal() });
            let paths = emit(&cfg, &manifest, "minimality", &report.cells, Some(extra))?;
            if !report.is_diagonal() {
                return Err(BenchError::Numeric(eri_core::Error::Guard(
                    "minimality matrix is not diagonal-fail / off-diagonal-pass".into(),
                )));
            }
            paths
        }
        "score" => {
            let cfg = raw.resolve("linear_scm", &[Method::GradTimesInput])?;
            let (rows, reports) = score(&cfg)?;
            emit(&cfg, &manifest, "score", &rows, Some(json!({ "reports": reports })))?
        }
        _ => unreachable!("subcommand names are fixed above"),
    };
    for p in written {
        println!("{}", p.display());
    }
    Ok(())
}

const COLLAPSE_DEFAULTS: [Method; 7] = [
    Method::IntegratedGradients,
    Method::ExactShapley,
    Method::PermutationImportance,
    Method::Mcir,
    Method::Mi,
    Method::Hsic,
    Method::Random,
];

const SCM_DEFAULTS: [Method; 6] = [
    Method::IntegratedGradients,
    Method::GradTimesInput,
    Method::ExactShapley,
    Method::Mi,
    Method::Hsic,
    Method::Random,
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreRow {
    pub explainer: String,
    pub component: String,
    pub score: f64,
    pub mean_drift: f64,
    pub samples: usize,
    pub hoeffding_radius: Option<f64>,
    pub std_error: f64,
}

/// Fixture for `score`: an MLP trained on the configured task with five
/// snapshots, queried at the first row.
fn score(cfg: &BenchConfig) -> Result<(Vec<ScoreRow>, Vec<EriReport>)> {
    let seed = cfg.eri.seeds[0];
    let (data, sequence) = match &cfg.task {
        SyntheticTask::LinearScm { n } => (linear_scm(*n, seed)?.data, None),
        SyntheticTask::NonlinearScm { n } => (nonlinear_scm(*n, seed)?.data, None),
        SyntheticTask::RedundancySweep { d, n, .. } => (redundancy_dataset(*d, 0.5, *n, seed)?, None),
        SyntheticTask::TemporalAr { t, phi, noise_sigma } => {
            let task = temporal_ar(*t, *phi, *noise_sigma, seed)?;
            let rows = task.data.rows.clone();
            (task.data, Some(rows))
        }
    };
    let d = data.dim();
    let init = NeuralModel::random(&[d, cfg.mlp.width, 1], Activation::Tanh, seed)?;
    let train_cfg = TrainConfig {
        learning_rate: cfg.mlp.learning_rate,
        steps: cfg.mlp.steps,
        seed,
        snapshot_every: (cfg.mlp.steps / 5).max(1),
        optimizer: Optimizer::ADAM,
        batch_size: Some(cfg.mlp.batch_size),
    };
    let checkpoints = train(&init, &data, &train_cfg)?;
    let model = checkpoints.last().expect("training keeps the final snapshot").params.clone();
    let sequence = sequence.unwrap_or_else(|| data.rows.iter().take(50).cloned().collect());
    let p: Arc<dyn SampleSource> = Arc::new(GaussianSource { mean: vec![0.0; d], sd: 1.0 });
    let q: Arc<dyn SampleSource> = Arc::new(GaussianSource { mean: vec![0.2; d], sd: 1.0 });
    let bundle = ContextBundle {
        x: Some(data.rows[0].clone()),
        law: Some(PerturbationLaw::new(cfg.perturbation_sigma, seed)),
        redundancy: Some(RedundancySetup::new(0, 1)),
        sequence: Some(sequence),
        checkpoints: Some(checkpoints),
        distributions: Some((p, q)),
    };
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    for &m in &cfg.explainers {
        if let Some(reason) = m.incompatibility(model.input_dim()) {
            log::warn!("skipping {}: {reason}", m.label());
            continue;
        }
        let e = build_explainer(m, &model, &data, seed)?;
        let report =
            eri_report(&model, e.as_ref(), &cfg.components, &bundle, &cfg.eri, Some(AggregatorKind::UniformMean))?;
        for (c, s) in &report.components {
            rows.push(ScoreRow {
                explainer: m.label().into(),
                component: c.label().into(),
                score: s.value,
                mean_drift: s.drift.mean_drift,
                samples: s.drift.n,
                hoeffding_radius: s.drift.hoeffding_radius,
                std_error: s.drift.std_error,
            });
        }
        reports.push(report);
    }
    Ok((rows, reports))
}
