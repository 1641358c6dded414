//! Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any
//! failure.

use std::sync::Arc;
use std::time::{Duration, Instant};

use eri_bench::collapse::{run_collapse_curve, CurveTable, SweepSpec};
use eri_bench::fit::MlpSpec;
use eri_bench::methods::{build_explainer, Method};
use eri_bench::minimality::{run_minimality_suite, BreakParams};
use eri_bench::report::csv_string;
use eri_bench::scm::{run_scm, ScmKind};
use eri_bench::tasks::{redundancy_dataset, temporal_ar};
use eri_core::eri::{
    eri_d, eri_m, eri_r, eri_r_at_alpha, eri_report, eri_s, eri_s_with_deltas, eri_t_inputs, ContextBundle, EriConfig,
    GaussianSource, Reduction, RedundancySetup,
};
use eri_core::explainers::{exact_shapley, integrated_gradients, ShapleyValueFn};
use eri_core::metrics::{hoeffding_sample_size, DistanceKind};
use eri_core::model::{train, Activation, FnModel, Optimizer, TrainConfig};
use eri_core::rng::{stream, Purpose};
use eri_core::transforms::{default_alpha_grid, sample_perturbation, PerturbationLaw};
use eri_core::{Checkpoint, Component, Dataset, Explainer, ExplainerKind, Model, NeuralModel};
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use statrs::distribution::{ContinuousCDF, Normal};

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn gauss(rng: &mut impl Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn within(limit: Duration, start: Instant) -> Result<(), String> {
    let t = start.elapsed();
    check(t < limit, format!("took {:.1}s, limit {}s", t.as_secs_f64(), limit.as_secs()))
}

/// Linear model with five snapshots on a small AR task, plus the full
/// context every component needs.
fn context_fixture(seed: u64) -> Result<(NeuralModel, Dataset, ContextBundle), String> {
    let task = temporal_ar(200, 0.9, 0.1, seed).map_err(err)?;
    let data = task.data;
    let d = data.dim();
    let init = NeuralModel::linear(&vec![0.0; d], 0.0).map_err(err)?;
    let cfg = TrainConfig {
        learning_rate: 0.01,
        steps: 50,
        seed,
        snapshot_every: 10,
        optimizer: Optimizer::ADAM,
        batch_size: Some(32),
    };
    let cks = train(&init, &data, &cfg).map_err(err)?;
    let model = cks.last().unwrap().params.clone();
    let bundle = ContextBundle {
        x: Some(data.rows[100].clone()),
        law: Some(PerturbationLaw::new(0.1, seed)),
        redundancy: Some(RedundancySetup::new(0, 1)),
        sequence: Some(data.rows.clone()),
        checkpoints: Some(cks),
        distributions: Some((
            Arc::new(GaussianSource { mean: vec![0.0; d], sd: 1.0 }),
            Arc::new(GaussianSource { mean: vec![0.5; d], sd: 1.0 }),
        )),
    };
    Ok((model, data, bundle))
}

fn all_exactly_invariant(
    model: &dyn Model,
    e: &dyn Explainer,
    bundle: &ContextBundle,
    cfg: &EriConfig,
) -> Result<(), String> {
    let r = eri_report(model, e, &Component::ALL, bundle, cfg, None).map_err(err)?;
    check(r.components.len() == Component::ALL.len(), "missing components")?;
    for (c, s) in &r.components {
        check(
            s.drift.mean_drift == 0.0 && s.value == 1.0,
            format!("{} {}: drift {} score {}", e.name(), c.label(), s.drift.mean_drift, s.value),
        )?;
    }
    Ok(())
}

fn c1_trivial_invariance() -> Outcome {
    let start = Instant::now();
    let cfg = EriConfig { mc_samples: 200, seeds: vec![0, 1, 2], ..EriConfig::default() };
    for seed in 0..3 {
        let (model, data, bundle) = context_fixture(seed)?;
        for m in [Method::Constant, Method::MeanAttrib] {
            let e = build_explainer(m, &model, &data, seed).map_err(err)?;
            all_exactly_invariant(&model, e.as_ref(), &bundle, &cfg)?;
        }
    }
    within(Duration::from_secs(5), start)?;
    Ok(format!("S,R,T,M,D drift 0 and ERI 1 on 3 fixtures in {:.2}s", start.elapsed().as_secs_f64()))
}

fn mcir_sweep(workers: usize) -> Result<CurveTable, String> {
    let spec = SweepSpec { d: 4, alpha_grid: default_alpha_grid(), n: 5000 };
    let seeds: Vec<u64> = (0..10).collect();
    run_collapse_curve(&spec, &[Method::Mcir], &seeds, workers).map_err(err)
}

fn c2_mcir_collapse(table: &CurveTable, sweep_time: Duration) -> Outcome {
    let start = Instant::now() - sweep_time;
    let curve = table.series("MCIR");
    check(!curve.is_empty(), "no MCIR curve")?;
    for w in curve.windows(2) {
        check(w[1].1 <= w[0].1 + 0.05, format!("increase {:.3} -> {:.3} at alpha {}", w[0].1, w[1].1, w[1].0))?;
    }
    let (last_alpha, last) = *curve.last().unwrap();
    check(last_alpha == 1.0 && last <= 0.05, format!("score {last} at alpha {last_alpha}"))?;

    let data = redundancy_dataset(4, 0.9, 5000, 0).map_err(err)?;
    let model = eri_bench::fit::ridge(&data, &[0, 1, 2, 3], eri_bench::fit::RIDGE_LAMBDA)
        .and_then(|f| f.to_model())
        .map_err(err)?;
    let e = build_explainer(Method::Mcir, &model, &data, 0).map_err(err)?;
    let d = data.dim();
    let bundle = ContextBundle {
        x: Some(data.rows[0].clone()),
        law: Some(PerturbationLaw::new(0.1, 0)),
        redundancy: Some(RedundancySetup::new(0, 1)),
        sequence: Some(data.rows[..50].to_vec()),
        checkpoints: Some((0..3).map(|k| Checkpoint { step: k, params: model.clone(), train_loss: 0.0 }).collect()),
        distributions: Some((
            Arc::new(GaussianSource { mean: vec![0.0; d], sd: 1.0 }),
            Arc::new(GaussianSource { mean: vec![0.5; d], sd: 1.0 }),
        )),
    };
    let cfg = EriConfig { mc_samples: 200, seeds: vec![0, 1], ..EriConfig::default() };
    all_exactly_invariant(&model, e.as_ref(), &bundle, &cfg)?;
    within(Duration::from_secs(60), start)?;
    Ok(format!("MCIR(alpha=1) = {last:.4}, explainer invariant, {:.1}s", start.elapsed().as_secs_f64()))
}

fn c3_lipschitz_tightness() -> Outcome {
    let m = NeuralModel::linear(&[2.0], 0.0).map_err(err)?;
    let e = ExplainerKind::OutputScaled { scale: 3.0 };
    let law = PerturbationLaw::new(0.3, 11);
    let cfg = EriConfig { mc_samples: 1, seeds: vec![0], ..EriConfig::default() };
    let x = [0.7];
    let mut worst = 0.0_f64;
    for i in 0..1000 {
        let delta = sample_perturbation(&law, 1, i).map_err(err)?;
        let (_, est) = eri_s_with_deltas(&m, &e, &x, std::slice::from_ref(&delta), &cfg).map_err(err)?;
        let gap = (est.mean_drift - 6.0 * delta[0].abs()).abs();
        worst = worst.max(gap);
    }
    check(worst <= 1e-10, format!("max |drift - 6|delta|| = {worst:e}"))?;
    Ok(format!("max |drift - 6|delta|| = {worst:e} over 1000 draws"))
}

fn c4_shap_asymmetry() -> Outcome {
    let f = FnModel::new(2, |x| x[0] * x[1]);
    // background means (0, 1)
    let bg = vec![vec![-1.0, 0.0], vec![1.0, 2.0], vec![0.5, 1.5], vec![-0.5, 0.5]];
    let phi = exact_shapley(&f, &[1.0, 1.0], &ShapleyValueFn::BackgroundExpectation(bg)).map_err(err)?;
    let gap = phi[0] - phi[1];
    check((gap - 1.0).abs() <= 1e-8, format!("phi1 - phi2 = {gap}"))?;

    let mut worst = 0.0_f64;
    for k in 0..50u64 {
        let mut rng = stream(k, Purpose::Custom(41), 0);
        let mut z = || gauss(&mut rng);
        let bg: Vec<Vec<f64>> = (0..6).map(|_| vec![z(), 1.0 + z()]).collect();
        let x = [z(), z()];
        let phi = exact_shapley(&f, &x, &ShapleyValueFn::BackgroundExpectation(bg.clone())).map_err(err)?;
        let empty = bg.iter().map(|r| r[0] * r[1]).sum::<f64>() / bg.len() as f64;
        worst = worst.max((phi[0] + phi[1] - (x[0] * x[1] - empty)).abs());
    }
    check(worst <= 1e-10, format!("efficiency gap {worst:e}"))?;
    Ok(format!("phi1 - phi2 = {gap:.12}, worst efficiency gap {worst:e} on 50 instances"))
}

fn c5_hoeffding() -> Outcome {
    let start = Instant::now();
    // E = 1.5 f e_1 with f = x at x = 0, so drift = min(1.5 sigma |Z|, 1)
    let m = NeuralModel::linear(&[1.0], 0.0).map_err(err)?;
    let e = ExplainerKind::OutputScaled { scale: 1.5 };
    let sigma = 0.5;
    let s = 1.5 * sigma;
    let a = 1.0 / s;
    let phi = Normal::standard();
    let truth = s * (2.0 / std::f64::consts::PI).sqrt() * (1.0 - (-a * a / 2.0).exp()) + 2.0 * (1.0 - phi.cdf(a));
    let mut covered = 0;
    for trial in 0..1000u64 {
        let cfg = EriConfig {
            mc_samples: 200,
            seeds: vec![trial],
            distance: DistanceKind::CLAMPED_UNIT,
            ..EriConfig::default()
        };
        let (_, est) = eri_s(&m, &e, &[0.0], &PerturbationLaw::new(sigma, 99), &cfg).map_err(err)?;
        let r = est.hoeffding_radius.ok_or("no Hoeffding radius on clamped drift")?;
        if (est.mean_drift - truth).abs() <= r {
            covered += 1;
        }
    }
    let rate = covered as f64 / 1000.0;
    check(rate >= 0.93, format!("coverage {rate}"))?;
    let n = hoeffding_sample_size(0.05, 0.05).map_err(err)?;
    check(n == 738, format!("sample size {n}"))?;
    within(Duration::from_secs(60), start)?;
    Ok(format!("coverage {rate:.3}, n(0.05, 0.05) = {n}"))
}

type Trajectory = (NeuralModel, Vec<Checkpoint>, Vec<Vec<f64>>);

fn trajectory_fixture(k: u64) -> Result<Trajectory, String> {
    let mut rng = stream(k, Purpose::Data, 1);
    let rows: Vec<Vec<f64>> = (0..64).map(|_| (0..3).map(|_| gauss(&mut rng)).collect()).collect();
    let targets = rows.iter().map(|r| (r[0] - r[1]).tanh() + 0.2 * r[2]).collect();
    let data = Dataset::new(rows.clone(), targets).map_err(err)?;
    let m = NeuralModel::random(&[3, 5, 1], Activation::Tanh, k).map_err(err)?;
    let cfg = TrainConfig {
        learning_rate: 0.01,
        steps: 40,
        seed: k,
        snapshot_every: 5,
        optimizer: Optimizer::ADAM,
        batch_size: Some(16),
    };
    let cks = train(&m, &data, &cfg).map_err(err)?;
    Ok((m, cks, rows[..30].to_vec()))
}

fn rel_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1e-300)
}

fn c6_streaming_batch() -> Outcome {
    let explainers = [ExplainerKind::GradTimesInput, ExplainerKind::integrated_gradients(3)];
    for k in 0..20u64 {
        let (m, cks, seq) = trajectory_fixture(k)?;
        let x = seq[0].clone();
        let dist = [DistanceKind::L2, DistanceKind::L1, DistanceKind::CLAMPED_UNIT][k as usize % 3];
        let s_cfg = EriConfig { mc_samples: 40, seeds: vec![k, k + 1], distance: dist, ..EriConfig::default() };
        let b_cfg = EriConfig { reduction: Reduction::Batch, ..s_cfg.clone() };
        let e = &explainers[k as usize % 2];
        let law = PerturbationLaw::new(0.1, k);
        let setup = RedundancySetup::new(0, 2);
        let p = GaussianSource { mean: vec![0.0; 3], sd: 1.0 };
        let q = GaussianSource { mean: vec![0.3, 0.0, -0.1], sd: 1.0 };
        let run = |cfg: &EriConfig| -> Result<Vec<(f64, f64)>, String> {
            let out = [
                eri_s(&m, e, &x, &law, cfg),
                eri_r(&m, e, &x, &setup, cfg),
                eri_t_inputs(&m, e, &seq, cfg),
                eri_m(&cks, e, &x, cfg),
                eri_d(&m, e, &p, &q, cfg),
            ];
            out.into_iter().map(|r| r.map(|(s, d)| (s.value, d.mean_drift)).map_err(err)).collect()
        };
        let (a, b) = (run(&s_cfg)?, run(&b_cfg)?);
        for (c, (u, v)) in a.iter().zip(&b).enumerate() {
            check(
                rel_eq(u.0, v.0) && rel_eq(u.1, v.1),
                format!("fixture {k}, {}: {u:?} vs {v:?}", Component::ALL[c].label()),
            )?;
        }
    }
    Ok("5 components x 20 fixtures agree to 1e-12".into())
}

fn c7_redundancy_limit() -> Outcome {
    let w = [1.5, 1.5, -0.7, 0.3];
    let m = NeuralModel::linear(&w, 0.2).map_err(err)?;
    let mut rng = stream(31, Purpose::Data, 0);
    let rows: Vec<Vec<f64>> = (0..3000).map(|_| (0..4).map(|_| gauss(&mut rng)).collect()).collect();
    let targets: Vec<f64> = rows
        .iter()
        .map(|r| {
            let noise: f64 = gauss(&mut rng);
            m.forward(r).unwrap() + 0.1 * noise
        })
        .collect();
    let data = Dataset::new(rows, targets).map_err(err)?;
    let x = [0.8, -0.4, 1.1, 0.5];
    let setup = RedundancySetup::new(0, 1);
    let cfg = EriConfig { mc_samples: 200, seeds: vec![3, 5], ..EriConfig::default() };
    let mut worst_score = 1.0_f64;
    let mut worst_drift = 0.0_f64;
    for method in [Method::Constant, Method::MeanAttrib, Method::Mcir] {
        let e = build_explainer(method, &m, &data, 0).map_err(err)?;
        let (score, _) = eri_r(&m, e.as_ref(), &x, &setup, &cfg).map_err(err)?;
        check(score.value >= 0.95, format!("{}: ERI-R {}", method.label(), score.value))?;
        worst_score = worst_score.min(score.value);
        for alpha in [0.95, 0.96, 0.97, 0.98, 0.99, 1.0] {
            let (_, d) = eri_r_at_alpha(&m, e.as_ref(), &x, &setup, alpha, &cfg).map_err(err)?;
            check(d.mean_drift <= 0.05, format!("{} at alpha {alpha}: drift {}", method.label(), d.mean_drift))?;
            worst_drift = worst_drift.max(d.mean_drift);
        }
    }
    Ok(format!("min ERI-R {worst_score}, max drift at alpha >= 0.95 {worst_drift}"))
}

fn c8_temporal_bound() -> Outcome {
    let d = 4;
    let t = 200;
    let cfg = EriConfig { mc_samples: 1, seeds: vec![0], ..EriConfig::default() };
    let mut min_margin = f64::INFINITY;
    for k in 0..100u64 {
        let mut rng = stream(k, Purpose::Custom(8), 0);
        let a: Vec<f64> = (0..d * d).map(|_| gauss(&mut rng)).collect();
        // operator norm of E = A h
        let l_e = DMatrix::from_row_slice(d, d, &a).singular_values().max();
        let mut h = vec![0.0; d];
        let mut traj = Vec::with_capacity(t);
        for _ in 0..t {
            h = h
                .iter()
                .map(|v| {
                    let z: f64 = gauss(&mut rng);
                    0.9 * v + 0.3 * z
                })
                .collect();
            traj.push(h.clone());
        }
        let m = NeuralModel::linear(&vec![0.0; d], 0.0).map_err(err)?;
        let e = ExplainerKind::LinearMap { matrix: a, dim: d };
        let (score, _) = eri_t_inputs(&m, &e, &traj, &cfg).map_err(err)?;
        let steps: f64 =
            traj.windows(2).map(|w| w[0].iter().zip(&w[1]).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt()).sum();
        let bound = 1.0 / (1.0 + l_e * steps / (t - 1) as f64);
        check(score.value >= bound, format!("trajectory {k}: {} < {bound}", score.value))?;
        min_margin = min_margin.min(score.value - bound);
    }
    Ok(format!("bound holds on 100 trajectories, min margin {min_margin:.3e}"))
}

fn c9_minimality() -> Outcome {
    let seeds: Vec<u64> = (0..5).collect();
    let r = run_minimality_suite(&ExplainerKind::GradientOnly, &BreakParams::default(), &seeds).map_err(err)?;
    check(r.matrices.len() == 5, "expected 5 matrices")?;
    check(r.is_diagonal(), "matrix is not diagonal-fail / off-diagonal-pass")?;
    Ok("diagonal-fail / off-diagonal-pass on 5 seeds".into())
}

fn c10_scm() -> Outcome {
    let seeds: Vec<u64> = (0..10).collect();
    let mlp = MlpSpec::default();
    let nl = run_scm(ScmKind::Nonlinear, 2000, &[Method::IntegratedGradients], &seeds, &mlp).map_err(err)?;
    let s = nl.summary_for(Method::IntegratedGradients.label()).ok_or("no IG summary")?;
    let rho = s.mean_spearman.ok_or("undefined Spearman")?;
    check(rho >= 0.7, format!("IG Spearman {rho}"))?;
    check(s.strongest_first >= 9, format!("X1 first in {}/10 seeds", s.strongest_first))?;
    let lin = run_scm(ScmKind::Linear, 2000, &[Method::GradTimesInput], &seeds, &mlp).map_err(err)?;
    let mass = lin.summary_for(Method::GradTimesInput.label()).ok_or("no summary")?.mean_causal_mass;
    check(mass >= 0.77, format!("linear causal mass {mass}"))?;
    Ok(format!("IG rho {rho:.3}, X1 first {}/10, linear mass {mass:.3}", s.strongest_first))
}

fn c11_parallel(serial: &CurveTable) -> Outcome {
    let a = csv_string(&serial.rows).map_err(err)?;
    let b = csv_string(&mcir_sweep(8)?.rows).map_err(err)?;
    check(a == b, "1-worker and 8-worker CSV differ")?;
    Ok(format!("{} CSV bytes identical", a.len()))
}

fn c12_gradients() -> Outcome {
    let mut worst = 0.0_f64;
    for k in 0..100u64 {
        let mut rng = stream(k, Purpose::Custom(12), 0);
        let d = 2 + (k as usize % 5);
        let act = [Activation::Tanh, Activation::Identity][k as usize % 2];
        let m = NeuralModel::random(&[d, 6, 4, 1], act, k).map_err(err)?;
        let x: Vec<f64> = (0..d).map(|_| gauss(&mut rng)).collect();
        let g = m.input_gradient(&x).map_err(err)?;
        let h = 1e-5;
        for i in 0..d {
            let mut up = x.clone();
            up[i] += h;
            let mut dn = x.clone();
            dn[i] -= h;
            let fd = (m.forward(&up).map_err(err)? - m.forward(&dn).map_err(err)?) / (2.0 * h);
            let rel = (fd - g[i]).abs() / g[i].abs().max(1e-3);
            check(rel <= 1e-5, format!("fixture {k}, coordinate {i}: relative error {rel:e}"))?;
            worst = worst.max(rel);
        }
    }
    for k in 0..20u64 {
        let m = NeuralModel::random(&[4, 10, 1], Activation::Tanh, 500 + k).map_err(err)?;
        let mut rng = stream(k, Purpose::Custom(13), 0);
        let x: Vec<f64> = (0..4).map(|_| 1.5 * gauss(&mut rng)).collect::<Vec<f64>>();
        let base = vec![0.0; 4];
        let target = m.forward(&x).map_err(err)? - m.forward(&base).map_err(err)?;
        let mut gaps = Vec::new();
        for steps in [64, 256, 1024] {
            let ig = integrated_gradients(&m, &x, &base, steps).map_err(err)?;
            gaps.push((ig.as_slice().iter().sum::<f64>() - target).abs());
        }
        check(gaps[0] >= gaps[1] && gaps[1] >= gaps[2], format!("fixture {k}: gaps {gaps:?}"))?;
    }
    Ok(format!("max relative FD error {worst:.2e}; IG gaps monotone on 20 fixtures"))
}

fn main() {
    let mut failed = 0;
    let mut report = |n: usize, outcome: Outcome| match outcome {
        Ok(detail) => println!("criterion {n:>2} PASS  {detail}"),
        Err(detail) => {
            failed += 1;
            println!("criterion {n:>2} FAIL  {detail}");
        }
    };
    report(1, c1_trivial_invariance());
    let start = Instant::now();
    let serial = mcir_sweep(1);
    let sweep_time = start.elapsed();
    report(2, serial.as_ref().map_err(Clone::clone).and_then(|t| c2_mcir_collapse(t, sweep_time)));
    report(3, c3_lipschitz_tightness());
    report(4, c4_shap_asymmetry());
    report(5, c5_hoeffding());
    report(6, c6_streaming_batch());
    report(7, c7_redundancy_limit());
    report(8, c8_temporal_bound());
    report(9, c9_minimality());
    report(10, c10_scm());
    report(11, serial.and_then(|t| c11_parallel(&t)));
    report(12, c12_gradients());
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
    println!("all 12 criteria passed");
}
