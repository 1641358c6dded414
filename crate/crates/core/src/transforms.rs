//! Transformation families behind the ERI components: Gaussian input
//! perturbations, redundancy injection, the collapse operator on inputs and
//! explanations, and explainer wrappers that each break one reliability axiom.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{check_dim, Error, Result};
use crate::explainers::{EvalContext, Explainer};
use crate::metrics::AttributionVector;
use crate::model::Model;
use crate::rng::{stream, Purpose};

/// Redundancy levels swept by default: `0.00, 0.05, ..., 1.00`.
pub fn default_alpha_grid() -> Vec<f64> {
    (0..=20).map(|k| k as f64 / 20.0).collect()
}

const MAX_REJECTIONS: usize = 100_000;

/// Isotropic Gaussian perturbations `N(0, sigma^2 I)`, optionally truncated
/// to `||delta|| <= epsilon_cap` by rejection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationLaw {
    pub sigma: f64,
    pub epsilon_cap: Option<f64>,
    pub seed: u64,
}

impl PerturbationLaw {
    pub fn new(sigma: f64, seed: u64) -> Self {
        Self { sigma, epsilon_cap: None, seed }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::invalid(format!("sigma must be finite and >= 0, got {}", self.sigma)));
        }
        if let Some(cap) = self.epsilon_cap {
            if !(cap > 0.0 && cap.is_finite()) {
                return Err(Error::invalid("epsilon cap must be positive"));
            }
        }
        Ok(())
    }

    /// `E||delta||` of the untruncated law in `d` dimensions.
    pub fn expected_norm(&self, d: usize) -> f64 {
        if d == 0 || self.sigma == 0.0 {
            return 0.0;
        }
        let half = d as f64 / 2.0;
        self.sigma * std::f64::consts::SQRT_2 * (ln_gamma(half + 0.5) - ln_gamma(half)).exp()
    }
}

/// Draw number `index` of the law, deterministic in `(seed, index)`.
pub fn sample_perturbation(law: &PerturbationLaw, d: usize, index: u64) -> Result<Vec<f64>> {
    law.validate()?;
    if law.sigma == 0.0 {
        return Ok(vec![0.0; d]);
    }
    let mut rng = stream(law.seed, Purpose::Perturbation, index);
    for _ in 0..MAX_REJECTIONS {
        let delta: Vec<f64> =
            (0..d).map(|_| law.sigma * Distribution::<f64>::sample(&StandardNormal, &mut rng)).collect();
        match law.epsilon_cap {
            Some(cap) if delta.iter().map(|v| v * v).sum::<f64>().sqrt() > cap => continue,
            _ => return Ok(delta),
        }
    }
    Err(Error::invalid("epsilon cap too small for sigma: rejection sampling did not terminate"))
}

/// Makes feature `target` an `alpha`-controlled near-copy of `source`:
/// `x_target = alpha x_source + sqrt(1 - alpha^2) Z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RedundancyInjection {
    pub source: usize,
    pub target: usize,
    pub alpha: f64,
    pub noise_seed: u64,
}

impl RedundancyInjection {
    fn validate(&self, d: usize) -> Result<()> {
        if self.source == self.target {
            return Err(Error::invalid("redundancy source and target must differ"));
        }
        if self.source >= d || self.target >= d {
            return Err(Error::invalid(format!("feature index out of range for d = {d}")));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::invalid(format!("alpha must lie in [0,1], got {}", self.alpha)));
        }
        Ok(())
    }

    /// The standard normal `Z` used by this injection.
    pub fn noise(&self) -> f64 {
        StandardNormal.sample(&mut stream(self.noise_seed, Purpose::Redundancy, 0))
    }
}

pub fn inject_redundancy(x: &[f64], inj: &RedundancyInjection) -> Result<Vec<f64>> {
    inj.validate(x.len())?;
    let mut out = x.to_vec();
    out[inj.target] = redundant_value(x[inj.source], inj.alpha, inj.noise());
    Ok(out)
}

#[inline]
pub fn redundant_value(source: f64, alpha: f64, z: f64) -> f64 {
    alpha * source + (1.0 - alpha * alpha).max(0.0).sqrt() * z
}

/// Collapse of the redundant pair `(keep, remove)` at redundancy `alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollapsePair {
    pub keep: usize,
    pub remove: usize,
    pub alpha: f64,
}

impl CollapsePair {
    pub fn validate(&self, d: usize) -> Result<()> {
        if self.keep == self.remove {
            return Err(Error::invalid("collapse pair indices must differ"));
        }
        if self.keep >= d || self.remove >= d {
            return Err(Error::invalid(format!("collapse index out of range for d = {d}")));
        }
        if d < 2 {
            return Err(Error::invalid("cannot collapse a one-dimensional input"));
        }
        Ok(())
    }

    /// Index of the kept feature after the removed one is deleted.
    pub fn kept_index_after(&self) -> usize {
        if self.keep > self.remove {
            self.keep - 1
        } else {
            self.keep
        }
    }
}

/// Removes coordinate `remove` and rescales `keep` by `1 + alpha`.
pub fn collapse_input(x: &[f64], pair: &CollapsePair) -> Result<Vec<f64>> {
    pair.validate(x.len())?;
    Ok(x.iter()
        .enumerate()
        .filter(|(k, _)| *k != pair.remove)
        .map(|(k, v)| if k == pair.keep { v * (1.0 + pair.alpha) } else { *v })
        .collect())
}

/// Coordinate deletion `P_{-j}` on an explanation.
pub fn collapse_explanation(e: &AttributionVector, remove: usize) -> Result<AttributionVector> {
    remove_coordinate(e.as_slice(), remove).and_then(AttributionVector::new)
}

pub(crate) fn remove_coordinate(v: &[f64], remove: usize) -> Result<Vec<f64>> {
    if v.len() < 2 {
        return Err(Error::invalid("cannot remove the only coordinate"));
    }
    if remove >= v.len() {
        return Err(Error::invalid(format!("coordinate {remove} out of range")));
    }
    Ok(v.iter().enumerate().filter(|(k, _)| *k != remove).map(|(_, v)| *v).collect())
}

/// Merge coordinates `keep` and `remove` into their midpoint, dropping `remove`.
pub fn midpoint_merge(v: &[f64], pair: &CollapsePair) -> Result<Vec<f64>> {
    pair.validate(v.len())?;
    let mid = 0.5 * (v[pair.keep] + v[pair.remove]);
    let mut out = remove_coordinate(v, pair.remove)?;
    out[pair.kept_index_after()] = mid;
    Ok(out)
}

/// Max-metric distance between `e` and its midpoint collapse on `(i, j)`,
/// with the merged value written to both coordinates. Equals `|e_i - e_j| / 2`.
pub fn midpoint_collapse_drift(e: &AttributionVector, i: usize, j: usize) -> Result<f64> {
    let d = e.len();
    if i == j || i >= d || j >= d {
        return Err(Error::invalid("midpoint collapse needs two distinct valid indices"));
    }
    let mid = 0.5 * (e[i] + e[j]);
    let mut collapsed = e.as_slice().to_vec();
    collapsed[i] = mid;
    collapsed[j] = mid;
    crate::metrics::distance_slices(e.as_slice(), &collapsed, crate::metrics::DistanceKind::Linf)
}

/// Which axiom a counterexample wrapper breaks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BreakVariant {
    /// `+ K sign(delta)` for the perturbation that produced the query.
    A1 { k: f64 },
    /// `+ eta v`, a constant non-symmetric offset.
    A2 { eta: f64, v: Vec<f64> },
    /// `+ (-1)^t u` at checkpoint `t`.
    A3 { u: Vec<f64> },
    /// `+ w` iff the active perturbation law has `E||delta|| > tau`.
    A4 { tau: f64, w: Vec<f64> },
}

impl BreakVariant {
    pub fn axiom(&self) -> usize {
        match self {
            BreakVariant::A1 { .. } => 1,
            BreakVariant::A2 { .. } => 2,
            BreakVariant::A3 { .. } => 3,
            BreakVariant::A4 { .. } => 4,
        }
    }

    fn offset_len(&self) -> Option<usize> {
        match self {
            BreakVariant::A1 { .. } => None,
            BreakVariant::A2 { v, .. } => Some(v.len()),
            BreakVariant::A3 { u } => Some(u.len()),
            BreakVariant::A4 { w, .. } => Some(w.len()),
        }
    }
}

/// A base explainer modified to violate exactly one axiom.
pub struct CounterexampleWrap {
    pub base: Box<dyn Explainer>,
    pub variant: BreakVariant,
}

/// Build the wrapped explainer, checking the variant's parameters.
pub fn wrap_counterexample(base: Box<dyn Explainer>, variant: BreakVariant) -> Result<CounterexampleWrap> {
    let positive = |name: &str, v: f64| {
        if v > 0.0 && v.is_finite() {
            Ok(())
        } else {
            Err(Error::invalid(format!("{name} must be positive")))
        }
    };
    match &variant {
        BreakVariant::A1 { k } => positive("K", *k)?,
        BreakVariant::A2 { eta, .. } => positive("eta", *eta)?,
        BreakVariant::A3 { .. } => {}
        BreakVariant::A4 { tau, .. } => positive("tau", *tau)?,
    }
    Ok(CounterexampleWrap { base, variant })
}

impl Explainer for CounterexampleWrap {
    fn name(&self) -> String {
        format!("A{}Break({})", self.variant.axiom(), self.base.name())
    }

    fn explain(&self, model: &dyn Model, x: &[f64], ctx: &EvalContext<'_>) -> Result<AttributionVector> {
        let base = self.base.explain(model, x, ctx)?;
        let mut out = base.into_vec();
        if let Some(len) = self.variant.offset_len() {
            check_dim(out.len(), len)?;
        }
        match &self.variant {
            BreakVariant::A1 { k } => {
                if let Some(delta) = ctx.delta {
                    check_dim(out.len(), delta.len())?;
                    for (o, dl) in out.iter_mut().zip(delta) {
                        *o += k * sign(*dl);
                    }
                }
            }
            BreakVariant::A2 { eta, v } => {
                out.iter_mut().zip(v).for_each(|(o, vi)| *o += eta * vi);
            }
            BreakVariant::A3 { u } => {
                let t = ctx
                    .checkpoint
                    .ok_or_else(|| Error::MissingContext("A3 wrapper needs the checkpoint index".into()))?;
                let s = if t % 2 == 0 { 1.0 } else { -1.0 };
                out.iter_mut().zip(u).for_each(|(o, ui)| *o += s * ui);
            }
            BreakVariant::A4 { tau, w } => {
                let norm = ctx.law_mean_norm.ok_or_else(|| {
                    Error::MissingContext("A4 wrapper needs the perturbation law's expected norm".into())
                })?;
                if norm > *tau {
                    out.iter_mut().zip(w).for_each(|(o, wi)| *o += wi);
                }
            }
        }
        AttributionVector::new(out)
    }

    // Offsets tied to feature identity merge to their midpoint on collapse.
    fn collapse(&self, pair: &CollapsePair) -> Result<Box<dyn Explainer>> {
        let base = self.base.collapse(pair)?;
        let variant = match &self.variant {
            BreakVariant::A1 { k } => BreakVariant::A1 { k: *k },
            BreakVariant::A2 { eta, v } => BreakVariant::A2 { eta: *eta, v: midpoint_merge(v, pair)? },
            BreakVariant::A3 { u } => BreakVariant::A3 { u: midpoint_merge(u, pair)? },
            BreakVariant::A4 { tau, w } => BreakVariant::A4 { tau: *tau, w: midpoint_merge(w, pair)? },
        };
        Ok(Box::new(CounterexampleWrap { base, variant }))
    }
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Uniform draw in `[lo, 1)` from the redundancy stream.
pub(crate) fn sample_alpha(seed: u64, index: u64, lo: f64) -> f64 {
    let u: f64 = stream(seed, Purpose::Redundancy, index).random();
    lo + (1.0 - lo) * u
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::explainers::ExplainerKind;
    use crate::metrics::{distance, DistanceKind};
    use crate::model::NeuralModel;

    #[test]
    fn perturbation_examples() {
        let zero = PerturbationLaw::new(0.0, 1);
        assert_eq!(sample_perturbation(&zero, 4, 9).unwrap(), vec![0.0; 4]);
        let law = PerturbationLaw::new(0.3, 42);
        assert_eq!(sample_perturbation(&law, 3, 5).unwrap(), sample_perturbation(&law, 3, 5).unwrap());
        assert_ne!(sample_perturbation(&law, 3, 5).unwrap(), sample_perturbation(&law, 3, 6).unwrap());
        assert!(sample_perturbation(&PerturbationLaw::new(-0.1, 1), 2, 0).is_err());
        assert!(sample_perturbation(&PerturbationLaw::new(f64::NAN, 1), 2, 0).is_err());
    }

    #[test]
    fn perturbation_moments() {
        let law = PerturbationLaw::new(0.1, 7);
        let d = 3;
        let n = 100_000;
        let mut sum = vec![0.0; d];
        let mut sq = vec![0.0; d];
        for k in 0..n {
            let delta = sample_perturbation(&law, d, k).unwrap();
            for c in 0..d {
                sum[c] += delta[c];
                sq[c] += delta[c] * delta[c];
            }
        }
        for c in 0..d {
            let mean = sum[c] / n as f64;
            let var = sq[c] / n as f64 - mean * mean;
            assert!(mean.abs() < 0.002, "mean {mean}");
            assert!((var - 0.01).abs() <= 0.03 * 0.01, "var {var}");
        }
    }

    #[test]
    fn capped_perturbations_respect_cap() {
        let law = PerturbationLaw { sigma: 1.0, epsilon_cap: Some(0.8), seed: 3 };
        for k in 0..200 {
            let delta = sample_perturbation(&law, 4, k).unwrap();
            assert!(delta.iter().map(|v| v * v).sum::<f64>().sqrt() <= 0.8);
        }
    }

    #[test]
    fn expected_norm_matches_monte_carlo() {
        let law = PerturbationLaw::new(0.5, 11);
        for d in [1usize, 2, 5] {
            let n = 40_000;
            let mc: f64 = (0..n)
                .map(|k| sample_perturbation(&law, d, k).unwrap().iter().map(|v| v * v).sum::<f64>().sqrt())
                .sum::<f64>()
                / n as f64;
            assert!((mc - law.expected_norm(d)).abs() < 0.01, "d={d}: {mc} vs {}", law.expected_norm(d));
        }
        // d = 1: E|N(0, s^2)| = s sqrt(2/pi)
        let exact = 0.5 * (2.0 / std::f64::consts::PI).sqrt();
        assert!((law.expected_norm(1) - exact).abs() < 1e-12);
    }

    #[test]
    fn injection_examples() {
        let inj = RedundancyInjection { source: 0, target: 2, alpha: 1.0, noise_seed: 4 };
        let out = inject_redundancy(&[3.0, 1.0, -8.0], &inj).unwrap();
        assert_eq!(out, vec![3.0, 1.0, 3.0]);

        let inj0 = RedundancyInjection { alpha: 0.0, ..inj };
        let out = inject_redundancy(&[3.0, 1.0, -8.0], &inj0).unwrap();
        assert_eq!(out[2], inj0.noise());
        assert_eq!(&out[..2], &[3.0, 1.0]);

        assert!(inject_redundancy(
            &[1.0, 2.0],
            &RedundancyInjection { source: 1, target: 1, alpha: 0.5, noise_seed: 0 }
        )
        .is_err());
    }

    #[test]
    fn injected_correlation_equals_alpha() {
        let n = 10_000;
        let mut xs = Vec::with_capacity(n);
        let mut ys = Vec::with_capacity(n);
        for k in 0..n as u64 {
            let xi: f64 = StandardNormal.sample(&mut stream(99, Purpose::Data, k));
            let inj = RedundancyInjection { source: 0, target: 1, alpha: 0.6, noise_seed: crate::rng::mix(5, k) };
            let out = inject_redundancy(&[xi, 0.0], &inj).unwrap();
            xs.push(out[0]);
            ys.push(out[1]);
        }
        let r = pearson(&xs, &ys);
        assert!((r - 0.6).abs() < 0.03, "corr {r}");
    }

    fn pearson(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len() as f64;
        let ma = a.iter().sum::<f64>() / n;
        let mb = b.iter().sum::<f64>() / n;
        let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
        let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
        let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
        cov / (va * vb).sqrt()
    }

    // E[(x_j - x_i)^2] = (alpha - 1)^2 E[x_i^2] + (1 - alpha^2), decreasing to 0.
    #[test]
    fn redundancy_gap_shrinks_with_alpha() {
        let n = 20_000u64;
        let mut last = f64::INFINITY;
        for alpha in default_alpha_grid() {
            let mut acc = 0.0;
            let mut sq = 0.0;
            for k in 0..n {
                let xi: f64 = StandardNormal.sample(&mut stream(1, Purpose::Data, k));
                let xj = redundant_value(xi, alpha, StandardNormal.sample(&mut stream(2, Purpose::Data, k)));
                acc += (xj - xi).powi(2);
                sq += xi * xi;
            }
            let mse = acc / n as f64;
            let exact = (alpha - 1.0f64).powi(2) * sq / n as f64 + (1.0 - alpha * alpha);
            assert!((mse - exact).abs() < 0.05, "alpha {alpha}: {mse} vs {exact}");
            assert!(mse <= last + 0.02);
            last = mse;
        }
        assert_eq!(last, 0.0);
    }

    #[test]
    fn collapse_input_examples() {
        let pair = CollapsePair { keep: 0, remove: 1, alpha: 0.5 };
        assert_eq!(collapse_input(&[2.0, 9.0, 5.0], &pair).unwrap(), vec![3.0, 5.0]);
        let p0 = CollapsePair { alpha: 0.0, ..pair };
        assert_eq!(collapse_input(&[2.0, 9.0, 5.0], &p0).unwrap(), vec![2.0, 5.0]);
        let p1 = CollapsePair { alpha: 1.0, ..pair };
        assert_eq!(collapse_input(&[2.0, 9.0, 5.0], &p1).unwrap(), vec![4.0, 5.0]);
        assert!(collapse_input(&[1.0, 2.0], &CollapsePair { keep: 0, remove: 5, alpha: 0.5 }).is_err());
    }

    #[test]
    fn collapse_explanation_examples() {
        let e = AttributionVector::new(vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(collapse_explanation(&e, 1).unwrap().as_slice(), &[1.0, 3.0]);
        assert_eq!(collapse_explanation(&e, 2).unwrap().as_slice(), &[1.0, 2.0]);
        let single = AttributionVector::new(vec![4.0]).unwrap();
        assert!(collapse_explanation(&single, 0).is_err());
    }

    #[test]
    fn midpoint_collapse_examples() {
        let e = AttributionVector::new(vec![4.0, 10.0]).unwrap();
        assert_eq!((4.0f64 - 10.0).abs() / 2.0, 3.0);
        assert_eq!(midpoint_collapse_drift(&e, 0, 1).unwrap(), 3.0);
        let eq = AttributionVector::new(vec![2.5, 7.0, 2.5]).unwrap();
        assert_eq!(midpoint_collapse_drift(&eq, 0, 2).unwrap(), 0.0);
        assert!(midpoint_collapse_drift(&eq, 1, 1).is_err());
    }

    proptest::proptest! {
        #[test]
        fn midpoint_drift_is_tight(v in proptest::collection::vec(-100.0f64..100.0, 2..6)) {
            let e = AttributionVector::new(v.clone()).unwrap();
            let got = midpoint_collapse_drift(&e, 0, 1).unwrap();
            let bound = (v[0] - v[1]).abs() / 2.0;
            proptest::prop_assert!(got >= 0.0);
            proptest::prop_assert!((got - bound).abs() <= 1e-12 * bound.max(1.0));
        }
    }

    fn constant(c: Vec<f64>) -> Box<dyn Explainer> {
        Box::new(ExplainerKind::Constant(c))
    }

    #[test]
    fn a2_offset_on_constant_zero() {
        let model = NeuralModel::linear(&[1.0, 2.0, 3.0], 0.0).unwrap();
        let w =
            wrap_counterexample(constant(vec![0.0; 3]), BreakVariant::A2 { eta: 0.3, v: vec![1.0, 0.0, 0.0] }).unwrap();
        for x in [[0.0, 0.0, 0.0], [5.0, -1.0, 2.0]] {
            let e = w.explain(&model, &x, &EvalContext::default()).unwrap();
            assert_eq!(e.as_slice(), &[0.3, 0.0, 0.0]);
        }
    }

    #[test]
    fn a3_flip_has_magnitude_two_u() {
        let model = NeuralModel::linear(&[1.0, 2.0], 0.0).unwrap();
        let u = vec![0.5, -1.5];
        let w = wrap_counterexample(Box::new(ExplainerKind::GradientOnly), BreakVariant::A3 { u: u.clone() }).unwrap();
        let at =
            |t| w.explain(&model, &[1.0, 1.0], &EvalContext { checkpoint: Some(t), ..Default::default() }).unwrap();
        let two_u = 2.0 * u.iter().map(|v| v * v).sum::<f64>().sqrt();
        for t in 0..4 {
            let d = distance(&at(t), &at(t + 1), DistanceKind::L2).unwrap();
            assert!((d - two_u).abs() < 1e-12);
        }
        assert!(matches!(w.explain(&model, &[1.0, 1.0], &EvalContext::default()), Err(Error::MissingContext(_))));
    }

    #[test]
    fn a1_jump_does_not_vanish() {
        let model = NeuralModel::random(&[3, 6, 1], crate::model::Activation::Tanh, 5).unwrap();
        let k = 0.7;
        let w = wrap_counterexample(Box::new(ExplainerKind::GradientOnly), BreakVariant::A1 { k }).unwrap();
        let x = [0.2, -0.4, 0.9];
        let reference = w.explain(&model, &x, &EvalContext::default()).unwrap();
        for eps in [1e-2, 1e-4, 1e-6, 1e-8] {
            let delta = [eps, 0.0, 0.0];
            let xp = [x[0] + eps, x[1], x[2]];
            let ctx = EvalContext { delta: Some(&delta), ..Default::default() };
            let d = distance(&reference, &w.explain(&model, &xp, &ctx).unwrap(), DistanceKind::L2).unwrap();
            assert!(d >= k - 10.0 * eps, "eps {eps}: drift {d}");
        }
    }

    #[test]
    fn a4_switches_on_threshold() {
        let model = NeuralModel::linear(&[1.0, 1.0], 0.0).unwrap();
        let w =
            wrap_counterexample(constant(vec![0.0, 0.0]), BreakVariant::A4 { tau: 0.5, w: vec![1.0, 1.0] }).unwrap();
        let at = |norm| {
            w.explain(&model, &[0.0, 0.0], &EvalContext { law_mean_norm: Some(norm), ..Default::default() }).unwrap()
        };
        assert_eq!(at(0.5).as_slice(), &[0.0, 0.0]);
        assert_eq!(at(0.5000001).as_slice(), &[1.0, 1.0]);
        assert!(w.explain(&model, &[0.0, 0.0], &EvalContext::default()).is_err());
    }

    #[test]
    fn wrapper_parameters_are_checked() {
        assert!(wrap_counterexample(constant(vec![0.0]), BreakVariant::A1 { k: 0.0 }).is_err());
        assert!(wrap_counterexample(constant(vec![0.0]), BreakVariant::A4 { tau: -1.0, w: vec![1.0] }).is_err());
        let model = NeuralModel::linear(&[1.0, 1.0], 0.0).unwrap();
        let w = wrap_counterexample(constant(vec![0.0, 0.0]), BreakVariant::A2 { eta: 1.0, v: vec![1.0] }).unwrap();
        assert!(w.explain(&model, &[0.0, 0.0], &EvalContext::default()).is_err());
    }
}
