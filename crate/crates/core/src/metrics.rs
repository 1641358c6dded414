//! Attribution-space arithmetic: distances between explanations, drift
//! accumulation, the bounded ERI transform, component aggregation and
//! Hoeffding confidence bounds.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// Stabiliser added to the reference norm when drift normalisation is on.
pub const NORMALIZE_EPS: f64 = 1e-9;

/// Per-feature contribution scores produced by an explainer for one input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AttributionVector(Vec<f64>);

impl AttributionVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("attribution vector"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("attribution vector".into()));
        }
        Ok(Self(values))
    }

    pub fn zeros(d: usize) -> Result<Self> {
        Self::new(vec![0.0; d])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

impl std::ops::Index<usize> for AttributionVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Dissimilarity between two explanations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistanceKind {
    L1,
    L2,
    /// Max-coordinate distance; the metric under which midpoint collapse is tight.
    Linf,
    /// `1 - cos`, in `[0, 2]`. A zero vector on either side gives 1.
    Cosine,
    /// `min(L2, cap)`: bounded drift samples, as Hoeffding intervals need.
    ClampedL2 {
        cap: f64,
    },
}

impl DistanceKind {
    /// Default bounded metric used whenever Hoeffding intervals are requested.
    pub const CLAMPED_UNIT: DistanceKind = DistanceKind::ClampedL2 { cap: 1.0 };

    /// Upper bound on any value this distance can return, if one exists.
    pub fn bound(&self) -> Option<f64> {
        match *self {
            DistanceKind::Cosine => Some(2.0),
            DistanceKind::ClampedL2 { cap } => Some(cap),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let DistanceKind::ClampedL2 { cap } = *self {
            if !(cap > 0.0 && cap.is_finite()) {
                return Err(Error::invalid(format!("clamp cap must be positive, got {cap}")));
            }
        }
        Ok(())
    }
}

impl fmt::Display for DistanceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DistanceKind::L1 => write!(f, "l1"),
            DistanceKind::L2 => write!(f, "l2"),
            DistanceKind::Linf => write!(f, "linf"),
            DistanceKind::Cosine => write!(f, "cosine"),
            DistanceKind::ClampedL2 { cap } => write!(f, "clamped_l2({cap})"),
        }
    }
}

/// Distance between two attribution slices of equal length.
pub fn distance_slices(a: &[f64], b: &[f64], kind: DistanceKind) -> Result<f64> {
    check_dim(a.len(), b.len())?;
    kind.validate()?;
    let diff = a.iter().zip(b).map(|(x, y)| x - y);
    let d = match kind {
        DistanceKind::L1 => diff.map(f64::abs).sum(),
        DistanceKind::L2 => diff.map(|t| t * t).sum::<f64>().sqrt(),
        DistanceKind::Linf => diff.fold(0.0_f64, |m, t| m.max(t.abs())),
        DistanceKind::ClampedL2 { cap } => diff.map(|t| t * t).sum::<f64>().sqrt().min(cap),
        DistanceKind::Cosine => {
            if a == b && a.iter().any(|v| *v != 0.0) {
                return Ok(0.0);
            }
            let na = a.iter().map(|v| v * v).sum::<f64>().sqrt();
            let nb = b.iter().map(|v| v * v).sum::<f64>().sqrt();
            if na == 0.0 || nb == 0.0 {
                1.0
            } else {
                let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                (1.0 - dot / (na * nb)).clamp(0.0, 2.0)
            }
        }
    };
    if !d.is_finite() {
        return Err(Error::NonFinite("distance".into()));
    }
    Ok(d)
}

pub fn distance(a: &AttributionVector, b: &AttributionVector, kind: DistanceKind) -> Result<f64> {
    distance_slices(a.as_slice(), b.as_slice(), kind)
}

/// Bounded monotone map from drift to reliability: `1 / (1 + drift)`.
pub fn eri_transform(drift: f64) -> Result<f64> {
    if !drift.is_finite() {
        return Err(Error::NonFinite("drift".into()));
    }
    if drift < 0.0 {
        return Err(Error::invalid(format!("drift must be nonnegative, got {drift}")));
    }
    Ok(1.0 / (1.0 + drift))
}

/// Monte Carlo drift estimate with its confidence information.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftEstimate {
    pub mean_drift: f64,
    pub n: usize,
    /// Hoeffding half-width; `None` when samples are not known to be bounded.
    pub hoeffding_radius: Option<f64>,
    /// Sample standard error of the mean (0 for a single sample).
    pub std_error: f64,
    pub confidence: f64,
}

impl DriftEstimate {
    /// Drift that is exactly known (no sampling involved).
    pub fn exact(mean_drift: f64, n: usize, confidence: f64) -> Result<Self> {
        if !(mean_drift >= 0.0 && mean_drift.is_finite()) {
            return Err(Error::invalid(format!("invalid drift {mean_drift}")));
        }
        Ok(Self { mean_drift, n: n.max(1), hoeffding_radius: None, std_error: 0.0, confidence })
    }

    pub fn is_hoeffding(&self) -> bool {
        self.hoeffding_radius.is_some()
    }
}

/// Reliability score tied to the drift it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EriScore {
    pub value: f64,
    pub drift: DriftEstimate,
}

impl EriScore {
    pub fn from_drift(drift: DriftEstimate) -> Result<Self> {
        let value = eri_transform(drift.mean_drift)?;
        Ok(Self { value, drift })
    }
}

/// The five reliability axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Component {
    S,
    R,
    T,
    M,
    D,
}

impl Component {
    pub const ALL: [Component; 5] = [Component::S, Component::R, Component::T, Component::M, Component::D];

    pub fn label(self) -> &'static str {
        match self {
            Component::S => "S",
            Component::R => "R",
            Component::T => "T",
            Component::M => "M",
            Component::D => "D",
        }
    }
}

impl std::str::FromStr for Component {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "S" => Ok(Component::S),
            "R" => Ok(Component::R),
            "T" => Ok(Component::T),
            "M" => Ok(Component::M),
            "D" => Ok(Component::D),
            other => Err(Error::invalid(format!("unknown component '{other}'"))),
        }
    }
}

/// Aggregation operator over component scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "weights", rename_all = "snake_case")]
pub enum AggregatorKind {
    UniformMean,
    /// Weights are matched to the present components in `Component` order.
    WeightedMean(Vec<f64>),
    Minimum,
    GeometricMean,
}

pub fn aggregate(components: &BTreeMap<Component, f64>, kind: &AggregatorKind) -> Result<f64> {
    if components.is_empty() {
        return Err(Error::Empty("component map"));
    }
    if components.values().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("component score".into()));
    }
    let k = components.len() as f64;
    let value = match kind {
        AggregatorKind::UniformMean => components.values().sum::<f64>() / k,
        AggregatorKind::WeightedMean(weights) => {
            check_dim(components.len(), weights.len())?;
            if weights.iter().any(|w| !(*w >= 0.0)) {
                return Err(Error::invalid("weights must be nonnegative"));
            }
            let total: f64 = weights.iter().sum();
            if (total - 1.0).abs() > 1e-12 {
                return Err(Error::invalid(format!("weights sum to {total}, not 1")));
            }
            components.values().zip(weights).map(|(s, w)| s * w).sum()
        }
        AggregatorKind::Minimum => components.values().copied().fold(f64::INFINITY, f64::min),
        AggregatorKind::GeometricMean => {
            if components.values().any(|v| *v < 0.0) {
                return Err(Error::invalid("geometric mean requires nonnegative scores"));
            }
            if components.values().any(|v| *v == 0.0) {
                0.0
            } else {
                (components.values().map(|v| v.ln()).sum::<f64>() / k).exp()
            }
        }
    };
    Ok(value)
}

fn check_unit_open(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v < 1.0) {
        return Err(Error::invalid(format!("{name} must lie in (0,1), got {v}")));
    }
    Ok(())
}

/// Smallest `n` with `ln(2/delta) / (2 n) <= eta^2`.
pub fn hoeffding_sample_size(eta: f64, delta: f64) -> Result<u64> {
    check_unit_open("eta", eta)?;
    check_unit_open("delta", delta)?;
    Ok(((2.0 / delta).ln() / (2.0 * eta * eta)).ceil() as u64)
}

/// Hoeffding half-width for `n` samples in `[0, bound]` at the given confidence.
pub fn hoeffding_radius(n: usize, confidence: f64, bound: f64) -> Result<f64> {
    check_unit_open("confidence", confidence)?;
    if n == 0 {
        return Err(Error::Empty("drift samples"));
    }
    let delta = 1.0 - confidence;
    Ok(bound * ((2.0 / delta).ln() / (2.0 * n as f64)).sqrt())
}

/// Single-pass drift accumulator.
///
/// Holds a compensated running sum and Welford moments, so memory is constant
/// in the number of samples. Accumulators over disjoint index ranges can be
/// merged; merging in a fixed order gives bit-identical results regardless of
/// which worker produced each part.
#[derive(Debug, Clone, Default)]
pub struct DriftAccumulator {
    n: usize,
    sum: f64,
    comp: f64,
    mean: f64,
    m2: f64,
}

impl DriftAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, sample: f64) -> Result<()> {
        if !sample.is_finite() {
            return Err(Error::NonFinite("drift sample".into()));
        }
        if sample < 0.0 {
            return Err(Error::invalid(format!("drift sample {sample} is negative")));
        }
        self.n += 1;
        self.add_to_sum(sample);
        let delta = sample - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (sample - self.mean);
        Ok(())
    }

    // Neumaier variant of Kahan summation.
    fn add_to_sum(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: &DriftAccumulator) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = other.clone();
            return;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        self.mean += delta * other.n as f64 / n as f64;
        self.m2 += other.m2 + delta * delta * (self.n as f64 * other.n as f64) / n as f64;
        self.add_to_sum(other.sum);
        self.comp += other.comp;
        self.n = n;
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn mean(&self) -> Option<f64> {
        (self.n > 0).then(|| (self.sum + self.comp) / self.n as f64)
    }

    /// Close the estimate. `bound` is the known upper limit of every sample;
    /// a Hoeffding radius is attached only when it is given.
    pub fn finalize(&self, confidence: f64, bound: Option<f64>) -> Result<DriftEstimate> {
        let mean = self.mean().ok_or(Error::Empty("drift samples"))?;
        check_unit_open("confidence", confidence)?;
        let std_error = if self.n > 1 { (self.m2.max(0.0) / (self.n - 1) as f64 / self.n as f64).sqrt() } else { 0.0 };
        let hoeffding_radius = match bound {
            Some(b) => Some(hoeffding_radius(self.n, confidence, b)?),
            None => None,
        };
        Ok(DriftEstimate { mean_drift: mean.max(0.0), n: self.n, hoeffding_radius, std_error, confidence })
    }
}
