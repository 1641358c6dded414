//! Histogram mutual information, conditional mutual information, HSIC and
//! the MCIR attribution built on them.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{check_dim, Error, Result};
use crate::explainers::{EvalContext, Explainer};
use crate::metrics::AttributionVector;
use crate::model::{Dataset, Model};
use crate::transforms::{remove_coordinate, CollapsePair};

/// Most conditioning columns a CMI estimate may use.
pub const MAX_CONDITIONING: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BinningStrategy {
    EqualWidth,
    EqualFrequency,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinningSpec {
    pub bins: usize,
    pub strategy: BinningStrategy,
}

impl Default for BinningSpec {
    fn default() -> Self {
        Self { bins: 8, strategy: BinningStrategy::EqualFrequency }
    }
}

impl BinningSpec {
    pub fn validate(&self) -> Result<()> {
        if self.bins < 2 {
            return Err(Error::invalid(format!("need at least 2 bins, got {}", self.bins)));
        }
        Ok(())
    }

    /// Bin index of every sample.
    pub fn discretize(&self, values: &[f64]) -> Result<Vec<usize>> {
        self.validate()?;
        if values.is_empty() {
            return Err(Error::Empty("sample column"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("sample column".into()));
        }
        let n = values.len();
        let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        match self.strategy {
            BinningStrategy::EqualWidth => {
                if hi == lo {
                    return Ok(vec![0; n]);
                }
                let w = (hi - lo) / self.bins as f64;
                Ok(values.iter().map(|v| (((v - lo) / w) as usize).min(self.bins - 1)).collect())
            }
            BinningStrategy::EqualFrequency => {
                if hi == lo {
                    return Err(Error::DegenerateBinning("constant column cannot be split into quantile bins".into()));
                }
                let mut order: Vec<usize> = (0..n).collect();
                order.sort_by(|a, b| values[*a].total_cmp(&values[*b]));
                let mut out = vec![0; n];
                // tied values share the bin of their lowest rank
                let mut start = 0;
                while start < n {
                    let mut end = start + 1;
                    while end < n && values[order[end]] == values[order[start]] {
                        end += 1;
                    }
                    let bin = start * self.bins / n;
                    for &i in &order[start..end] {
                        out[i] = bin;
                    }
                    start = end;
                }
                Ok(out)
            }
        }
    }
}

/// Plug-in entropy (nats) of the joint code of several discretized columns.
fn joint_entropy(columns: &[&[usize]], radix: usize) -> f64 {
    let n = columns[0].len();
    let mut codes: Vec<u64> =
        (0..n).map(|r| columns.iter().fold(0u64, |acc, c| acc * radix as u64 + c[r] as u64)).collect();
    codes.sort_unstable();
    let nf = n as f64;
    let mut h = 0.0;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && codes[end] == codes[start] {
            end += 1;
        }
        let p = (end - start) as f64 / nf;
        h -= p * p.ln();
        start = end;
    }
    h
}

fn occupied(column: &[usize]) -> usize {
    let mut seen = column.to_vec();
    seen.sort_unstable();
    seen.dedup();
    seen.len()
}

fn occupied_joint(columns: &[&[usize]], radix: usize) -> usize {
    if columns.is_empty() {
        return 1;
    }
    let n = columns[0].len();
    let mut codes: Vec<u64> =
        (0..n).map(|r| columns.iter().fold(0u64, |acc, c| acc * radix as u64 + c[r] as u64)).collect();
    codes.sort_unstable();
    codes.dedup();
    codes.len()
}

fn check_samples(x: &[f64], y: &[f64], spec: &BinningSpec) -> Result<()> {
    spec.validate()?;
    check_dim(x.len(), y.len())?;
    if x.len() < spec.bins {
        return Err(Error::invalid(format!(
            "need at least {} samples for {} bins, got {}",
            spec.bins,
            spec.bins,
            x.len()
        )));
    }
    Ok(())
}

/// Plug-in mutual information of the joint 2-D histogram, in nats.
pub fn mutual_information(x: &[f64], y: &[f64], spec: &BinningSpec) -> Result<f64> {
    check_samples(x, y, spec)?;
    let bx = spec.discretize(x)?;
    let by = spec.discretize(y)?;
    Ok(mi_binned(&bx, &by, spec.bins))
}

fn mi_binned(bx: &[usize], by: &[usize], radix: usize) -> f64 {
    let mi = joint_entropy(&[bx], radix) + joint_entropy(&[by], radix) - joint_entropy(&[bx, by], radix);
    mi.max(0.0)
}

/// Discretized columns ready for repeated CMI evaluation.
struct Binned {
    columns: Vec<Vec<usize>>,
    target: Vec<usize>,
    radix: usize,
}

impl Binned {
    fn new(columns: &[Vec<f64>], target: &[f64], spec: &BinningSpec) -> Result<Self> {
        Ok(Self {
            columns: columns.iter().map(|c| spec.discretize(c)).collect::<Result<_>>()?,
            target: spec.discretize(target)?,
            radix: spec.bins,
        })
    }

    /// `I(target; col | conditioning)` and the degrees of freedom of its
    /// independence null.
    fn cmi(&self, col: usize, conditioning: &[usize]) -> (f64, f64) {
        let x = self.columns[col].as_slice();
        let y = self.target.as_slice();
        let z: Vec<&[usize]> = conditioning.iter().map(|&c| self.columns[c].as_slice()).collect();
        cmi_binned(x, y, &z, self.radix)
    }

    fn mi_with_target(&self, cols: &[usize]) -> f64 {
        let z: Vec<&[usize]> = cols.iter().map(|&c| self.columns[c].as_slice()).collect();
        let mut all = z.clone();
        all.push(&self.target);
        let v = joint_entropy(&z, self.radix) + joint_entropy(&[&self.target], self.radix)
            - joint_entropy(&all, self.radix);
        v.max(0.0)
    }
}

fn cmi_binned(x: &[usize], y: &[usize], z: &[&[usize]], radix: usize) -> (f64, f64) {
    let df = ((occupied(x).max(1) - 1) * (occupied(y).max(1) - 1) * occupied_joint(z, radix)) as f64;
    if z.is_empty() {
        return (mi_binned(x, y, radix), df);
    }
    let mut xz = z.to_vec();
    xz.push(x);
    let mut yz = z.to_vec();
    yz.push(y);
    let mut xyz = xz.clone();
    xyz.push(y);
    let v =
        joint_entropy(&xz, radix) + joint_entropy(&yz, radix) - joint_entropy(&xyz, radix) - joint_entropy(z, radix);
    (v.max(0.0), df)
}

fn guard_conditioning(n: usize, zc: usize, spec: &BinningSpec) -> Result<()> {
    if zc > MAX_CONDITIONING {
        return Err(Error::Guard(format!(
            "{zc} conditioning columns exceed the limit of {MAX_CONDITIONING}; condition on fewer features"
        )));
    }
    let cells = (spec.bins as f64).powi(zc as i32 + 1);
    if (n as f64) < cells {
        return Err(Error::Guard(format!(
            "{n} samples cannot populate {cells} histogram cells at {} bins; use coarser bins or more samples",
            spec.bins
        )));
    }
    Ok(())
}

/// `I(X;Y|Z) = sum_z p(z) I(X;Y|Z=z)` over the binned conditioning cells.
pub fn conditional_mutual_information(x: &[f64], y: &[f64], z: &[Vec<f64>], spec: &BinningSpec) -> Result<f64> {
    check_samples(x, y, spec)?;
    for c in z {
        check_dim(x.len(), c.len())?;
    }
    guard_conditioning(x.len(), z.len(), spec)?;
    let bx = spec.discretize(x)?;
    let by = spec.discretize(y)?;
    let bz = z.iter().map(|c| spec.discretize(c)).collect::<Result<Vec<_>>>()?;
    let zr: Vec<&[usize]> = bz.iter().map(Vec::as_slice).collect();
    Ok(cmi_binned(&bx, &by, &zr, spec.bins).0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Bandwidth {
    Fixed(f64),
    MedianHeuristic,
}

/// Gaussian kernel with explicit or median-heuristic bandwidth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub bandwidth: Bandwidth,
}

impl Default for KernelSpec {
    fn default() -> Self {
        Self { bandwidth: Bandwidth::MedianHeuristic }
    }
}

const MEDIAN_SUBSAMPLE: usize = 1000;

fn resolve_bandwidth(values: &[f64], bw: Bandwidth) -> Result<f64> {
    match bw {
        Bandwidth::Fixed(s) if s > 0.0 && s.is_finite() => Ok(s),
        Bandwidth::Fixed(s) => Err(Error::invalid(format!("kernel bandwidth must be positive, got {s}"))),
        Bandwidth::MedianHeuristic => {
            let m = values.len().min(MEDIAN_SUBSAMPLE);
            let mut dists = Vec::with_capacity(m * (m - 1) / 2);
            for i in 0..m {
                for j in i + 1..m {
                    dists.push((values[i] - values[j]).abs());
                }
            }
            let mid = dists.len() / 2;
            let (_, &mut med, _) = dists.select_nth_unstable_by(mid, f64::total_cmp);
            if med > 0.0 {
                Ok(med)
            } else {
                log::warn!("median pairwise distance is zero; falling back to kernel bandwidth 1.0");
                Ok(1.0)
            }
        }
    }
}

/// Biased HSIC V-statistic `(1/n^2) tr(K H L H)`.
pub fn hsic(x: &[f64], y: &[f64], spec: &KernelSpec) -> Result<f64> {
    check_dim(x.len(), y.len())?;
    let n = x.len();
    if n < 4 {
        return Err(Error::invalid(format!("HSIC needs at least 4 samples, got {n}")));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("HSIC samples".into()));
    }
    let sx = resolve_bandwidth(x, spec.bandwidth)?;
    let sy = resolve_bandwidth(y, spec.bandwidth)?;
    let (gx, gy) = (-0.5 / (sx * sx), -0.5 / (sy * sy));
    let mut row_k = vec![0.0; n];
    let mut row_l = vec![0.0; n];
    let mut kl = 0.0;
    for i in 0..n {
        for j in 0..n {
            let k = (gx * (x[i] - x[j]).powi(2)).exp();
            let l = (gy * (y[i] - y[j]).powi(2)).exp();
            row_k[i] += k;
            row_l[i] += l;
            kl += k * l;
        }
    }
    let nf = n as f64;
    let cross: f64 = row_k.iter().zip(&row_l).map(|(a, b)| a * b).sum();
    let sum_k: f64 = row_k.iter().sum();
    let sum_l: f64 = row_l.iter().sum();
    let trace = kl - 2.0 * cross / nf + sum_k * sum_l / (nf * nf);
    Ok((trace / (nf * nf)).max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McirConfig {
    /// Size of the conditioning neighbourhood.
    pub k: usize,
    pub epsilon: f64,
    pub binning: BinningSpec,
    /// Level of the chi-square independence test that gates the incremental
    /// information; `None` uses the raw plug-in estimate.
    pub significance: Option<f64>,
}

impl Default for McirConfig {
    fn default() -> Self {
        Self { k: 1, epsilon: 1e-9, binning: BinningSpec::default(), significance: Some(1e-3) }
    }
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    if saa == 0.0 || sbb == 0.0 {
        0.0
    } else {
        sab / (saa * sbb).sqrt()
    }
}

/// Indices of the `k` features most correlated (in absolute value) with
/// feature `i`; ties go to the lower index.
pub fn correlation_neighbourhood(columns: &[Vec<f64>], i: usize, k: usize) -> Vec<usize> {
    let mut cands: Vec<(usize, f64)> =
        (0..columns.len()).filter(|&j| j != i).map(|j| (j, pearson(&columns[i], &columns[j]).abs())).collect();
    cands.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    cands.into_iter().take(k).map(|(j, _)| j).collect()
}

/// Per-feature MCIR scores in `[0, 1]`:
/// `c / (c + I(Y; X_phi, X_i) + eps)` with `c = I(Y; X_i | X_phi)`.
pub fn mcir(data: &Dataset, cfg: &McirConfig) -> Result<AttributionVector> {
    let d = data.dim();
    if d < 2 {
        return Err(Error::invalid("MCIR needs at least two features"));
    }
    if cfg.k == 0 || cfg.k >= d {
        return Err(Error::invalid(format!(
            "neighbourhood size must satisfy 0 < k < d, got k = {} with d = {d}",
            cfg.k
        )));
    }
    if !(cfg.epsilon > 0.0) {
        return Err(Error::invalid("epsilon must be positive"));
    }
    if let Some(p) = cfg.significance {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::invalid("significance level must lie in (0, 1)"));
        }
    }
    guard_conditioning(data.len(), cfg.k, &cfg.binning)?;
    let columns: Vec<Vec<f64>> = (0..d).map(|j| data.column(j)).collect();
    let binned = Binned::new(&columns, &data.targets, &cfg.binning)?;
    let n = data.len() as f64;

    let mut scores = Vec::with_capacity(d);
    for i in 0..d {
        let phi = correlation_neighbourhood(&columns, i, cfg.k);
        let (mut c, df) = binned.cmi(i, &phi);
        if let Some(p) = cfg.significance {
            // 2n * CMI is asymptotically chi-square under conditional independence
            let critical = if df > 0.0 {
                ChiSquared::new(df).map_err(|e| Error::invalid(e.to_string()))?.inverse_cdf(1.0 - p)
            } else {
                0.0
            };
            if 2.0 * n * c <= critical {
                c = 0.0;
            }
        }
        // chain rule: I(Y; X_phi, X_i) = I(Y; X_phi) + I(Y; X_i | X_phi)
        let joint = binned.mi_with_target(&phi) + c;
        scores.push((c / (c + joint + cfg.epsilon)).clamp(0.0, 1.0));
    }
    AttributionVector::new(scores)
}

/// MCIR frozen into an explainer: the same vector for every input and model.
#[derive(Debug, Clone)]
pub struct McirExplainer {
    scores: AttributionVector,
}

impl McirExplainer {
    pub fn fit(data: &Dataset, cfg: &McirConfig) -> Result<Self> {
        Ok(Self { scores: mcir(data, cfg)? })
    }

    pub fn from_scores(scores: AttributionVector) -> Self {
        Self { scores }
    }

    pub fn scores(&self) -> &AttributionVector {
        &self.scores
    }
}

pub fn mcir_as_explainer(data: &Dataset, cfg: &McirConfig) -> Result<McirExplainer> {
    McirExplainer::fit(data, cfg)
}

impl Explainer for McirExplainer {
    fn name(&self) -> String {
        "MCIR".into()
    }

    fn explain(&self, model: &dyn Model, x: &[f64], _ctx: &EvalContext<'_>) -> Result<AttributionVector> {
        check_dim(self.scores.len(), x.len())?;
        check_dim(self.scores.len(), model.input_dim())?;
        Ok(self.scores.clone())
    }

    fn collapse(&self, pair: &CollapsePair) -> Result<Box<dyn Explainer>> {
        let kept = remove_coordinate(self.scores.as_slice(), pair.remove)?;
        Ok(Box::new(McirExplainer { scores: AttributionVector::new(kept)? }))
    }
}
