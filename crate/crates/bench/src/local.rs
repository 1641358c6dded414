//! Instance-level dependence explainers: MI or HSIC between each input
//! coordinate and the model output over Gaussian perturbations of `x`.

use eri_core::dependence::{hsic, mutual_information, BinningSpec, KernelSpec};
use eri_core::rng::{fingerprint, mix, stream, Purpose};
use eri_core::transforms::CollapsePair;
use eri_core::{AttributionVector, EvalContext, Explainer, Model};
use rand_distr::{Distribution, Normal};

/// Perturbed copies per explanation.
pub const LOCAL_COPIES: usize = 500;

const LOCAL_STREAM: u64 = 0x10CA1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LocalStatistic {
    Mi(BinningSpec),
    Hsic(KernelSpec),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalDependence {
    pub statistic: LocalStatistic,
    pub copies: usize,
    pub sigma: f64,
    pub seed: u64,
}

impl LocalDependence {
    pub fn mi(seed: u64) -> Self {
        Self { statistic: LocalStatistic::Mi(BinningSpec::default()), copies: LOCAL_COPIES, sigma: 0.5, seed }
    }

    pub fn hsic(seed: u64) -> Self {
        Self { statistic: LocalStatistic::Hsic(KernelSpec::default()), copies: LOCAL_COPIES, sigma: 0.5, seed }
    }
}

impl Explainer for LocalDependence {
    fn name(&self) -> String {
        match self.statistic {
            LocalStatistic::Mi(_) => "LocalMI".into(),
            LocalStatistic::Hsic(_) => "LocalHSIC".into(),
        }
    }

    fn explain(&self, model: &dyn Model, x: &[f64], _ctx: &EvalContext<'_>) -> eri_core::Result<AttributionVector> {
        let d = model.input_dim();
        if d != x.len() {
            return Err(eri_core::Error::DimensionMismatch { expected: d, got: x.len() });
        }
        let noise =
            Normal::new(0.0, self.sigma).map_err(|e| eri_core::Error::InvalidArgument(format!("local sigma: {e}")))?;
        // keyed on the input so the same x always sees the same neighbourhood
        let mut rng = stream(mix(self.seed, LOCAL_STREAM), Purpose::Custom(LOCAL_STREAM), fingerprint(x));
        let mut columns = vec![Vec::with_capacity(self.copies); d];
        let mut outputs = Vec::with_capacity(self.copies);
        for _ in 0..self.copies {
            let xp: Vec<f64> = x.iter().map(|v| v + noise.sample(&mut rng)).collect();
            outputs.push(model.forward(&xp)?);
            for (c, v) in columns.iter_mut().zip(&xp) {
                c.push(*v);
            }
        }
        let values = columns
            .iter()
            .map(|c| match &self.statistic {
                LocalStatistic::Mi(spec) => mutual_information(c, &outputs, spec),
                LocalStatistic::Hsic(spec) => hsic(c, &outputs, spec),
            })
            .collect::<eri_core::Result<Vec<f64>>>()?;
        AttributionVector::new(values)
    }

    fn collapse(&self, _pair: &CollapsePair) -> eri_core::Result<Box<dyn Explainer>> {
        Ok(Box::new(self.clone()))
    }
}
