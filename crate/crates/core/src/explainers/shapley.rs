//! Exact Shapley values by full coalition enumeration.

use crate::error::{check_dim, Error, Result};
use crate::metrics::AttributionVector;
use crate::model::Model;
use crate::transforms::{collapse_input, CollapsePair};

/// Enumeration touches `2^d` coalitions; refuse anything larger.
pub const MAX_SHAPLEY_DIM: usize = 20;

/// How an absent feature is filled in when evaluating a coalition.
#[derive(Debug, Clone)]
pub enum ShapleyValueFn {
    /// Absent features take the baseline value.
    BaselineReplacement(Vec<f64>),
    /// Absent features are averaged over background rows (interventional).
    BackgroundExpectation(Vec<Vec<f64>>),
}

impl ShapleyValueFn {
    pub(crate) fn collapse(&self, pair: &CollapsePair) -> Result<Self> {
        Ok(match self {
            ShapleyValueFn::BaselineReplacement(b) => ShapleyValueFn::BaselineReplacement(collapse_input(b, pair)?),
            ShapleyValueFn::BackgroundExpectation(rows) => ShapleyValueFn::BackgroundExpectation(
                rows.iter().map(|r| collapse_input(r, pair)).collect::<Result<_>>()?,
            ),
        })
    }

    fn references(&self) -> Vec<&[f64]> {
        match self {
            ShapleyValueFn::BaselineReplacement(b) => vec![b.as_slice()],
            ShapleyValueFn::BackgroundExpectation(rows) => rows.iter().map(Vec::as_slice).collect(),
        }
    }
}

pub fn exact_shapley(model: &dyn Model, x: &[f64], value_fn: &ShapleyValueFn) -> Result<AttributionVector> {
    let d = model.input_dim();
    check_dim(d, x.len())?;
    if d > MAX_SHAPLEY_DIM {
        return Err(Error::Guard(format!(
            "exact Shapley enumeration needs 2^{d} coalitions; limit is d <= {MAX_SHAPLEY_DIM}"
        )));
    }
    let refs = value_fn.references();
    if refs.is_empty() {
        return Err(Error::Empty("background rows"));
    }
    for r in &refs {
        check_dim(d, r.len())?;
    }

    let n_masks = 1usize << d;
    let mut values = vec![0.0; n_masks];
    let mut probe = vec![0.0; d];
    for (mask, v) in values.iter_mut().enumerate() {
        let mut total = 0.0;
        for r in &refs {
            for i in 0..d {
                probe[i] = if mask >> i & 1 == 1 { x[i] } else { r[i] };
            }
            total += model.forward(&probe)?;
        }
        *v = total / refs.len() as f64;
    }

    // weight[s] = s! (d - s - 1)! / d!
    let mut weight = vec![0.0; d];
    for (s, w) in weight.iter_mut().enumerate() {
        let mut acc = 1.0 / d as f64;
        // 1 / C(d-1, s)
        for k in 0..s {
            acc *= (k + 1) as f64 / (d - 1 - k) as f64;
        }
        *w = acc;
    }

    let mut phi = vec![0.0; d];
    for mask in 0..n_masks {
        let s = mask.count_ones() as usize;
        for (i, p) in phi.iter_mut().enumerate() {
            if mask >> i & 1 == 0 {
                *p += weight[s] * (values[mask | 1 << i] - values[mask]);
            }
        }
    }
    AttributionVector::new(phi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Activation, FnModel, NeuralModel};

    #[test]
    fn product_with_background() {
        let m = FnModel::new(2, |x| x[0] * x[1]);
        let bg = ShapleyValueFn::BackgroundExpectation(vec![vec![1.0, 1.0], vec![-1.0, 1.0]]);
        let phi = exact_shapley(&m, &[1.0, 1.0], &bg).unwrap();
        assert!((phi[0] - 1.0).abs() < 1e-12);
        assert!(phi[1].abs() < 1e-12);
    }

    #[test]
    fn linear_model_gives_weight_times_offset() {
        let m = NeuralModel::linear(&[2.0, -1.0, 0.5], 4.0).unwrap();
        let phi =
            exact_shapley(&m, &[1.0, 2.0, 3.0], &ShapleyValueFn::BaselineReplacement(vec![0.0, 1.0, -1.0])).unwrap();
        let expected = [2.0, -1.0, 2.0];
        for i in 0..3 {
            assert!((phi[i] - expected[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn efficiency_and_symmetry() {
        let m = NeuralModel::random(&[5, 7, 1], Activation::Tanh, 11).unwrap();
        let x = [0.3, -1.2, 0.8, 2.0, -0.1];
        let base = vec![0.0; 5];
        let phi = exact_shapley(&m, &x, &ShapleyValueFn::BaselineReplacement(base.clone())).unwrap();
        let gap = m.forward(&x).unwrap() - m.forward(&base).unwrap();
        assert!((phi.as_slice().iter().sum::<f64>() - gap).abs() < 1e-10);

        let sym = FnModel::new(3, |x| (x[0] + x[1]).powi(2) + x[2]);
        let phi = exact_shapley(&sym, &[1.5, 1.5, 1.0], &ShapleyValueFn::BaselineReplacement(vec![0.0; 3])).unwrap();
        assert!((phi[0] - phi[1]).abs() < 1e-12);
    }

    #[test]
    fn asymmetric_features_differ() {
        let m = FnModel::new(2, |x| 3.0 * x[0] + x[0] * x[1]);
        let phi = exact_shapley(&m, &[1.0, 1.0], &ShapleyValueFn::BaselineReplacement(vec![0.0; 2])).unwrap();
        assert!((phi[0] - 3.5).abs() < 1e-12);
        assert!((phi[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn dummy_feature_gets_zero() {
        let m = FnModel::new(3, |x| x[0].sin() * x[2]);
        let phi =
            exact_shapley(&m, &[0.4, 9.0, -2.0], &ShapleyValueFn::BaselineReplacement(vec![0.1, 0.2, 0.3])).unwrap();
        assert!(phi[1].abs() < 1e-14);
    }

    #[test]
    fn dimension_guard() {
        let m = FnModel::new(21, |x| x.iter().sum());
        let err = exact_shapley(&m, &[0.0; 21], &ShapleyValueFn::BaselineReplacement(vec![0.0; 21])).unwrap_err();
        assert!(matches!(err, Error::Guard(_)));
    }
}
