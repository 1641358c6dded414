//! Explanation Reliability Index: drift-based reliability scores for
//! feature-attribution methods.
//!
//! The crate is organised bottom-up: [`metrics`] holds attribution vectors,
//! distances, the drift-to-score map and the streaming estimators; [`model`]
//! provides small differentiable regressors; [`explainers`] the attribution
//! methods; [`dependence`] MI/CMI/HSIC and MCIR; [`transforms`] the
//! perturbation, redundancy and collapse families; [`eri`] the five
//! component estimators and the combined report.

pub mod dependence;
pub mod eri;
pub mod error;
pub mod explainers;
pub mod metrics;
pub mod model;
pub mod rng;
pub mod transforms;

pub use error::{Error, Result};
pub use explainers::{EvalContext, Explainer, ExplainerKind};
pub use metrics::{AggregatorKind, AttributionVector, Component, DistanceKind, DriftEstimate, EriScore};
pub use model::{Checkpoint, Dataset, Model, NeuralModel};
