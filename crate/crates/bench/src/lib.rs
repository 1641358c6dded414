//! ERI-Bench: synthetic tasks, experiment protocols and report emission for
//! the reliability metrics in `eri-core`.

pub mod cli;
pub mod collapse;
pub mod config;
pub mod cost;
pub mod decoupling;
pub mod error;
pub mod fit;
pub mod local;
pub mod methods;
pub mod minimality;
pub mod report;
pub mod scm;
pub mod stats;
pub mod tasks;

pub use error::{BenchError, Result};
