//! Joint evaluation of predictive robustness and uncertainty quality for
//! scalar regression, multi-hypothesis trajectory prediction and
//! weighted-hypothesis translation.
//!
//! The crate is organised by concern:
//!
//! * [`model`]: record types, shift tags and validation.
//! * [`trajectory`], [`regression`], [`translation`]: task metrics.
//! * [`retention`]: error / F1 retention curves, their AUCs and ROC-AUC.
//! * [`rip`]: ensemble aggregation of trajectory likelihoods.
//! * [`synth`]: seeded synthetic datasets and analytic likelihood backends.
//! * [`records`], [`report`], [`plot`]: JSONL records, the evaluation
//!   suite and its on-disk report bundle.

pub mod error;
pub mod model;
pub mod plot;
pub mod records;
pub mod regression;
pub mod report;
pub mod retention;
pub mod rip;
pub mod rng;
pub mod synth;
pub mod trajectory;
pub mod translation;

pub use error::{Error, Result};
