//! Firm-year panel econometrics: variable construction, annual winsorization,
//! two-way fixed-effects OLS, a five-model mediation battery, and a seeded
//! synthetic-panel generator for validating the whole pipeline.
//!
//! The crate is organized as a pipeline:
//!
//! 1. [`ingest`] loads raw firm-year CSV rows, applies the sample screens,
//!    and derives the analysis variables ([`panel::DerivedVars`]).
//! 2. [`prep`] winsorizes by year and produces descriptive statistics and
//!    the correlation matrix.
//! 3. [`regress`] builds dummy-encoded designs and fits OLS with classical
//!    (optionally firm-clustered) inference.
//! 4. [`mediation`] runs the five-model battery and classifies the two
//!    agency-cost channels; [`robustness`] reruns key models against the
//!    next-period outcome.
//! 5. [`synth`] generates seeded panels with known coefficients so every
//!    estimator can be checked against ground truth.
//!
//! The [`cli`] module wires the pipeline to a command-line binary.

pub mod cli;
pub mod error;
pub mod formula;
pub mod ingest;
pub mod lstsq;
pub mod mediation;
pub mod panel;
pub mod prep;
pub mod regress;
pub mod report;
pub mod robustness;
pub mod synth;

pub use error::{Error, Result};
