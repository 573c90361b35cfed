//! Anomaly-aware aggregation of subjective scores from several reviewers.
//!
//! The pipeline runs in a fixed order:
//!
//! 1. optional cross-class reconciliation ([`hypotest`]): per-reviewer
//!    two-sample mean and variance tests against the first class, followed by
//!    a blended affine rescaling of the other classes;
//! 2. two-stage anomaly screening ([`screening`]): a per-student deviation
//!    screen flags candidates, and a greedy pass over the score-weighted
//!    Kendall-τ objective confirms the ones whose removal buys the largest
//!    drop in pairwise disagreement;
//! 3. fuzzy synthetic evaluation ([`fse`]): min-max benefit normalization,
//!    reviewer weights mixing discrimination (coefficient of variation) and
//!    reliability (surviving score count), fused and mapped back onto a
//!    reference reviewer's scale.
//!
//! The crate is `no_std` with `alloc`; IO, configuration files and the CLI
//! live in the `gradefuse` crate.

#![no_std]
#![deny(rust_2018_idioms)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod dist;
pub mod fse;
pub mod grid;
pub mod hypotest;
pub mod model;
pub mod pipeline;
pub mod screening;
pub mod simulator;
mod stats;
mod warning;

pub use fse::{EvaluationResult, ReliabilityForm, StudentScore, WeightMode, WeightVector};
pub use grid::{ClassScope, ScoreGrid};
pub use model::{
    Cell, CellRef, ClassId, GradeTable, GradeTableBuilder, ModelError, Ranking, ReviewerId,
    Stage, Status, StudentId, StudentRef, Violation,
};
pub use pipeline::{Config, PipelineError, Representation, RunReport};
pub use screening::{AnomalyEntry, AnomalyReport, ScreeningInput};
pub use warning::Warning;
