//! Multithreshold entropy linear classifier (MELC) training with fast,
//! ε-bounded evaluation of the Cauchy-Schwarz divergence between projected
//! class densities.
//!
//! The crate is organised bottom-up:
//!
//! - [`dataset`] and [`variance`]: two-class point sets, projection and
//!   Silverman-rule kernel variances;
//! - [`potential`]: exact information potentials, D_CS and its gradient;
//! - [`approx`]: the sort-and-discard and binning evaluators and their
//!   adaptive threshold / width;
//! - [`optimize`]: the out-of-sphere penalized objective, CG and L-BFGS;
//! - [`classify`]: model fitting, prediction and balanced accuracy;
//! - [`harness`]: data loading, cross-validation, experiment grids and reports;
//! - [`synthetic`]: seeded Gaussian-blob and random datasets.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // negated comparisons deliberately reject NaN

pub mod approx;
pub mod classify;
pub mod dataset;
pub mod error;
pub mod harness;
pub mod optimize;
pub mod potential;
pub mod synthetic;
pub mod variance;

pub use approx::{ApproxConfig, Mode};
pub use classify::{balanced_accuracy, fit, EvalMetrics, MelcModel};
pub use dataset::{project, Label, LabeledDataset, PointSet};
pub use error::{MelcError, Result};
pub use optimize::{optimize, Method, OptimizationResult, OptimizerConfig};
pub use potential::{dcs_evaluate, ip_exact, DcsEvaluator, DcsValue, KernelStats, PotentialValue};
pub use variance::{variance_profile, KdeParams, VarianceProfile};
