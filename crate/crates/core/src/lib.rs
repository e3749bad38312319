//! Sparse precision-matrix estimation from possibly indefinite covariance
//! surrogates via the side-constrained graphical Lasso.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::too_many_arguments)]

pub mod admm;
pub mod config;
pub mod cov_inputs;
pub mod error;
pub mod estimators;
pub mod eval;
pub mod graph;
pub mod io;
pub mod logdet_prox;
pub mod matrix;
pub mod penalty;
pub mod sim;
pub mod sweep;
pub mod tuning;

pub use admm::{AdmmConfig, ConstraintKind, SideConstraint, SolveReport};
pub use config::Tolerances;
pub use cov_inputs::{CovarianceKind, MaskedData, SpectrumStats};
pub use error::{Error, Result};
pub use estimators::{EstimateResult, EstimatorSpec, EstimatorVariant, RadiusSpec};
pub use eval::{MetricsRow, RelativeErrors, SupportMetrics};
pub use matrix::{EigenDecomposition, Norms, SymmetricMatrix};
pub use penalty::{Penalty, PenaltyKind};
pub use sim::{GeneratedDataset, ModelFamily, ModelSpec, NoiseMeta, TrueModel};
pub use tuning::{Criterion, TuningResult};
