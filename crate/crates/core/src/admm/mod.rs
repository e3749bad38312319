//! Solvers for the side-constrained penalized log-determinant program
//!
//! ```text
//! min_Θ  tr(ΓΘ) − log det Θ + g_λ(Θ)   subject to  Θ ⪰ 0, h(Θ) ≤ R
//! ```
//!
//! [`solve_spectral`] is the three-block ADMM specialised to the spectral-norm
//! constraint, [`solve_general`] handles any constraint with a computable
//! projection, and [`projected_prox_gradient`] is the simpler baseline that
//! projects after each proximal gradient step.

mod constraint;
mod general;
mod gradient;
mod objective;
mod spectral;
mod stationarity;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::SymmetricMatrix;
use crate::penalty::Penalty;

pub use constraint::{l1_ball_project_symmetric, project_constraint_set, project_spectral};
pub use general::solve_general;
pub use gradient::projected_prox_gradient;
pub use objective::{objective, objective_with_constraint, unbounded_ray_trace};
pub use spectral::{solve_spectral, solve_spectral_from, SpectralAdmm};
pub use stationarity::{stationarity_gap, stationarity_gap_with, StationarityOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ConstraintKind {
    #[default]
    Spectral,
    L1,
}

/// The feasible set `{Θ ⪰ 0, h(Θ) ≤ R}`, with `h` the spectral norm or the
/// entrywise ℓ1 norm summed over the full matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SideConstraint {
    pub kind: ConstraintKind,
    #[serde(rename = "R")]
    pub radius: f64,
}

impl SideConstraint {
    pub fn spectral(radius: f64) -> Self {
        Self {
            kind: ConstraintKind::Spectral,
            radius,
        }
    }

    pub fn l1(radius: f64) -> Self {
        Self {
            kind: ConstraintKind::L1,
            radius,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.radius > 0.0 && !self.radius.is_nan() {
            Ok(())
        } else {
            Err(Error::Config(format!("constraint radius must be positive, got {}", self.radius)))
        }
    }

    /// Value of `h` at `s` (assumes `s` symmetric; PSD-ness is checked separately).
    pub fn h(&self, s: &SymmetricMatrix) -> Result<f64> {
        match self.kind {
            ConstraintKind::Spectral => crate::matrix::spectral_norm(s),
            ConstraintKind::L1 => Ok(s.l1_entrywise()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdmmConfig {
    pub rho: f64,
    #[serde(rename = "R")]
    pub radius: f64,
    pub max_iter: usize,
    /// Tolerance on the relative iterate change `‖Θᵏ⁺¹ − Θᵏ‖_F / ‖Θᵏ‖_F`.
    pub tol: f64,
    pub constraint: ConstraintKind,
    /// Inner tolerance for Dykstra projections (ℓ1 constraint only).
    pub inner_tol: f64,
    pub inner_max_iter: usize,
}

impl Default for AdmmConfig {
    fn default() -> Self {
        Self {
            rho: 12.0,
            radius: 10.0,
            max_iter: 1000,
            tol: 5e-5,
            constraint: ConstraintKind::Spectral,
            inner_tol: 1e-8,
            inner_max_iter: 5000,
        }
    }
}

impl AdmmConfig {
    pub fn new(rho: f64, radius: f64) -> Self {
        Self {
            rho,
            radius,
            ..Self::default()
        }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn side_constraint(&self) -> SideConstraint {
        SideConstraint {
            kind: self.constraint,
            radius: self.radius,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(Error::Config(format!("rho must be positive, got {}", self.rho)));
        }
        if !(self.radius > 0.0) {
            return Err(Error::Config(format!("R must be positive, got {}", self.radius)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be at least 1".into()));
        }
        if !(self.inner_tol > 0.0) || self.inner_max_iter == 0 {
            return Err(Error::Config("inner Dykstra settings must be positive".into()));
        }
        Ok(())
    }

    /// Deterministic starting point: `I` when it is feasible, `(R/2)·I` otherwise.
    pub fn initial_theta(&self, dim: usize) -> SymmetricMatrix {
        if self.radius >= 1.0 {
            SymmetricMatrix::identity(dim)
        } else {
            SymmetricMatrix::scaled_identity(dim, self.radius / 2.0)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    /// `‖Θᵏ − Vᵏ‖_F` per iteration (the larger of the two residuals for the general solver).
    pub primal_residuals: Vec<f64>,
    pub objective_trace: Vec<f64>,
    pub relative_changes: Vec<f64>,
    pub converged: bool,
    pub final_relative_change: f64,
    /// Set by the proximal-gradient baseline when the objective rose for many consecutive steps.
    #[serde(default)]
    pub diverged: bool,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl SolveReport {
    fn record(&mut self, residual: f64, objective: f64, change: f64) {
        self.iterations += 1;
        self.primal_residuals.push(residual);
        self.objective_trace.push(objective);
        self.relative_changes.push(change);
        self.final_relative_change = change;
    }
}

/// Emits the nonconvexity diagnostic when `μ > 0` and `R > √(2/μ)`.
pub fn convexity_warning(penalty: &Penalty, radius: f64) -> Option<String> {
    let mu = penalty.mu();
    if mu > 0.0 && penalty.lambda() > 0.0 && radius > (2.0 / mu).sqrt() {
        let msg = format!(
            "R = {radius} exceeds sqrt(2/mu) = {:.4} for the {} penalty; the objective may be nonconvex on the feasible set",
            (2.0 / mu).sqrt(),
            penalty.kind()
        );
        log::warn!("{msg}");
        Some(msg)
    } else {
        None
    }
}

pub(crate) fn check_gamma(gamma: &SymmetricMatrix) -> Result<()> {
    if gamma.is_finite() {
        Ok(())
    } else {
        Err(Error::Input("covariance input has non-finite entries".into()))
    }
}

pub(crate) fn relative_change(new: &SymmetricMatrix, old: &SymmetricMatrix) -> f64 {
    let denom = old.frobenius_norm();
    let diff = (new - old).frobenius_norm();
    if denom > 0.0 {
        diff / denom
    } else {
        diff
    }
}
