use super::objective::radius_slack;
use super::{check_gamma, convexity_warning, relative_change, AdmmConfig, SolveReport};
use crate::error::{Error, Result};
use crate::logdet_prox::t_rho_with_values;
use crate::matrix::SymmetricMatrix;
use crate::penalty::Penalty;

/// Per-iteration summary returned by [`SpectralAdmm::step`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    pub primal_residual: f64,
    pub relative_change: f64,
    pub objective: f64,
}

/// ADMM iterations for the spectral-norm side constraint:
///
/// ```text
/// V   ← Prox_{g/ρ}(Θ + Λ/ρ)
/// Θ   ← T_ρ(V − (Γ + Λ)/ρ)
/// Λ   ← Λ + ρ(Θ − V)
/// ```
///
/// Exposed as a state machine so callers can observe every iterate.
#[derive(Debug, Clone)]
pub struct SpectralAdmm<'a> {
    gamma: &'a SymmetricMatrix,
    penalty: Penalty,
    cfg: AdmmConfig,
    theta: SymmetricMatrix,
    v: SymmetricMatrix,
    dual: SymmetricMatrix,
    iterations: usize,
}

impl<'a> SpectralAdmm<'a> {
    pub fn new(gamma: &'a SymmetricMatrix, penalty: Penalty, cfg: AdmmConfig) -> Result<Self> {
        cfg.validate()?;
        check_gamma(gamma)?;
        penalty.validate_prox_scale(1.0 / cfg.rho)?;
        let theta = cfg.initial_theta(gamma.dim());
        Ok(Self {
            gamma,
            penalty,
            cfg,
            v: theta.clone(),
            theta,
            dual: SymmetricMatrix::zeros(gamma.dim()),
            iterations: 0,
        })
    }

    /// Replaces the starting point. `theta` must be feasible; `dual` defaults to zero.
    pub fn with_start(mut self, theta: SymmetricMatrix, dual: Option<SymmetricMatrix>) -> Result<Self> {
        let n = self.gamma.dim();
        if theta.dim() != n || dual.as_ref().is_some_and(|d| d.dim() != n) {
            return Err(Error::Input("warm start has the wrong dimension".into()));
        }
        let vals = theta.eigenvalues()?;
        if vals[n - 1] <= 0.0 || vals[0] > radius_slack(self.cfg.radius) {
            return Err(Error::Input(
                "warm start must be positive definite with spectral norm at most R".into(),
            ));
        }
        self.v = theta.clone();
        self.theta = theta;
        self.dual = dual.unwrap_or_else(|| SymmetricMatrix::zeros(n));
        Ok(self)
    }

    pub fn theta(&self) -> &SymmetricMatrix {
        &self.theta
    }

    /// The penalty-prox iterate; carries the exact zeros of the sparsity pattern.
    pub fn v(&self) -> &SymmetricMatrix {
        &self.v
    }

    pub fn dual(&self) -> &SymmetricMatrix {
        &self.dual
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn step(&mut self) -> Result<StepInfo> {
        let rho = self.cfg.rho;
        let radius = self.cfg.radius;
        let inv_rho = 1.0 / rho;

        let v_arg = self.theta.axpy(inv_rho, &self.dual);
        let v = self.penalty.matrix_prox_unchecked(&v_arg, inv_rho);
        let target = SymmetricMatrix::from_lower_fn(v.dim(), |i, j| {
            v.get(i, j) - (self.gamma.get(i, j) + self.dual.get(i, j)) * inv_rho
        });
        if !target.is_finite() {
            return Err(Error::Numerical(format!(
                "non-finite ADMM iterate at iteration {}",
                self.iterations + 1
            )));
        }
        let (theta, d) = t_rho_with_values(&target, rho, radius)?;
        if let Some(bad) = d.iter().find(|&&x| !(x > 0.0 && x <= radius)) {
            return Err(Error::Numerical(format!(
                "Θ-step eigenvalue {bad:e} left (0, R] at iteration {}",
                self.iterations + 1
            )));
        }
        if !theta.is_finite() {
            return Err(Error::Numerical("non-finite Θ iterate".into()));
        }

        let diff = &theta - &v;
        let primal_residual = diff.frobenius_norm();
        self.dual = self.dual.axpy(rho, &diff);
        let change = relative_change(&theta, &self.theta);
        let logdet: f64 = d.iter().map(|x| x.ln()).sum();
        let objective = self.gamma.dot(&theta) - logdet + self.penalty.matrix_value(&theta);

        self.theta = theta;
        self.v = v;
        self.iterations += 1;
        Ok(StepInfo {
            primal_residual,
            relative_change: change,
            objective,
        })
    }

    fn is_converged(&self, info: &StepInfo) -> bool {
        info.relative_change < self.cfg.tol
            && info.primal_residual <= 10.0 * self.cfg.tol * self.theta.frobenius_norm()
    }

    pub fn run(self) -> Result<(SymmetricMatrix, SolveReport)> {
        self.run_with(|_, _| {})
    }

    /// Runs to convergence or `max_iter`, calling `observe(k, Θᵏ)` after every iteration.
    pub fn run_with(
        mut self,
        observe: impl FnMut(usize, &SymmetricMatrix),
    ) -> Result<(SymmetricMatrix, SolveReport)> {
        let report = self.iterate(observe)?;
        Ok((self.theta, report))
    }

    /// Like [`run_with`](Self::run_with) but keeps the solver, so the final
    /// `(Θ, Λ)` pair can seed another solve.
    pub fn iterate(&mut self, mut observe: impl FnMut(usize, &SymmetricMatrix)) -> Result<SolveReport> {
        let mut report = SolveReport::default();
        report.warnings.extend(convexity_warning(&self.penalty, self.cfg.radius));
        while report.iterations < self.cfg.max_iter {
            let info = self.step()?;
            report.record(info.primal_residual, info.objective, info.relative_change);
            observe(self.iterations, &self.theta);
            if self.is_converged(&info) {
                report.converged = true;
                break;
            }
        }
        if !report.converged {
            log::debug!(
                "ADMM stopped after {} iterations without meeting tol {} (last change {:.3e})",
                report.iterations,
                self.cfg.tol,
                report.final_relative_change
            );
        }
        Ok(report)
    }

    pub fn into_parts(self) -> (SymmetricMatrix, SymmetricMatrix) {
        (self.theta, self.dual)
    }
}

pub fn solve_spectral(
    gamma: &SymmetricMatrix,
    penalty: &Penalty,
    cfg: &AdmmConfig,
) -> Result<(SymmetricMatrix, SolveReport)> {
    SpectralAdmm::new(gamma, *penalty, *cfg)?.run()
}

/// Warm-started variant: resumes from a previous `(Θ, Λ)` pair, e.g. along a λ path.
pub fn solve_spectral_from(
    gamma: &SymmetricMatrix,
    penalty: &Penalty,
    cfg: &AdmmConfig,
    theta: SymmetricMatrix,
    dual: Option<SymmetricMatrix>,
) -> Result<(SymmetricMatrix, SolveReport)> {
    SpectralAdmm::new(gamma, *penalty, *cfg)?
        .with_start(theta, dual)?
        .run()
}
