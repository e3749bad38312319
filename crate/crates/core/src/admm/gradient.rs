use super::{check_gamma, relative_change, AdmmConfig, SolveReport};
use crate::error::{Error, Result};
use crate::matrix::{eigendecompose, SymmetricMatrix};
use crate::penalty::Penalty;

/// Consecutive objective increases after which the baseline is declared divergent.
const DIVERGENCE_RUN: usize = 50;

/// Projected proximal gradient baseline:
/// `Θ ← Proj_{0 ⪯ Θ ⪯ R·I}(Prox_{step·g}(Θ − step·(Γ − Θ⁻¹)))`.
///
/// No convergence guarantee. If the objective increases for 50 consecutive
/// iterations the run stops with `diverged = true`.
pub fn projected_prox_gradient(
    gamma: &SymmetricMatrix,
    penalty: &Penalty,
    step: f64,
    radius: f64,
    max_iter: usize,
    tol: f64,
) -> Result<(SymmetricMatrix, SolveReport)> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::Config(format!("step must be positive, got {step}")));
    }
    let cfg = AdmmConfig::new(1.0 / step, radius).with_tol(tol).with_max_iter(max_iter);
    cfg.validate()?;
    check_gamma(gamma)?;
    penalty.validate_prox_scale(step)?;

    let mut theta = cfg.initial_theta(gamma.dim());
    let mut inverse = SymmetricMatrix::scaled_identity(gamma.dim(), 1.0 / theta.get(0, 0));
    let mut report = SolveReport::default();
    let mut prev_obj = f64::INFINITY;
    let mut increases = 0;

    while report.iterations < max_iter {
        let grad_step = SymmetricMatrix::from_lower_fn(theta.dim(), |i, j| {
            theta.get(i, j) - step * (gamma.get(i, j) - inverse.get(i, j))
        });
        if !grad_step.is_finite() {
            return Err(Error::Numerical("non-finite gradient iterate".into()));
        }
        let proxed = penalty.matrix_prox_unchecked(&grad_step, step);
        let evd = eigendecompose(&proxed)?;
        let d: Vec<f64> = evd.values().iter().map(|v| v.clamp(0.0, radius)).collect();
        let smallest = d.iter().copied().fold(f64::INFINITY, f64::min);
        if smallest <= f64::MIN_POSITIVE {
            return Err(Error::Numerical(format!(
                "singular iterate at iteration {} (projection zeroed an eigenvalue)",
                report.iterations + 1
            )));
        }
        let next = evd.with_values(&d);
        let inv_d: Vec<f64> = d.iter().map(|v| 1.0 / v).collect();
        inverse = evd.with_values(&inv_d);

        let logdet: f64 = d.iter().map(|v| v.ln()).sum();
        let obj = gamma.dot(&next) - logdet + penalty.matrix_value(&next);
        let change = relative_change(&next, &theta);
        let residual = (&next - &proxed).frobenius_norm();
        theta = next;
        report.record(residual, obj, change);

        increases = if obj > prev_obj { increases + 1 } else { 0 };
        prev_obj = obj;
        if increases >= DIVERGENCE_RUN {
            report.diverged = true;
            log::warn!("projected gradient objective rose for {DIVERGENCE_RUN} consecutive iterations");
            break;
        }
        if change < tol {
            report.converged = true;
            break;
        }
    }
    Ok((theta, report))
}
