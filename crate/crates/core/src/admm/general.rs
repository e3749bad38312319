use super::constraint::project_constraint_set;
use super::{check_gamma, convexity_warning, relative_change, AdmmConfig, SideConstraint, SolveReport};
use crate::error::{Error, Result};
use crate::logdet_prox::t_rho_unconstrained_with_values;
use crate::matrix::SymmetricMatrix;
use crate::penalty::Penalty;

/// ADMM for an arbitrary side constraint with a computable projection:
///
/// ```text
/// V₁ ← Prox_{g/ρ}(Θ + Λ₁/ρ)
/// V₂ ← Proj_X(Θ + Λ₂/ρ)
/// Θ  ← T̃_ρ((ρV₁ + ρV₂ − Γ − Λ₁ − Λ₂) / 2ρ)
/// Λᵢ ← Λᵢ + ρ(Θ − Vᵢ)
/// ```
///
/// Returns the Θ iterate. The objective trace omits the indicator, since Θ only
/// reaches the feasible set in the limit. Convergence uses the larger of the
/// two primal residuals.
pub fn solve_general(
    gamma: &SymmetricMatrix,
    penalty: &Penalty,
    constraint: &SideConstraint,
    cfg: &AdmmConfig,
) -> Result<(SymmetricMatrix, SolveReport)> {
    cfg.validate()?;
    constraint.validate()?;
    check_gamma(gamma)?;
    let rho = cfg.rho;
    let inv_rho = 1.0 / rho;
    penalty.validate_prox_scale(inv_rho)?;

    let n = gamma.dim();
    let start_cfg = AdmmConfig {
        radius: match constraint.kind {
            super::ConstraintKind::Spectral => constraint.radius,
            // Θ = cI has ℓ1 norm c·m.
            super::ConstraintKind::L1 => constraint.radius / n as f64,
        },
        ..*cfg
    };
    let mut theta = start_cfg.initial_theta(n);
    let mut dual1 = SymmetricMatrix::zeros(n);
    let mut dual2 = SymmetricMatrix::zeros(n);

    let mut report = SolveReport::default();
    if constraint.kind == super::ConstraintKind::Spectral {
        report.warnings.extend(convexity_warning(penalty, constraint.radius));
    }
    while report.iterations < cfg.max_iter {
        let v1 = penalty.matrix_prox_unchecked(&theta.axpy(inv_rho, &dual1), inv_rho);
        let v2 = project_constraint_set(&theta.axpy(inv_rho, &dual2), constraint, cfg.inner_tol, cfg.inner_max_iter)?;
        let target = SymmetricMatrix::from_lower_fn(n, |i, j| {
            0.5 * (v1.get(i, j) + v2.get(i, j))
                - 0.5 * inv_rho * (gamma.get(i, j) + dual1.get(i, j) + dual2.get(i, j))
        });
        if !target.is_finite() {
            return Err(Error::Numerical(format!(
                "non-finite ADMM iterate at iteration {}",
                report.iterations + 1
            )));
        }
        let (next, d) = t_rho_unconstrained_with_values(&target, rho)?;
        let r1 = &next - &v1;
        let r2 = &next - &v2;
        dual1 = dual1.axpy(rho, &r1);
        dual2 = dual2.axpy(rho, &r2);
        let residual = r1.frobenius_norm().max(r2.frobenius_norm());
        let change = relative_change(&next, &theta);
        let logdet: f64 = d.iter().map(|x| x.ln()).sum();
        let obj = gamma.dot(&next) - logdet + penalty.matrix_value(&next);
        theta = next;
        report.record(residual, obj, change);
        if change < cfg.tol && residual <= 10.0 * cfg.tol * theta.frobenius_norm() {
            report.converged = true;
            break;
        }
    }
    Ok((theta, report))
}
