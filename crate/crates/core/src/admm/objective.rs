use super::SideConstraint;
use crate::error::{Error, Result};
use crate::matrix::{eigendecompose, SymmetricMatrix};
use crate::penalty::Penalty;

/// Slack allowed when testing `λ_max(Θ) ≤ R` so that iterates sitting exactly
/// on the boundary are not rejected because of reconstruction round-off.
pub(crate) fn radius_slack(radius: f64) -> f64 {
    radius * (1.0 + 1e-9)
}

/// `tr(ΓΘ) − log det Θ + g_λ(Θ) + 𝟙{0 ⪯ Θ ⪯ R·I}`; `+∞` outside the domain.
///
/// `radius` may be `f64::INFINITY` to drop the side constraint.
pub fn objective(gamma: &SymmetricMatrix, theta: &SymmetricMatrix, penalty: &Penalty, radius: f64) -> f64 {
    let Ok(evd) = eigendecompose(theta) else {
        return f64::INFINITY;
    };
    if evd.min_value() <= 0.0 || evd.max_value() > radius_slack(radius) {
        return f64::INFINITY;
    }
    let logdet: f64 = evd.values().iter().map(|v| v.ln()).sum();
    gamma.dot(theta) - logdet + penalty.matrix_value(theta)
}

/// Objective with a general side constraint `{Θ ⪰ 0, h(Θ) ≤ R}`.
pub fn objective_with_constraint(
    gamma: &SymmetricMatrix,
    theta: &SymmetricMatrix,
    penalty: &Penalty,
    constraint: &SideConstraint,
) -> f64 {
    match constraint.h(theta) {
        Ok(h) if h <= radius_slack(constraint.radius) => objective(gamma, theta, penalty, f64::INFINITY),
        _ => f64::INFINITY,
    }
}

/// Objective values along the ray `I + t·v vᵀ`, `v` the eigenvector of the
/// smallest eigenvalue of `Γ`, without any side constraint.
///
/// Requires a direction along which the objective can decrease without bound:
/// a negative eigenvalue, or a zero eigenvalue paired with a bounded penalty.
pub fn unbounded_ray_trace(gamma: &SymmetricMatrix, penalty: &Penalty, t_grid: &[f64]) -> Result<Vec<f64>> {
    let evd = eigendecompose(gamma)?;
    let sigma = evd.min_value();
    let scale = evd.max_value().abs().max(sigma.abs()).max(1.0);
    let zero_tol = 1e-12 * scale;
    if sigma > zero_tol || (sigma.abs() <= zero_tol && !penalty.is_bounded()) {
        return Err(Error::Precondition(format!(
            "smallest eigenvalue {sigma:.4e} admits no unbounded descent ray for this penalty"
        )));
    }
    let n = gamma.dim();
    let v = evd.vector(n - 1);
    let trace = gamma.trace();
    t_grid
        .iter()
        .map(|&t| {
            if t < 0.0 {
                return Err(Error::Input(format!("ray parameter must be nonnegative, got {t}")));
            }
            let theta = SymmetricMatrix::from_lower_fn(n, |i, j| {
                let id = if i == j { 1.0 } else { 0.0 };
                id + t * v[i] * v[j]
            });
            // det(I + t v vᵀ) = 1 + t for unit v.
            Ok(trace + t * sigma - t.ln_1p() + penalty.matrix_value(&theta))
        })
        .collect()
}
