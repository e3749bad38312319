//! λ-path sweeps producing metrics rows.

use crate::estimators::{estimate_path, EstimatorSpec, EstimatorVariant, RadiusSpec};
use crate::eval::MetricsRow;
use crate::matrix::SymmetricMatrix;
use crate::penalty::PenaltyKind;

/// Short identifier such as `nonproj-l1`, `proj-mcp` or `nodewise`.
pub fn estimator_label(spec: &EstimatorSpec) -> String {
    match spec.variant {
        EstimatorVariant::Nodewise => "nodewise".into(),
        v => format!("{v}-{}", spec.penalty.kind()),
    }
}

/// Radius recorded in metrics rows; per-node radii are reported by their scale.
pub fn radius_value(spec: &EstimatorSpec) -> f64 {
    match spec.radius {
        RadiusSpec::Fixed(r) => r,
        RadiusSpec::PerNode { per_node_scale } => per_node_scale,
    }
}

/// Fits `spec` along `lambdas` (in the given order, warm-started) and scores
/// each fit against `theta_star` when given. Failures become rows with an
/// error status instead of aborting.
pub fn sweep_path(
    gamma: &SymmetricMatrix,
    spec: &EstimatorSpec,
    lambdas: &[f64],
    theta_star: Option<&SymmetricMatrix>,
    seed: u64,
) -> Vec<MetricsRow> {
    let label = estimator_label(spec);
    let r = radius_value(spec);
    let fits = match estimate_path(gamma, spec, lambdas, theta_star) {
        Ok(f) => f,
        Err(e) => {
            return lambdas
                .iter()
                .map(|&l| MetricsRow::unscored(label.clone(), l, r, seed, format!("error: {e}")))
                .collect()
        }
    };
    fits.into_iter()
        .zip(lambdas)
        .map(|(fit, &l)| match fit {
            Err(e) => MetricsRow::unscored(label.clone(), l, r, seed, format!("error: {e}")),
            Ok(res) => {
                let iterations = match (&res.report, &res.nodes) {
                    (Some(rep), _) => rep.iterations,
                    (None, Some(nodes)) => nodes.iter().map(|n| n.iterations).max().unwrap_or(0),
                    _ => 0,
                };
                let converged = res.converged();
                let status = if converged { "ok" } else { "not_converged" };
                let mut row = match theta_star {
                    Some(t) => MetricsRow::scored(label.clone(), l, r, seed, &res.theta_hat, t, iterations, converged)
                        .unwrap_or_else(|e| MetricsRow::unscored(label.clone(), l, r, seed, format!("error: {e}"))),
                    None => {
                        let mut row = MetricsRow::unscored(label.clone(), l, r, seed, status);
                        row.iterations = iterations;
                        row.converged = converged;
                        row
                    }
                };
                if row.status == "ok" {
                    row.status = status.into();
                }
                row
            }
        })
        .collect()
}

/// Geometric grid from `hi` down to `lo` with `n` points.
pub fn log_grid(hi: f64, lo: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![hi],
        _ => (0..n)
            .map(|k| hi * (lo / hi).powf(k as f64 / (n - 1) as f64))
            .collect(),
    }
}

/// Row minimizing `key` among rows with status `ok`/`not_converged` and finite key.
pub fn best_row(rows: &[MetricsRow], key: impl Fn(&MetricsRow) -> f64) -> Option<&MetricsRow> {
    rows.iter()
        .filter(|r| key(r).is_finite())
        .min_by(|a, b| key(a).total_cmp(&key(b)))
}

pub fn is_l1(spec: &EstimatorSpec) -> bool {
    spec.penalty.kind() == PenaltyKind::L1
}
