//! Estimation error and support-recovery metrics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{norms, SymmetricMatrix};

/// Default magnitude above which an entry counts as selected.
pub const SUPPORT_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelativeErrors {
    pub frobenius: f64,
    pub spectral: f64,
    pub nuclear: f64,
}

/// `‖Θ̂ − Θ*‖ / ‖Θ*‖` in the Frobenius, spectral and nuclear norms.
pub fn relative_errors(theta_hat: &SymmetricMatrix, theta_star: &SymmetricMatrix) -> Result<RelativeErrors> {
    if theta_hat.dim() != theta_star.dim() {
        return Err(Error::Input(format!(
            "dimension mismatch: {} vs {}",
            theta_hat.dim(),
            theta_star.dim()
        )));
    }
    let base = norms(theta_star)?;
    if base.frobenius == 0.0 {
        return Err(Error::Domain("true precision matrix is zero".into()));
    }
    let diff = norms(&(theta_hat - theta_star))?;
    Ok(RelativeErrors {
        frobenius: diff.frobenius / base.frobenius,
        spectral: diff.spectral / base.spectral,
        nuclear: diff.nuclear / base.nuclear,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportMetrics {
    pub fpr: f64,
    pub fnr: f64,
    pub sum: f64,
}

/// FPR and FNR of the off-diagonal support (upper triangle), selecting `|θ| > threshold`.
/// The true support uses the same rule.
pub fn support_metrics(theta_hat: &SymmetricMatrix, theta_star: &SymmetricMatrix, threshold: f64) -> Result<SupportMetrics> {
    let m = theta_hat.dim();
    if theta_star.dim() != m {
        return Err(Error::Input(format!("dimension mismatch: {m} vs {}", theta_star.dim())));
    }
    if !(threshold >= 0.0) {
        return Err(Error::Input(format!("threshold must be nonnegative, got {threshold}")));
    }
    let (mut tp, mut fp, mut tn, mut fn_) = (0usize, 0usize, 0usize, 0usize);
    for i in 0..m {
        for j in (i + 1)..m {
            let truth = theta_star.get(i, j).abs() > threshold;
            let est = theta_hat.get(i, j).abs() > threshold;
            match (truth, est) {
                (true, true) => tp += 1,
                (true, false) => fn_ += 1,
                (false, true) => fp += 1,
                (false, false) => tn += 1,
            }
        }
    }
    let fpr = if fp + tn == 0 {
        log::warn!("true support is complete; FPR defined as 0");
        0.0
    } else {
        fp as f64 / (fp + tn) as f64
    };
    let fnr = if tp + fn_ == 0 {
        log::warn!("true support is empty; FNR defined as 0");
        0.0
    } else {
        fn_ as f64 / (tp + fn_) as f64
    };
    Ok(SupportMetrics { fpr, fnr, sum: fpr + fnr })
}

/// One row of a metrics table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub estimator: String,
    pub lambda: f64,
    #[serde(rename = "R")]
    pub radius: f64,
    pub seed: u64,
    pub rel_frobenius: f64,
    pub rel_spectral: f64,
    pub rel_nuclear: f64,
    pub fpr: f64,
    pub fnr: f64,
    pub fpr_plus_fnr: f64,
    pub iterations: usize,
    pub converged: bool,
    pub status: String,
}

impl MetricsRow {
    pub const HEADER: [&'static str; 13] = [
        "estimator",
        "lambda",
        "R",
        "seed",
        "rel_frobenius",
        "rel_spectral",
        "rel_nuclear",
        "fpr",
        "fnr",
        "fpr_plus_fnr",
        "iterations",
        "converged",
        "status",
    ];

    /// Row for a successful fit scored against the truth.
    pub fn scored(
        estimator: impl Into<String>,
        lambda: f64,
        radius: f64,
        seed: u64,
        theta_hat: &SymmetricMatrix,
        theta_star: &SymmetricMatrix,
        iterations: usize,
        converged: bool,
    ) -> Result<Self> {
        let e = relative_errors(theta_hat, theta_star)?;
        let s = support_metrics(theta_hat, theta_star, SUPPORT_THRESHOLD)?;
        Ok(Self {
            estimator: estimator.into(),
            lambda,
            radius,
            seed,
            rel_frobenius: e.frobenius,
            rel_spectral: e.spectral,
            rel_nuclear: e.nuclear,
            fpr: s.fpr,
            fnr: s.fnr,
            fpr_plus_fnr: s.sum,
            iterations,
            converged,
            status: "ok".into(),
        })
    }

    /// Row for a fit without ground truth or a failed cell; metrics are NaN.
    pub fn unscored(estimator: impl Into<String>, lambda: f64, radius: f64, seed: u64, status: impl Into<String>) -> Self {
        Self {
            estimator: estimator.into(),
            lambda,
            radius,
            seed,
            rel_frobenius: f64::NAN,
            rel_spectral: f64::NAN,
            rel_nuclear: f64::NAN,
            fpr: f64::NAN,
            fnr: f64::NAN,
            fpr_plus_fnr: f64::NAN,
            iterations: 0,
            converged: false,
            status: status.into(),
        }
    }
}

/// Writes rows as CSV with [`MetricsRow::HEADER`].
pub fn write_metrics_csv<W: std::io::Write>(out: W, rows: &[MetricsRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    if rows.is_empty() {
        w.write_record(MetricsRow::HEADER)?;
    }
    w.flush()?;
    Ok(())
}
