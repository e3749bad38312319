//! Penalty selection by BIC on the observed-data likelihood and by K-fold
//! cross-validation.

use std::collections::HashMap;

use faer::{Mat, Side};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::cov_inputs::{estimate_zeta, CovarianceKind, MaskedData};
use crate::error::{Error, Result};
use crate::estimators::{estimate_path, EstimatorSpec};
use crate::eval::SUPPORT_THRESHOLD;
use crate::matrix::SymmetricMatrix;

const LN_2PI: f64 = 1.837_877_066_409_345_3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Bic,
    Cv,
}

impl std::str::FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bic" => Ok(Self::Bic),
            "cv" => Ok(Self::Cv),
            _ => Err(Error::Config(format!("unknown criterion {s:?} (bic, cv)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningResult {
    pub grid: Vec<f64>,
    pub scores: Vec<f64>,
    pub chosen: f64,
    pub criterion: Criterion,
}

/// Cholesky factor of one observed sub-block, shared by rows with the same mask.
struct Factor {
    idx: Vec<usize>,
    l: Mat<f64>,
    log_det: f64,
}

impl Factor {
    fn new(sigma: &SymmetricMatrix, mask: &[bool]) -> Option<Self> {
        let idx: Vec<usize> = mask.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect();
        if idx.is_empty() {
            return Some(Self {
                idx,
                l: Mat::zeros(0, 0),
                log_det: 0.0,
            });
        }
        let sub = sigma.submatrix(&idx);
        let llt = sub.as_mat().llt(Side::Lower).ok()?;
        let l = llt.L().to_owned();
        let mut log_det = 0.0;
        for i in 0..idx.len() {
            let d = l[(i, i)];
            if !(d > 0.0 && d.is_finite()) {
                return None;
            }
            log_det += 2.0 * d.ln();
        }
        Some(Self { idx, l, log_det })
    }

    fn loglik(&self, x: &[f64]) -> f64 {
        let k = self.idx.len();
        if k == 0 {
            return 0.0;
        }
        // Forward substitution L y = x_U; the quadratic form is ‖y‖².
        let mut y = vec![0.0; k];
        let mut quad = 0.0;
        for i in 0..k {
            let mut s = x[self.idx[i]];
            for (j, yj) in y.iter().enumerate().take(i) {
                s -= self.l[(i, j)] * yj;
            }
            y[i] = s / self.l[(i, i)];
            quad += y[i] * y[i];
        }
        -0.5 * (k as f64 * LN_2PI + self.log_det + quad)
    }
}

/// Gaussian log-density of the observed coordinates of one row under `Σ̂_{U,U}`.
/// A singular sub-block is reported as row 0.
pub fn observed_loglik(x: &[f64], mask: &[bool], sigma: &SymmetricMatrix) -> Result<f64> {
    if x.len() != sigma.dim() || mask.len() != sigma.dim() {
        return Err(Error::Input("row length does not match the covariance dimension".into()));
    }
    Factor::new(sigma, mask)
        .map(|f| f.loglik(x))
        .ok_or(Error::Evaluation { row: 0 })
}

/// Sum of [`observed_loglik`] over the given rows (all rows when `rows` is `None`).
/// Rows sharing a mask pattern share one factorization; errors name the data row.
pub fn total_observed_loglik(data: &MaskedData, sigma: &SymmetricMatrix, rows: Option<&[usize]>) -> Result<f64> {
    if sigma.dim() != data.ncols() {
        return Err(Error::Input("covariance dimension does not match the data".into()));
    }
    let all: Vec<usize>;
    let rows = match rows {
        Some(r) => r,
        None => {
            all = (0..data.nrows()).collect();
            &all
        }
    };
    let mut cache: HashMap<&[bool], Option<Factor>> = HashMap::new();
    let mut total = 0.0;
    for &i in rows {
        let mask = data.row_mask(i);
        let f = cache.entry(mask).or_insert_with(|| Factor::new(sigma, mask));
        match f {
            Some(f) => total += f.loglik(&data.row(i)),
            None => return Err(Error::Evaluation { row: i }),
        }
    }
    Ok(total)
}

/// Nonzero entries on and above the diagonal.
pub fn nonzero_count(theta: &SymmetricMatrix) -> usize {
    let m = theta.dim();
    (0..m)
        .flat_map(|i| (i..m).map(move |j| (i, j)))
        .filter(|&(i, j)| theta.get(i, j).abs() > SUPPORT_THRESHOLD)
        .count()
}

/// `−2·Σᵢ ℓ(Xᵢ, Uᵢ; Θ̂⁻¹) + log(n)·#{j ≤ j′ : Θ̂_jj′ ≠ 0}`.
pub fn bic(data: &MaskedData, theta_hat: &SymmetricMatrix) -> Result<f64> {
    let sigma = theta_hat.inverse()?;
    let ll = total_observed_loglik(data, &sigma, None)?;
    Ok(-2.0 * ll + (data.nrows() as f64).ln() * nonzero_count(theta_hat) as f64)
}

/// Index of the best score; ties go to the smaller λ.
fn choose(grid: &[f64], scores: &[f64], criterion: Criterion) -> usize {
    let better = |a: f64, b: f64| match criterion {
        Criterion::Bic => a < b,
        Criterion::Cv => a > b,
    };
    let mut best = 0;
    for k in 1..grid.len() {
        let (s, b) = (scores[k], scores[best]);
        if better(s, b) || (s == b && grid[k] < grid[best]) || b.is_nan() {
            best = k;
        }
    }
    best
}

/// Distinct λ values in descending order (for warm starts) and each grid entry's
/// position among them.
fn unique_descending(grid: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut uniq = grid.to_vec();
    uniq.sort_by(|a, b| b.total_cmp(a));
    uniq.dedup();
    let pos = grid
        .iter()
        .map(|g| uniq.iter().position(|u| u == g).expect("present"))
        .collect();
    (uniq, pos)
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Config("λ grid is empty".into()));
    }
    if let Some(l) = grid.iter().find(|l| !(l.is_finite() && **l >= 0.0)) {
        return Err(Error::Config(format!("invalid λ {l} in grid")));
    }
    Ok(())
}

/// BIC over a λ grid, fitting on all rows. Non-converged or failed fits score +∞.
pub fn bic_select(
    data: &MaskedData,
    grid: &[f64],
    spec: &EstimatorSpec,
    covariance: CovarianceKind,
    oracle: Option<&SymmetricMatrix>,
) -> Result<TuningResult> {
    check_grid(grid)?;
    let gamma = covariance.build(data)?;
    let (uniq, pos) = unique_descending(grid);
    let fits = estimate_path(&gamma, spec, &uniq, oracle)?;
    let uniq_scores: Vec<f64> = fits
        .iter()
        .zip(&uniq)
        .map(|(fit, &l)| match fit {
            Ok(r) if r.converged() => bic(data, &r.theta_hat).unwrap_or_else(|e| {
                log::warn!("BIC at λ={l} failed: {e}");
                f64::INFINITY
            }),
            Ok(_) => {
                log::warn!("fit at λ={l} did not converge; BIC set to +inf");
                f64::INFINITY
            }
            Err(e) => {
                log::warn!("fit at λ={l} failed: {e}");
                f64::INFINITY
            }
        })
        .collect();
    let scores: Vec<f64> = pos.iter().map(|&p| uniq_scores[p]).collect();
    let best = choose(grid, &scores, Criterion::Bic);
    Ok(TuningResult {
        grid: grid.to_vec(),
        scores,
        chosen: grid[best],
        criterion: Criterion::Bic,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvOptions {
    pub folds: usize,
    pub seed: u64,
    pub covariance: CovarianceKind,
    /// Re-estimate ζ on each training fold instead of using the data's ζ.
    pub estimate_zeta: bool,
}

/// Fold index of each row: a seeded shuffle cut into `k` near-equal parts.
pub fn fold_assignment(n: usize, k: usize, seed: u64) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut ChaCha20Rng::seed_from_u64(seed));
    let mut fold = vec![0; n];
    for (pos, &row) in perm.iter().enumerate() {
        fold[row] = pos * k / n;
    }
    fold
}

/// K-fold cross-validated held-out observed log-likelihood (maximized).
/// A fold whose fit fails or does not converge contributes −∞ for that λ.
pub fn cross_validate(
    data: &MaskedData,
    grid: &[f64],
    spec: &EstimatorSpec,
    opts: &CvOptions,
    oracle: Option<&SymmetricMatrix>,
) -> Result<TuningResult> {
    check_grid(grid)?;
    let n = data.nrows();
    let k = opts.folds;
    if k < 2 || n < k {
        return Err(Error::Config(format!("need 2 ≤ K ≤ n, got K={k}, n={n}")));
    }
    let (uniq, pos) = unique_descending(grid);
    let fold = fold_assignment(n, k, opts.seed);
    let mut totals = vec![0.0; uniq.len()];
    for f in 0..k {
        let train: Vec<usize> = (0..n).filter(|&i| fold[i] != f).collect();
        let test: Vec<usize> = (0..n).filter(|&i| fold[i] == f).collect();
        let scores = fold_scores(data, &train, &test, &uniq, spec, opts, oracle);
        for (t, s) in totals.iter_mut().zip(scores) {
            *t += s;
        }
    }
    let scores: Vec<f64> = pos.iter().map(|&p| totals[p]).collect();
    if scores.iter().all(|s| *s == f64::NEG_INFINITY) {
        log::warn!("every cross-validation score is -inf");
    }
    let best = choose(grid, &scores, Criterion::Cv);
    Ok(TuningResult {
        grid: grid.to_vec(),
        scores,
        chosen: grid[best],
        criterion: Criterion::Cv,
    })
}

fn fold_scores(
    data: &MaskedData,
    train: &[usize],
    test: &[usize],
    lambdas: &[f64],
    spec: &EstimatorSpec,
    opts: &CvOptions,
    oracle: Option<&SymmetricMatrix>,
) -> Vec<f64> {
    let failed = |why: &dyn std::fmt::Display| {
        log::warn!("cross-validation fold failed: {why}");
        vec![f64::NEG_INFINITY; lambdas.len()]
    };
    let mut train_data = data.select_rows(train);
    if opts.estimate_zeta {
        let z = estimate_zeta(train_data.mask(), train.len(), data.ncols());
        if let Err(e) = train_data.set_zeta(z) {
            return failed(&e);
        }
    }
    let gamma = match opts.covariance.build(&train_data) {
        Ok(g) => g,
        Err(e) => return failed(&e),
    };
    let fits = match estimate_path(&gamma, spec, lambdas, oracle) {
        Ok(f) => f,
        Err(e) => return failed(&e),
    };
    fits.into_iter()
        .zip(lambdas)
        .map(|(fit, &l)| {
            let r = match fit {
                Ok(r) if r.converged() => r,
                Ok(_) => {
                    log::warn!("fold fit at λ={l} did not converge; scored -inf");
                    return f64::NEG_INFINITY;
                }
                Err(e) => {
                    log::warn!("fold fit at λ={l} failed: {e}");
                    return f64::NEG_INFINITY;
                }
            };
            r.theta_hat
                .inverse()
                .and_then(|sigma| total_observed_loglik(data, &sigma, Some(test)))
                .unwrap_or_else(|e| {
                    log::warn!("held-out likelihood at λ={l} failed: {e}");
                    f64::NEG_INFINITY
                })
        })
        .collect()
}
