//! Covariance surrogates built from corrupted data, and spectrum diagnostics.

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::linf_psd_project;
use crate::matrix::SymmetricMatrix;

/// n×m data with a per-cell observation mask and per-column observation rates.
///
/// Unobserved cells of `x` are stored as zero.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedData {
    x: Mat<f64>,
    mask: Vec<bool>,
    zeta: Vec<f64>,
}

impl MaskedData {
    /// Builds from raw values and a row-major mask; masked-out values are zeroed.
    pub fn new(x: Mat<f64>, mask: Vec<bool>, zeta: Vec<f64>) -> Result<Self> {
        let (n, m) = (x.nrows(), x.ncols());
        if n == 0 || m == 0 {
            return Err(Error::Input("data matrix must be nonempty".into()));
        }
        if mask.len() != n * m {
            return Err(Error::Input(format!("mask has {} cells, expected {}", mask.len(), n * m)));
        }
        if zeta.len() != m {
            return Err(Error::Input(format!("zeta has {} entries, expected {m}", zeta.len())));
        }
        for (j, &z) in zeta.iter().enumerate() {
            if !(0.0..=1.0).contains(&z) {
                return Err(Error::Input(format!("zeta[{j}] = {z} is outside [0, 1]")));
            }
        }
        let mut x = x;
        for i in 0..n {
            for j in 0..m {
                if !mask[i * m + j] {
                    x[(i, j)] = 0.0;
                } else if !x[(i, j)].is_finite() {
                    return Err(Error::Input(format!("non-finite observed value at ({i}, {j})")));
                }
            }
        }
        Ok(Self { x, mask, zeta })
    }

    /// Mask and ζ estimated from the data (ζ̂ = observed fraction per column).
    pub fn with_estimated_zeta(x: Mat<f64>, mask: Vec<bool>) -> Result<Self> {
        let m = x.ncols();
        let n = x.nrows();
        if mask.len() != n * m {
            return Err(Error::Input(format!("mask has {} cells, expected {}", mask.len(), n * m)));
        }
        let zeta = estimate_zeta(&mask, n, m);
        Self::new(x, mask, zeta)
    }

    pub fn fully_observed(x: Mat<f64>) -> Result<Self> {
        let len = x.nrows() * x.ncols();
        let m = x.ncols();
        Self::new(x, vec![true; len], vec![1.0; m])
    }

    pub fn nrows(&self) -> usize {
        self.x.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> &Mat<f64> {
        &self.x
    }

    pub fn zeta(&self) -> &[f64] {
        &self.zeta
    }

    pub fn set_zeta(&mut self, zeta: Vec<f64>) -> Result<()> {
        let m = self.ncols();
        if zeta.len() != m || zeta.iter().any(|z| !(0.0..=1.0).contains(z)) {
            return Err(Error::Input(format!("zeta must have {m} entries in [0, 1]")));
        }
        self.zeta = zeta;
        Ok(())
    }

    #[inline]
    pub fn observed(&self, i: usize, j: usize) -> bool {
        self.mask[i * self.ncols() + j]
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn row_mask(&self, i: usize) -> &[bool] {
        let m = self.ncols();
        &self.mask[i * m..(i + 1) * m]
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.ncols()).map(|j| self.x[(i, j)]).collect()
    }

    /// Subset of rows, keeping ζ.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let m = self.ncols();
        let x = Mat::from_fn(rows.len(), m, |r, j| self.x[(rows[r], j)]);
        let mask = rows.iter().flat_map(|&i| self.row_mask(i).iter().copied()).collect();
        Self {
            x,
            mask,
            zeta: self.zeta.clone(),
        }
    }

    /// Subtracts from each column the mean of its observed entries.
    pub fn center_observed(&mut self) {
        let (n, m) = (self.nrows(), self.ncols());
        for j in 0..m {
            let (mut s, mut c) = (0.0, 0usize);
            for i in 0..n {
                if self.observed(i, j) {
                    s += self.x[(i, j)];
                    c += 1;
                }
            }
            if c == 0 {
                continue;
            }
            let mean = s / c as f64;
            for i in 0..n {
                if self.observed(i, j) {
                    self.x[(i, j)] -= mean;
                }
            }
        }
    }
}

/// `XᵀX / n` as a symmetric matrix.
fn second_moment(x: &Mat<f64>) -> SymmetricMatrix {
    let n = x.nrows() as f64;
    let g = x.transpose() * x;
    SymmetricMatrix::from_mat(Mat::from_fn(g.nrows(), g.ncols(), |i, j| g[(i, j)] / n))
        .expect("square by construction")
}

/// Sample second moment `XᵀX / n`, optionally after centering columns.
pub fn sample_covariance(x: &Mat<f64>, center: bool) -> Result<SymmetricMatrix> {
    if x.nrows() == 0 || x.ncols() == 0 {
        return Err(Error::Input("data matrix must be nonempty".into()));
    }
    if center {
        let n = x.nrows();
        let means: Vec<f64> = (0..x.ncols())
            .map(|j| (0..n).map(|i| x[(i, j)]).sum::<f64>() / n as f64)
            .collect();
        let xc = Mat::from_fn(n, x.ncols(), |i, j| x[(i, j)] - means[j]);
        Ok(second_moment(&xc))
    } else {
        Ok(second_moment(x))
    }
}

/// Inverse-probability-weighted surrogate `(XᵀX / n) ⊘ M` with
/// `M_kk = ζ_k` and `M_kl = ζ_k ζ_l`.
pub fn missing_data_gamma(data: &MaskedData) -> Result<SymmetricMatrix> {
    if let Some(j) = data.zeta.iter().position(|&z| z <= 0.0) {
        return Err(Error::DegenerateColumn { column: j });
    }
    let s = second_moment(&data.x);
    let z = &data.zeta;
    Ok(s.map_indexed(|i, j, v| if i == j { v / z[i] } else { v / (z[i] * z[j]) }))
}

/// Observed fraction of each column of a row-major n×m mask, clamped to `[1/n, 1]`.
pub fn estimate_zeta(mask: &[bool], n: usize, m: usize) -> Vec<f64> {
    let floor = 1.0 / n.max(1) as f64;
    (0..m)
        .map(|j| {
            let obs = (0..n).filter(|&i| mask[i * m + j]).count();
            let z = obs as f64 / n as f64;
            if z < floor {
                log::warn!("column {j} has no observed entries; clamping its observation rate to 1/n");
            }
            z.clamp(floor, 1.0)
        })
        .collect()
}

/// Kronecker-sum surrogate `XᵀX / n − (tr(B) / n)·I`.
pub fn kron_sum_gamma(x: &Mat<f64>, trace_b: f64) -> Result<SymmetricMatrix> {
    if !(trace_b >= 0.0 && trace_b.is_finite()) {
        return Err(Error::Input(format!("trace of B must be nonnegative, got {trace_b}")));
    }
    if x.nrows() == 0 || x.ncols() == 0 {
        return Err(Error::Input("data matrix must be nonempty".into()));
    }
    let shift = trace_b / x.nrows() as f64;
    Ok(second_moment(x).map_indexed(|i, j, v| if i == j { v - shift } else { v }))
}

/// How to turn observed data into a covariance surrogate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CovarianceKind {
    /// Inverse-probability weighting by the data's ζ.
    MissingData,
    /// Trace correction with noise level `tau_b = tr(B)/n`.
    KronSum { tau_b: f64 },
    /// Plain second moment, optionally centered.
    Sample {
        #[serde(default)]
        center: bool,
    },
}

impl CovarianceKind {
    pub fn build(&self, data: &MaskedData) -> Result<SymmetricMatrix> {
        match *self {
            CovarianceKind::MissingData => missing_data_gamma(data),
            CovarianceKind::KronSum { tau_b } => kron_sum_gamma(data.x(), tau_b * data.nrows() as f64),
            CovarianceKind::Sample { center } => sample_covariance(data.x(), center),
        }
    }
}

/// Indefiniteness summary of a covariance surrogate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumStats {
    pub min_eig: f64,
    pub max_eig: f64,
    /// Largest eigenvalue after the elementwise-max PSD projection; `None` when skipped.
    pub max_eig_projected: Option<f64>,
    pub sum_negative: f64,
    pub count_negative: usize,
}

/// Spectrum summary including the projected maximum eigenvalue.
pub fn spectrum_stats(gamma: &SymmetricMatrix) -> Result<SpectrumStats> {
    let mut s = spectrum_stats_unprojected(gamma)?;
    let proj = linf_psd_project(gamma, crate::config::Tolerances::default().linf_radius)?;
    s.max_eig_projected = Some(proj.matrix.eigenvalues()?[0]);
    Ok(s)
}

/// Spectrum summary without the (expensive) projection.
pub fn spectrum_stats_unprojected(gamma: &SymmetricMatrix) -> Result<SpectrumStats> {
    let vals = gamma.eigenvalues()?;
    let neg: Vec<f64> = vals.iter().copied().filter(|&v| v < 0.0).collect();
    Ok(SpectrumStats {
        min_eig: *vals.last().expect("nonempty"),
        max_eig: vals[0],
        max_eig_projected: None,
        sum_negative: neg.iter().sum(),
        count_negative: neg.len(),
    })
}
