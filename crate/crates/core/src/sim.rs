//! Ground-truth covariance models and synthetic data generators.

use faer::Mat;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::cov_inputs::MaskedData;
use crate::error::{Error, Result};
use crate::matrix::SymmetricMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ModelFamily {
    Ar1 { r: f64 },
    StarBlock { r: f64, block_size: usize },
    ErdosRenyi { edges: usize },
}

/// A covariance model over `dim` variables. `seed` only matters for random families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    #[serde(flatten)]
    pub family: ModelFamily,
    pub dim: usize,
    #[serde(default)]
    pub seed: u64,
}

/// True covariance `A` and precision `Θ* = A⁻¹`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrueModel {
    pub a: SymmetricMatrix,
    pub theta_star: SymmetricMatrix,
}

impl ModelSpec {
    pub fn ar1(dim: usize, r: f64) -> Self {
        Self {
            family: ModelFamily::Ar1 { r },
            dim,
            seed: 0,
        }
    }

    pub fn star_block(dim: usize, r: f64, block_size: usize) -> Self {
        Self {
            family: ModelFamily::StarBlock { r, block_size },
            dim,
            seed: 0,
        }
    }

    pub fn erdos_renyi(dim: usize, edges: usize, seed: u64) -> Self {
        Self {
            family: ModelFamily::ErdosRenyi { edges },
            dim,
            seed,
        }
    }

    pub fn build(&self) -> Result<TrueModel> {
        let (a, theta_star) = match self.family {
            ModelFamily::Ar1 { r } => {
                let a = ar1_cov(self.dim, r)?;
                let t = a.inverse()?;
                (a, t)
            }
            ModelFamily::StarBlock { r, block_size } => {
                let a = star_block_cov(self.dim, r, block_size)?;
                let t = a.inverse()?;
                (a, t)
            }
            ModelFamily::ErdosRenyi { edges } => {
                let (omega, a) = er_precision(self.dim, edges, self.seed)?;
                (a, omega)
            }
        };
        check_pd(&a, "covariance")?;
        Ok(TrueModel { a, theta_star })
    }

    pub fn covariance(&self) -> Result<SymmetricMatrix> {
        Ok(self.build()?.a)
    }
}

fn check_dim(m: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::Parameter("dimension must be positive".into()));
    }
    Ok(())
}

fn check_pd(a: &SymmetricMatrix, what: &str) -> Result<()> {
    let min = *a.eigenvalues()?.last().expect("nonempty");
    if !(min > 1e-10) {
        return Err(Error::Parameter(format!("{what} is not positive definite (min eigenvalue {min:e})")));
    }
    Ok(())
}

/// `A_ij = r^|i−j|`.
pub fn ar1_cov(m: usize, r: f64) -> Result<SymmetricMatrix> {
    check_dim(m)?;
    if !(r.abs() < 1.0) {
        return Err(Error::Parameter(format!("AR1 coefficient must satisfy |r| < 1, got {r}")));
    }
    Ok(SymmetricMatrix::from_lower_fn(m, |i, j| r.powi((i - j) as i32)))
}

/// Block-diagonal star covariance; the first index of each block is the hub.
pub fn star_block_cov(m: usize, r: f64, block_size: usize) -> Result<SymmetricMatrix> {
    check_dim(m)?;
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::Parameter(format!("star-block r must be in (0, 1), got {r}")));
    }
    if block_size == 0 || !m.is_multiple_of(block_size) {
        return Err(Error::Parameter(format!("block size {block_size} does not divide {m}")));
    }
    Ok(SymmetricMatrix::from_lower_fn(m, |i, j| {
        if i / block_size != j / block_size {
            0.0
        } else if i == j {
            1.0
        } else if j % block_size == 0 {
            r
        } else {
            r * r
        }
    }))
}

/// Erdős–Rényi precision: `Ω = 0.25·I` plus `edges` random diagonally
/// dominant edge updates with weights in `[0.6, 0.8]`. Returns `(Ω, Ω⁻¹)`.
pub fn er_precision(m: usize, edges: usize, seed: u64) -> Result<(SymmetricMatrix, SymmetricMatrix)> {
    check_dim(m)?;
    let max_edges = m * (m - 1) / 2;
    if edges > max_edges {
        return Err(Error::Parameter(format!("{edges} edges exceed the {max_edges} available pairs")));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut pairs: Vec<(usize, usize)> = (0..m).flat_map(|i| ((i + 1)..m).map(move |j| (i, j))).collect();
    pairs.shuffle(&mut rng);
    let weighted: Vec<(usize, usize, f64)> = pairs[..edges]
        .iter()
        .map(|&(i, j)| (i, j, rng.random_range(0.6..=0.8)))
        .collect();
    let omega = er_from_edges(m, &weighted);
    let a = omega.inverse()?;
    Ok((omega, a))
}

/// Applies the edge-update rule to `0.25·I`.
pub fn er_from_edges(m: usize, edges: &[(usize, usize, f64)]) -> SymmetricMatrix {
    let mut om = Mat::<f64>::zeros(m, m);
    for k in 0..m {
        om[(k, k)] = 0.25;
    }
    for &(i, j, w) in edges {
        om[(i, j)] -= w;
        om[(j, i)] -= w;
        om[(i, i)] += w;
        om[(j, j)] += w;
    }
    SymmetricMatrix::from_mat(om).expect("square")
}

/// Symmetric PSD square root via eigendecomposition.
pub fn sqrt_psd(a: &SymmetricMatrix) -> Result<SymmetricMatrix> {
    Ok(a.eigen()?.map_values(|v| v.max(0.0).sqrt()))
}

/// How the observed data were corrupted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseMeta {
    MissingData { zeta: Vec<f64> },
    KronSum { tau_b: f64, trace_b: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedDataset {
    pub a: SymmetricMatrix,
    pub theta_star: SymmetricMatrix,
    pub data: MaskedData,
    pub noise: NoiseMeta,
    pub seed: u64,
}

fn normal_matrix(rng: &mut ChaCha20Rng, n: usize, m: usize) -> Mat<f64> {
    let mut w = Mat::<f64>::zeros(n, m);
    for i in 0..n {
        for j in 0..m {
            w[(i, j)] = StandardNormal.sample(rng);
        }
    }
    w
}

/// `X = U ∘ (W A^{1/2})` with `U_ij ~ Bernoulli(ζ_j)`.
pub fn gen_missing_data(model: &TrueModel, n: usize, zeta: &[f64], seed: u64) -> Result<GeneratedDataset> {
    let m = model.a.dim();
    if n == 0 {
        return Err(Error::Parameter("sample size must be positive".into()));
    }
    if zeta.len() != m {
        return Err(Error::Parameter(format!("zeta has {} entries, expected {m}", zeta.len())));
    }
    if let Some(z) = zeta.iter().find(|&&z| !(z > 0.0 && z <= 1.0)) {
        return Err(Error::Parameter(format!("observation rate {z} outside (0, 1]")));
    }
    check_pd(&model.a, "covariance")?;
    let root = sqrt_psd(&model.a)?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let w = normal_matrix(&mut rng, n, m);
    let z = &w * root.as_mat();
    let mut mask = Vec::with_capacity(n * m);
    for _ in 0..n {
        for &zj in zeta {
            mask.push(zj >= 1.0 || rng.random::<f64>() < zj);
        }
    }
    let data = MaskedData::new(z, mask, zeta.to_vec())?;
    Ok(GeneratedDataset {
        a: model.a.clone(),
        theta_star: model.theta_star.clone(),
        data,
        noise: NoiseMeta::MissingData { zeta: zeta.to_vec() },
        seed,
    })
}

/// `X = W₁A^{1/2} + B^{1/2}W₂` with `B` rescaled so that `tr(B) = n·τ_B`.
pub fn gen_kron_sum(model: &TrueModel, b: &SymmetricMatrix, tau_b: f64, seed: u64) -> Result<GeneratedDataset> {
    let m = model.a.dim();
    let n = b.dim();
    if !(tau_b >= 0.0 && tau_b.is_finite()) {
        return Err(Error::Parameter(format!("tau_B must be nonnegative, got {tau_b}")));
    }
    check_pd(&model.a, "covariance A")?;
    check_pd(b, "covariance B")?;
    let trace_b = n as f64 * tau_b;
    let b_scaled = b * (trace_b / b.trace());
    let root_a = sqrt_psd(&model.a)?;
    let root_b = sqrt_psd(&b_scaled)?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let w1 = normal_matrix(&mut rng, n, m);
    let w2 = normal_matrix(&mut rng, n, m);
    let x = &w1 * root_a.as_mat() + root_b.as_mat() * &w2;
    Ok(GeneratedDataset {
        a: model.a.clone(),
        theta_star: model.theta_star.clone(),
        data: MaskedData::fully_observed(x)?,
        noise: NoiseMeta::KronSum { tau_b, trace_b },
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cov_inputs::{missing_data_gamma, sample_covariance};

    fn close(a: &SymmetricMatrix, b: &[Vec<f64>], tol: f64) -> bool {
        (a - &SymmetricMatrix::from_rows(b).unwrap()).max_abs() < tol
    }

    #[test]
    fn ar1_examples() {
        let a = ar1_cov(3, 0.5).unwrap();
        assert!(close(&a, &[vec![1.0, 0.5, 0.25], vec![0.5, 1.0, 0.5], vec![0.25, 0.5, 1.0]], 1e-15));
        assert_eq!(ar1_cov(4, 0.0).unwrap(), SymmetricMatrix::identity(4));
        assert!(matches!(ar1_cov(3, 1.0), Err(Error::Parameter(_))));
        let t = ar1_cov(8, 0.7).unwrap().inverse().unwrap();
        for i in 0..8usize {
            for j in 0..8usize {
                if i.abs_diff(j) > 1 {
                    assert!(t.get(i, j).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn star_block_examples() {
        let a = star_block_cov(3, 0.7, 3).unwrap();
        assert!(close(&a, &[vec![1.0, 0.7, 0.7], vec![0.7, 1.0, 0.49], vec![0.7, 0.49, 1.0]], 1e-15));
        let a = star_block_cov(6, 0.5, 3).unwrap();
        for i in 0..3 {
            for j in 3..6 {
                assert_eq!(a.get(i, j), 0.0);
            }
        }
        let t = star_block_cov(4, 0.5, 4).unwrap().inverse().unwrap();
        for i in 1..4 {
            for j in 1..4 {
                if i != j {
                    assert!(t.get(i, j).abs() < 1e-10);
                }
            }
        }
        assert!(matches!(star_block_cov(7, 0.5, 3), Err(Error::Parameter(_))));
    }

    #[test]
    fn er_examples() {
        let (om, a) = er_precision(3, 0, 1).unwrap();
        assert_eq!(om, SymmetricMatrix::scaled_identity(3, 0.25));
        assert!((&a - &SymmetricMatrix::scaled_identity(3, 4.0)).max_abs() < 1e-12);
        let om = er_from_edges(2, &[(0, 1, 0.6)]);
        assert!(close(&om, &[vec![0.85, -0.6], vec![-0.6, 0.85]], 1e-15));
        let (om, _) = er_precision(50, 100, 7).unwrap();
        assert!(*om.eigenvalues().unwrap().last().unwrap() > 0.0);
        let nnz = (0..50).flat_map(|i| ((i + 1)..50).map(move |j| (i, j))).filter(|&(i, j)| om.get(i, j) != 0.0).count();
        assert_eq!(nnz, 100);
        assert!(er_precision(3, 4, 0).is_err());
    }

    #[test]
    fn truth_is_inverse_pair() {
        for spec in [ModelSpec::ar1(20, 0.6), ModelSpec::star_block(20, 0.5, 5), ModelSpec::erdos_renyi(20, 30, 3)] {
            let t = spec.build().unwrap();
            let prod = t.a.as_mat() * t.theta_star.as_mat();
            for i in 0..20 {
                for j in 0..20 {
                    let e = if i == j { 1.0 } else { 0.0 };
                    assert!((prod[(i, j)] - e).abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn full_observation_and_determinism() {
        let t = ModelSpec::ar1(4, 0.5).build().unwrap();
        let d = gen_missing_data(&t, 10, &[1.0; 4], 3).unwrap();
        assert!(d.data.mask().iter().all(|&b| b));
        assert_eq!(d, gen_missing_data(&t, 10, &[1.0; 4], 3).unwrap());
        assert_ne!(d, gen_missing_data(&t, 10, &[1.0; 4], 4).unwrap());
    }

    #[test]
    fn latent_covariance_monte_carlo() {
        let t = ModelSpec::ar1(3, 0.5).build().unwrap();
        let n = 100_000;
        let d = gen_missing_data(&t, n, &[1.0; 3], 11).unwrap();
        let s = sample_covariance(d.data.x(), false).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                // Var(z_i z_j) = A_ii A_jj + A_ij² for Gaussians.
                let a = &t.a;
                let se = ((a.get(i, i) * a.get(j, j) + a.get(i, j).powi(2)) / n as f64).sqrt();
                assert!((s.get(i, j) - a.get(i, j)).abs() < 3.5 * se, "({i},{j})");
            }
        }
    }

    #[test]
    fn observed_fraction_is_binomial() {
        let t = ModelSpec::ar1(3, 0.2).build().unwrap();
        let n = 5000;
        let zeta = [0.3, 0.7, 0.9];
        let d = gen_missing_data(&t, n, &zeta, 5).unwrap();
        for (j, &z) in zeta.iter().enumerate() {
            let obs = (0..n).filter(|&i| d.data.observed(i, j)).count() as f64 / n as f64;
            let sd = (z * (1.0 - z) / n as f64).sqrt();
            assert!((obs - z).abs() < 3.0 * sd, "column {j}: {obs}");
        }
    }

    #[test]
    fn missing_data_estimate_converges() {
        let t = ModelSpec::ar1(3, 0.5).build().unwrap();
        let err = |n: usize| {
            let reps = 20;
            (0..reps)
                .map(|s| {
                    let d = gen_missing_data(&t, n, &[0.7; 3], 100 + s).unwrap();
                    (&missing_data_gamma(&d.data).unwrap() - &t.a).frobenius_norm()
                })
                .sum::<f64>()
                / reps as f64
        };
        let (e_small, e_large) = (err(100), err(10_000));
        // Root-n rate: a hundredfold sample should cut the error about tenfold.
        let ratio = e_small / e_large;
        assert!(ratio > 5.0 && ratio < 20.0, "ratio {ratio}");
    }

    #[test]
    fn kron_sum_generation() {
        let t = ModelSpec::ar1(3, 0.5).build().unwrap();
        let b = ModelSpec::erdos_renyi(4, 2, 1).covariance().unwrap();
        let d = gen_kron_sum(&t, &b, 0.3, 2).unwrap();
        match d.noise {
            NoiseMeta::KronSum { trace_b, .. } => assert!((trace_b - 1.2).abs() < 1e-12),
            _ => unreachable!(),
        }
        // τ_B = 0 leaves the pure signal, which matches a run without noise draws consumed
        // only in its first n×m block.
        let d0 = gen_kron_sum(&t, &b, 0.0, 2).unwrap();
        let root = sqrt_psd(&t.a).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let w1 = normal_matrix(&mut rng, 4, 3);
        let x0 = &w1 * root.as_mat();
        assert!((d0.data.x() - &x0).norm_max() < 1e-12);
    }

    #[test]
    fn kron_sum_row_covariance_monte_carlo() {
        // E[XᵀX/n] = A + (tr(B)/n)·I.
        let (m, n, tau) = (3, 4, 0.5);
        let t = ModelSpec::ar1(m, 0.5).build().unwrap();
        let b = ModelSpec::ar1(n, 0.3).covariance().unwrap();
        let reps = 4000;
        let mut acc = SymmetricMatrix::zeros(m);
        for s in 0..reps {
            let d = gen_kron_sum(&t, &b, tau, s).unwrap();
            acc = &acc + &sample_covariance(d.data.x(), false).unwrap();
        }
        let mean = &acc * (1.0 / reps as f64);
        let target = t.a.map_indexed(|i, j, v| if i == j { v + tau } else { v });
        assert!((&mean - &target).max_abs() < 0.06, "{:?}", mean.rows());
    }

    #[test]
    fn spec_json_roundtrip() {
        let s = ModelSpec::star_block(10, 0.5, 5);
        let js = serde_json::to_string(&s).unwrap();
        assert!(js.contains("\"family\":\"star_block\""));
        assert_eq!(serde_json::from_str::<ModelSpec>(&js).unwrap(), s);
        let e: ModelSpec = serde_json::from_str(r#"{"family":"ar1","r":0.6,"dim":5}"#).unwrap();
        assert_eq!(e, ModelSpec::ar1(5, 0.6));
    }
}
