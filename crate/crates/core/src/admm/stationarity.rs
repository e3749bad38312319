use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::objective::radius_slack;
use crate::error::{Error, Result};
use crate::matrix::{eigendecompose, SymmetricMatrix};
use crate::penalty::Penalty;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationarityOptions {
    pub random_directions: usize,
    pub seed: u64,
    /// Entries with magnitude at or below this are treated as exact zeros of Θ.
    pub zero_tol: f64,
    /// Eigenvalues within this relative distance of R count as active constraints.
    pub active_tol: f64,
}

impl Default for StationarityOptions {
    fn default() -> Self {
        Self {
            random_directions: 100,
            seed: 0,
            zero_tol: 1e-4,
            active_tol: 1e-6,
        }
    }
}

/// Largest first-order decrease `[−f′(Θ; Δ)]₊` over sampled unit directions Δ.
///
/// Directions are all signed coordinate directions plus random symmetric ones.
/// Each is first projected onto the tangent cone of `{Θ ⪯ R·I}` at Θ, so
/// infeasible directions do not count as trivially non-descending. Zero means
/// no sampled direction decreases the objective to first order.
pub fn stationarity_gap(
    gamma: &SymmetricMatrix,
    theta: &SymmetricMatrix,
    penalty: &Penalty,
    radius: f64,
) -> Result<f64> {
    stationarity_gap_with(gamma, theta, penalty, radius, &StationarityOptions::default())
}

pub fn stationarity_gap_with(
    gamma: &SymmetricMatrix,
    theta: &SymmetricMatrix,
    penalty: &Penalty,
    radius: f64,
    opts: &StationarityOptions,
) -> Result<f64> {
    let n = theta.dim();
    if gamma.dim() != n {
        return Err(Error::Input("dimension mismatch between Γ and Θ".into()));
    }
    let evd = eigendecompose(theta)?;
    if evd.min_value() <= 0.0 || evd.max_value() > radius_slack(radius) {
        return Err(Error::Precondition(format!(
            "Θ must be positive definite with spectral norm at most R (eigenvalues in [{:.4e}, {:.4e}])",
            evd.min_value(),
            evd.max_value()
        )));
    }
    let inv: Vec<f64> = evd.values().iter().map(|v| 1.0 / v).collect();
    let grad = gamma - &evd.with_values(&inv);

    // Orthonormal basis of the active eigenspace {λ = R}.
    let active: Vec<Vec<f64>> = (0..n)
        .filter(|&k| evd.values()[k] >= radius * (1.0 - opts.active_tol))
        .map(|k| evd.vector(k))
        .collect();

    let ctx = Ctx {
        grad: &grad,
        theta,
        penalty,
        zero_tol: opts.zero_tol,
        active: &active,
    };

    let mut gap = 0.0_f64;
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..n {
        for j in i..n {
            let c = if i == j { 1.0 } else { inv_sqrt2 };
            for sign in [1.0, -1.0] {
                gap = gap.max(ctx.coordinate_decrease(i, j, sign * c));
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for _ in 0..opts.random_directions {
        let d = SymmetricMatrix::from_lower_fn(n, |_, _| StandardNormal.sample(&mut rng));
        let d = &d * (1.0 / d.frobenius_norm());
        for sign in [1.0, -1.0] {
            let dir = ctx.project_tangent(&(&d * sign));
            gap = gap.max(-ctx.directional_derivative(&dir));
        }
    }
    Ok(gap.max(0.0))
}

struct Ctx<'a> {
    grad: &'a SymmetricMatrix,
    theta: &'a SymmetricMatrix,
    penalty: &'a Penalty,
    zero_tol: f64,
    active: &'a [Vec<f64>],
}

impl Ctx<'_> {
    fn entry_derivative(&self, i: usize, j: usize, d: f64) -> f64 {
        if i == j && !self.penalty.penalize_diagonal() {
            return 0.0;
        }
        let w = self.theta.get(i, j);
        let w = if w.abs() <= self.zero_tol { 0.0 } else { w };
        self.penalty.directional_derivative(w, d)
    }

    /// `f′(Θ; Δ)` for a symmetric Δ, summing both triangles.
    fn directional_derivative(&self, d: &SymmetricMatrix) -> f64 {
        let n = d.dim();
        let mut acc = self.grad.dot(d);
        for j in 0..n {
            acc += self.entry_derivative(j, j, d.get(j, j));
            for i in (j + 1)..n {
                acc += 2.0 * self.entry_derivative(i, j, d.get(i, j));
            }
        }
        acc
    }

    /// Projection onto `{Δ : UᵀΔU ⪯ 0}` for the active eigenvectors U.
    fn project_tangent(&self, d: &SymmetricMatrix) -> SymmetricMatrix {
        if self.active.is_empty() {
            return d.clone();
        }
        let k = self.active.len();
        let n = d.dim();
        let du: Vec<Vec<f64>> = self.active.iter().map(|u| d.mul_vec(u)).collect();
        let block = SymmetricMatrix::from_lower_fn(k, |a, b| dot(&self.active[a], &du[b]));
        let evd = eigendecompose(&block).expect("finite block");
        let mut out = d.clone();
        for (idx, &lam) in evd.values().iter().enumerate() {
            if lam <= 0.0 {
                continue;
            }
            let coeffs = evd.vector(idx);
            let w = combine(self.active, &coeffs, n);
            out = out.zip_map(&SymmetricMatrix::from_lower_fn(n, |i, j| w[i] * w[j]), |x, y| x - lam * y);
        }
        out
    }

    /// Decrease along the coordinate direction `c·(e_i e_jᵀ + e_j e_iᵀ)` (or `c·e_i e_iᵀ`).
    fn coordinate_decrease(&self, i: usize, j: usize, c: f64) -> f64 {
        let mult = if i == j { 1.0 } else { 2.0 };
        let base = mult * (c * self.grad.get(i, j) + self.entry_derivative(i, j, c));
        if self.active.is_empty() {
            return -base;
        }
        // UᵀΔU = c(a bᵀ + b aᵀ) with a, b the i-th and j-th rows of U; its
        // positive part is rank one with closed-form eigenpair.
        let a: Vec<f64> = self.active.iter().map(|u| u[i]).collect();
        let b: Vec<f64> = self.active.iter().map(|u| u[j]).collect();
        let (lam, e) = if i == j {
            if c <= 0.0 {
                return -base;
            }
            let na = norm(&a);
            (c * na * na, a.iter().map(|x| x / na.max(f64::MIN_POSITIVE)).collect::<Vec<_>>())
        } else {
            let (na, nb) = (norm(&a), norm(&b));
            if na == 0.0 || nb == 0.0 {
                return -base;
            }
            let ab = dot(&a, &b);
            let s = c.signum();
            let lam = c.abs() * (na * nb + s * ab);
            let e: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x / na + s * y / nb).collect();
            let ne = norm(&e);
            if ne == 0.0 {
                return -base;
            }
            (lam, e.iter().map(|x| x / ne).collect())
        };
        if lam <= 0.0 {
            return -base;
        }
        let n = self.theta.dim();
        let w = combine(self.active, &e, n);
        let mut d = SymmetricMatrix::from_lower_fn(n, |p, q| -lam * w[p] * w[q]);
        d = d.map_indexed(|p, q, v| {
            if (p == i && q == j) || (p == j && q == i) {
                v + c
            } else {
                v
            }
        });
        -self.directional_derivative(&d)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn combine(basis: &[Vec<f64>], coeffs: &[f64], n: usize) -> Vec<f64> {
    let mut w = vec![0.0; n];
    for (u, &c) in basis.iter().zip(coeffs) {
        for (wi, ui) in w.iter_mut().zip(u) {
            *wi += c * ui;
        }
    }
    w
}
