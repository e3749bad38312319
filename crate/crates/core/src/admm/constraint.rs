//! Frobenius projections onto `{Θ ⪰ 0, h(Θ) ≤ R}`.

use super::{ConstraintKind, SideConstraint};
use crate::error::{Error, Result};
use crate::matrix::{eigendecompose, psd_project_frobenius, SymmetricMatrix};

/// Closed-form projection onto `{0 ⪯ Θ ⪯ R·I}`: clip eigenvalues to `[0, R]`.
pub fn project_spectral(s: &SymmetricMatrix, radius: f64) -> Result<SymmetricMatrix> {
    let evd = eigendecompose(s)?;
    if evd.min_value() >= 0.0 && evd.max_value() <= radius {
        return Ok(s.clone());
    }
    Ok(evd.map_values(|v| v.clamp(0.0, radius)))
}

/// Projection onto `{Θ : Σ_ij |Θ_ij| ≤ R}` in Frobenius norm.
///
/// Works on the upper triangle with off-diagonal weight 2, so the result keeps
/// the input's symmetry. All entries share one soft-threshold level τ solving
/// `Σ_k w_k (|y_k| − τ)₊ = R`.
pub fn l1_ball_project_symmetric(s: &SymmetricMatrix, radius: f64) -> SymmetricMatrix {
    if s.l1_entrywise() <= radius {
        return s.clone();
    }
    let n = s.dim();
    let mut entries: Vec<(f64, f64)> = Vec::with_capacity(n * (n + 1) / 2);
    for j in 0..n {
        for i in j..n {
            let w = if i == j { 1.0 } else { 2.0 };
            entries.push((s.get(i, j).abs(), w));
        }
    }
    let tau = weighted_threshold(&mut entries, radius);
    s.map(|v| v.signum() * (v.abs() - tau).max(0.0))
}

/// Smallest τ ≥ 0 with `Σ w (u − τ)₊ ≤ radius`; assumes the budget is exceeded at τ = 0.
fn weighted_threshold(entries: &mut [(f64, f64)], radius: f64) -> f64 {
    entries.sort_unstable_by(|a, b| b.0.total_cmp(&a.0));
    let mut wsum = 0.0;
    let mut ssum = 0.0;
    let mut tau = 0.0;
    for &(u, w) in entries.iter() {
        if u <= 0.0 {
            break;
        }
        let cand = (ssum + w * u - radius) / (wsum + w);
        if u > cand {
            wsum += w;
            ssum += w * u;
            tau = cand;
        } else {
            break;
        }
    }
    tau.max(0.0)
}

/// Frobenius projection of `s` onto `{Θ ⪰ 0, h(Θ) ≤ R}`.
///
/// The spectral case is closed form. The ℓ1 case runs Dykstra's alternating
/// projections between the PSD cone and the ℓ1 ball, stopping once successive
/// iterates move less than `inner_tol` (relative to `max(1, ‖Θ‖_F)`).
pub fn project_constraint_set(
    s: &SymmetricMatrix,
    constraint: &SideConstraint,
    inner_tol: f64,
    inner_max_iter: usize,
) -> Result<SymmetricMatrix> {
    constraint.validate()?;
    s.check_finite()?;
    match constraint.kind {
        ConstraintKind::Spectral => project_spectral(s, constraint.radius),
        ConstraintKind::L1 => dykstra_psd_l1(s, constraint.radius, inner_tol, inner_max_iter),
    }
}

fn dykstra_psd_l1(s: &SymmetricMatrix, radius: f64, tol: f64, max_iter: usize) -> Result<SymmetricMatrix> {
    let psd = psd_project_frobenius(s)?;
    if psd.l1_entrywise() <= radius {
        return Ok(psd);
    }
    let ball = l1_ball_project_symmetric(s, radius);
    if eigendecompose(&ball)?.min_value() >= 0.0 {
        return Ok(ball);
    }

    let n = s.dim();
    let mut x = s.clone();
    let mut p = SymmetricMatrix::zeros(n);
    let mut q = SymmetricMatrix::zeros(n);
    for _ in 0..max_iter {
        let y = psd_project_frobenius(&(&x + &p))?;
        p = &(&x + &p) - &y;
        let yq = &y + &q;
        let x_new = l1_ball_project_symmetric(&yq, radius);
        q = &yq - &x_new;
        let step = (&x_new - &x).frobenius_norm();
        x = x_new;
        if step <= tol * x.frobenius_norm().max(1.0) {
            return Ok(x);
        }
    }
    Err(Error::Numerical(format!(
        "Dykstra projection did not converge within {max_iter} iterations"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_symmetric(n: usize, rng: &mut ChaCha8Rng) -> SymmetricMatrix {
        SymmetricMatrix::from_lower_fn(n, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn spectral_clipping() {
        let out = project_spectral(&SymmetricMatrix::from_diagonal(&[3.0, -1.0]), 2.0).unwrap();
        assert!((out.get(0, 0) - 2.0).abs() < 1e-14);
        assert!(out.get(1, 1).abs() < 1e-14);
        let feasible = SymmetricMatrix::from_rows(&[vec![1.0, 0.2], vec![0.2, 0.5]]).unwrap();
        assert_eq!(project_spectral(&feasible, 2.0).unwrap(), feasible);
    }

    #[test]
    fn l1_ball_budget_and_threshold() {
        let s = SymmetricMatrix::from_rows(&[vec![3.0, 1.0], vec![1.0, -2.0]]).unwrap();
        let p = l1_ball_project_symmetric(&s, 4.0);
        assert!((p.l1_entrywise() - 4.0).abs() < 1e-12);
        // τ = 0.75: 2.25 + 1.25 + 2·0.25 = 4.
        assert!((p.get(0, 0) - 2.25).abs() < 1e-12);
        assert!((p.get(1, 1) + 1.25).abs() < 1e-12);
        assert!((p.get(0, 1) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn l1_ball_projection_beats_perturbations() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let s = random_symmetric(4, &mut rng);
        let p = l1_ball_project_symmetric(&s, 1.5);
        let base = (&p - &s).frobenius_norm();
        for _ in 0..500 {
            let d = random_symmetric(4, &mut rng);
            let q = p.axpy(1e-2, &d);
            if q.l1_entrywise() <= 1.5 {
                assert!((&q - &s).frobenius_norm() >= base - 1e-12);
            }
        }
    }

    #[test]
    fn l1_constraint_set_projection_is_feasible_and_nearest() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s = random_symmetric(4, &mut rng);
        let c = SideConstraint::l1(2.0);
        let p = project_constraint_set(&s, &c, 1e-10, 20000).unwrap();
        assert!(p.l1_entrywise() <= 2.0 + 1e-8);
        assert!(p.eigenvalues().unwrap()[3] >= -1e-6);
        let base = (&p - &s).frobenius_norm();
        let mut tried = 0;
        while tried < 300 {
            let d = random_symmetric(4, &mut rng);
            let q = psd_project_frobenius(&p.axpy(0.05, &d)).unwrap();
            let q = if q.l1_entrywise() > 2.0 { &q * (2.0 / q.l1_entrywise()) } else { q };
            tried += 1;
            assert!((&q - &s).frobenius_norm() >= base - 1e-4);
        }
    }

    #[test]
    fn feasible_point_is_fixed() {
        let f = SymmetricMatrix::from_rows(&[vec![0.5, 0.1], vec![0.1, 0.3]]).unwrap();
        let p = project_constraint_set(&f, &SideConstraint::l1(2.0), 1e-8, 100).unwrap();
        assert_eq!(p, f);
        let p = project_constraint_set(&f, &SideConstraint::spectral(2.0), 1e-8, 100).unwrap();
        assert_eq!(p, f);
    }

    #[test]
    fn dykstra_cap_is_an_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = random_symmetric(6, &mut rng);
        let r = project_constraint_set(&s, &SideConstraint::l1(0.5), 1e-15, 1);
        assert!(matches!(r, Err(Error::Numerical(_))));
    }
}
