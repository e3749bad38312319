//! Numerical tolerances shared by the solvers and validators.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Relative Frobenius error allowed when reconstructing a matrix from its eigenpairs.
    pub reconstruction: f64,
    /// Maximum |S_ij - S_ji| accepted when loading a matrix from disk.
    pub symmetry: f64,
    /// Eigenvalues above `-psd` count as nonnegative.
    pub psd: f64,
    /// Entries with magnitude at or below this are treated as exact zeros in supports.
    pub support: f64,
    /// Dykstra inner-loop stopping tolerance on successive iterates.
    pub dykstra: f64,
    /// Dykstra inner-loop iteration cap.
    pub dykstra_max_iter: usize,
    /// Bisection tolerance on the box radius of the elementwise-max PSD projection.
    pub linf_radius: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            reconstruction: 1e-8,
            symmetry: 1e-8,
            psd: 1e-10,
            support: 1e-8,
            dykstra: 1e-8,
            dykstra_max_iter: 5000,
            linf_radius: 1e-4,
        }
    }
}
