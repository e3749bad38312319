//! Workloads shared by the benchmarks.

use sglasso_core::sim::{gen_missing_data, ModelSpec};
use sglasso_core::{CovarianceKind, SymmetricMatrix};

/// Missing-data surrogate for an AR(0.6) model with `m` variables, `n = m / 2`
/// rows and sampling rate 0.7: indefinite, as in the high-dimensional regime.
pub fn missing_data_gamma(m: usize, seed: u64) -> SymmetricMatrix {
    let model = ModelSpec::ar1(m, 0.6).build().expect("valid model");
    let ds = gen_missing_data(&model, m / 2, &vec![0.7; m], seed).expect("valid simulation");
    CovarianceKind::MissingData.build(&ds.data).expect("surrogate builds")
}

/// Dimensions benchmarked for dense kernels.
pub const DIMS: [usize; 3] = [100, 200, 400];
