use std::path::PathBuf;

use serde_json::json;
use sglasso_core::io::{read_bundle, read_data_csv, Bundle, DataCsvOptions, MissingToken};
use sglasso_core::sim::NoiseMeta;
use sglasso_core::{CovarianceKind, Error, MaskedData, SymmetricMatrix};

use crate::args::{CovKind, InputArgs, Missing};
use crate::config::Rates;

/// Data plus the covariance surrogate built from it.
pub struct Loaded {
    pub path: PathBuf,
    pub data: MaskedData,
    pub covariance: CovarianceKind,
    pub gamma: SymmetricMatrix,
    /// Ground truth, when the input is a simulated bundle.
    pub theta_star: Option<SymmetricMatrix>,
    pub seed: Option<u64>,
}

impl Loaded {
    pub fn describe(&self) -> serde_json::Value {
        json!({
            "input": self.path,
            "covariance": self.covariance,
            "n": self.data.nrows(),
            "m": self.data.ncols(),
        })
    }
}

pub fn missing_token(m: Missing) -> MissingToken {
    match m {
        Missing::Any => MissingToken::Any,
        Missing::Empty => MissingToken::Empty,
        Missing::Na => MissingToken::Na,
    }
}

fn covariance_from_flags(args: &InputArgs) -> Result<Option<CovarianceKind>, Error> {
    Ok(match args.covariance {
        None => None,
        Some(CovKind::MissingData) => Some(CovarianceKind::MissingData),
        Some(CovKind::Sample) => Some(CovarianceKind::Sample { center: args.center }),
        Some(CovKind::KronSum) => {
            let tau_b = args
                .tau_b
                .ok_or_else(|| Error::Config("--covariance kron-sum needs --tau-b".into()))?;
            Some(CovarianceKind::KronSum { tau_b })
        }
    })
}

/// Loads `--input`: a bundle directory (its noise model picks the default
/// surrogate) or a raw CSV (needs `--covariance` or a config `covariance`).
pub fn load(args: &InputArgs, config_cov: Option<CovarianceKind>) -> Result<Loaded, Error> {
    let path = args
        .input
        .clone()
        .ok_or_else(|| Error::Config("--input is required".into()))?;
    let requested = covariance_from_flags(args)?.or(config_cov);
    let (mut data, default_cov, theta_star, seed) = if Bundle::is_bundle(&path) {
        let b = read_bundle(&path)?;
        let cov = match b.meta.noise {
            NoiseMeta::MissingData { .. } => CovarianceKind::MissingData,
            NoiseMeta::KronSum { tau_b, .. } => CovarianceKind::KronSum { tau_b },
        };
        (b.data, Some(cov), Some(b.theta_star), Some(b.meta.seed))
    } else if path.is_dir() {
        return Err(Error::Input(format!("{} is a directory but not a dataset bundle", path.display())));
    } else {
        let table = read_data_csv(
            &path,
            DataCsvOptions {
                missing: missing_token(args.missing),
                header: !args.no_header,
            },
        )?;
        let data = MaskedData::with_estimated_zeta(table.values, table.mask)?;
        (data, None, None, None)
    };
    if let Some(z) = &args.zeta {
        data.set_zeta(Rates::from_list(z.clone()).expand(data.ncols())?)?;
    }
    let covariance = requested.or(default_cov).ok_or_else(|| {
        Error::Config("raw CSV input needs --covariance (missing-data, kron-sum or sample)".into())
    })?;
    let gamma = covariance.build(&data)?;
    Ok(Loaded {
        path,
        data,
        covariance,
        gamma,
        theta_star,
        seed,
    })
}
