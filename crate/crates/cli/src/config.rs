//! Optional JSON defaults (`--config`). Each subcommand reads its own section;
//! command-line flags take precedence.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sglasso_core::graph::GraphOptions;
use sglasso_core::sim::ModelSpec;
use sglasso_core::{AdmmConfig, CovarianceKind, Criterion, Error, EstimatorSpec};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub simulate: Option<SimulateConfig>,
    pub estimator: Option<EstimatorSpec>,
    pub covariance: Option<CovarianceKind>,
    pub sweep: Option<SweepConfig>,
    pub tune: Option<TuneConfig>,
    pub graph: Option<GraphOptions>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, Error> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

/// One value for every column, or one per column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Rates {
    Common(f64),
    PerColumn(Vec<f64>),
}

impl Rates {
    pub fn from_list(v: Vec<f64>) -> Self {
        match v.as_slice() {
            [x] => Rates::Common(*x),
            _ => Rates::PerColumn(v),
        }
    }

    pub fn expand(&self, m: usize) -> Result<Vec<f64>, Error> {
        match self {
            Rates::Common(z) => Ok(vec![*z; m]),
            Rates::PerColumn(v) if v.len() == m => Ok(v.clone()),
            Rates::PerColumn(v) => Err(Error::Config(format!("{} sampling rates given for {m} columns", v.len()))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseSpec {
    MissingData {
        zeta: Rates,
    },
    KronSum {
        tau_b: f64,
        /// Edges of the Erdős–Rényi graph behind B; defaults to n.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        b_edges: Option<usize>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub model: ModelSpec,
    pub noise: NoiseSpec,
    pub n: usize,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub estimators: Option<Vec<String>>,
    pub lambdas: Option<Vec<f64>>,
    pub radii: Option<Vec<f64>>,
    pub radius_scales: Option<Vec<f64>>,
    pub seeds: Option<Vec<u64>>,
    pub mcp_a: Option<f64>,
    pub scad_a: Option<f64>,
    pub solver: Option<AdmmConfig>,
    pub penalize_diagonal: Option<bool>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TuneConfig {
    pub criterion: Option<Criterion>,
    pub lambdas: Option<Vec<f64>>,
    pub folds: Option<usize>,
    pub estimate_zeta: Option<bool>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_parse() {
        let cfg: FileConfig = serde_json::from_str(
            r#"{
                "simulate": {"model": {"family": "ar1", "r": 0.6, "dim": 10},
                             "noise": {"kind": "missing_data", "zeta": 0.7}, "n": 20},
                "covariance": {"kind": "kron_sum", "tau_b": 0.3},
                "tune": {"criterion": "cv", "folds": 3}
            }"#,
        )
        .unwrap();
        let sim = cfg.simulate.unwrap();
        assert_eq!(sim.noise, NoiseSpec::MissingData { zeta: Rates::Common(0.7) });
        assert_eq!(cfg.covariance, Some(CovarianceKind::KronSum { tau_b: 0.3 }));
        assert_eq!(cfg.tune.unwrap().folds, Some(3));
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(serde_json::from_str::<FileConfig>(r#"{"estimatr": {}}"#).is_err());
    }

    #[test]
    fn rates_expand() {
        assert_eq!(Rates::Common(0.5).expand(3).unwrap(), vec![0.5; 3]);
        assert!(Rates::PerColumn(vec![0.5, 0.6]).expand(3).is_err());
        assert_eq!(Rates::from_list(vec![0.4]), Rates::Common(0.4));
    }
}
