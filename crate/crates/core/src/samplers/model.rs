//! JSON-configured selection of a sampler.
//!
//! Parameter blocks, one per model:
//!
//! ```json
//! {"kind": "hadamard", "p": 4}
//! {"kind": "scalar", "a": 0.5, "v": 1.0, "theta": 1.0}
//! {"kind": "explicit", "a": [[..]], "v": [[..]], "theta": [..]}
//! {"step_sd": 0.3, "burn_in": 10000, "data": "path/to/logit.csv"}
//! {"k": 2, "data_seed": 2017, "burn_in": 10000, "hyper": {"a1": 0.1, ...}}
//! ```
//!
//! The first three are `ar1`, then `logistic` (the bundled data set is used
//! when `data` is absent), then `ranef` (`y` may be given explicitly instead of
//! `k` and `data_seed`).

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ar1::{self, Ar1Params, Ar1Truth};
use super::logistic::{LogisticData, Rwm};
use super::ranef::{synthetic_y, Hyper, RanefSampler};
use super::{record, running_mean, Sampler};
use crate::chain::Chain;
use crate::error::{Error, Result};
use crate::symmat::SymMatrix;

pub const DEFAULT_BURN_IN: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Ar1,
    Logistic,
    Ranef,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Ar1 => "ar1",
            ModelKind::Logistic => "logistic",
            ModelKind::Ranef => "ranef",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ar1" => Ok(ModelKind::Ar1),
            "logistic" => Ok(ModelKind::Logistic),
            "ranef" => Ok(ModelKind::Ranef),
            other => Err(Error::InvalidParameter(format!("unknown model `{other}`"))),
        }
    }
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum Ar1Spec {
    Hadamard {
        p: usize,
    },
    Scalar {
        a: f64,
        #[serde(default = "one")]
        v: f64,
        #[serde(default)]
        theta: f64,
    },
    Explicit {
        a: Vec<Vec<f64>>,
        v: Vec<Vec<f64>>,
        theta: Vec<f64>,
    },
}

fn default_step_sd() -> f64 {
    0.3
}

fn default_burn_in() -> usize {
    DEFAULT_BURN_IN
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct LogisticSpec {
    #[serde(default = "default_step_sd")]
    step_sd: f64,
    #[serde(default = "default_burn_in")]
    burn_in: usize,
    #[serde(default)]
    data: Option<PathBuf>,
}

fn default_k() -> usize {
    2
}

fn default_data_seed() -> u64 {
    2017
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RanefSpec {
    #[serde(default = "default_k")]
    k: usize,
    #[serde(default)]
    y: Option<Vec<f64>>,
    #[serde(default = "default_data_seed")]
    data_seed: u64,
    #[serde(default = "default_burn_in")]
    burn_in: usize,
    #[serde(default)]
    hyper: Hyper,
}

/// A fully resolved sampler configuration.
#[derive(Debug, Clone)]
pub enum Model {
    Ar1(Ar1Params),
    Logistic {
        data: LogisticData,
        step_sd: f64,
        burn_in: usize,
    },
    Ranef {
        y: Vec<f64>,
        hyper: Hyper,
        burn_in: usize,
    },
}

fn matrix(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>> {
    let p = rows.len();
    if p == 0 || rows.iter().any(|r| r.len() != p) {
        return Err(Error::Dimension(format!(
            "{what} must be a non-empty square matrix"
        )));
    }
    Ok(DMatrix::from_fn(p, p, |i, j| rows[i][j]))
}

impl Model {
    pub fn from_params(kind: ModelKind, params: &serde_json::Value) -> Result<Self> {
        let params = if params.is_null() {
            serde_json::Value::Object(Default::default())
        } else {
            params.clone()
        };
        let bad = |e: serde_json::Error| Error::Config(format!("{kind} parameters: {e}"));
        match kind {
            ModelKind::Ar1 => {
                let spec: Ar1Spec = serde_json::from_value(params).map_err(bad)?;
                let p = match spec {
                    Ar1Spec::Hadamard { p } => Ar1Params::hadamard_fixture(p)?,
                    Ar1Spec::Scalar { a, v, theta } => Ar1Params::scalar(a, v, theta)?,
                    Ar1Spec::Explicit { a, v, theta } => {
                        Ar1Params::new(matrix(&a, "A")?, SymMatrix::from_rows(&v)?, theta)?
                    }
                };
                Ok(Model::Ar1(p))
            }
            ModelKind::Logistic => {
                let spec: LogisticSpec = serde_json::from_value(params).map_err(bad)?;
                let data = match &spec.data {
                    Some(path) => LogisticData::load_csv(path)?,
                    None => LogisticData::bundled(),
                };
                Rwm::new(data.clone(), spec.step_sd)?;
                Ok(Model::Logistic {
                    data,
                    step_sd: spec.step_sd,
                    burn_in: spec.burn_in,
                })
            }
            ModelKind::Ranef => {
                let spec: RanefSpec = serde_json::from_value(params).map_err(bad)?;
                spec.hyper.validate()?;
                let y = match spec.y {
                    Some(y) => y,
                    None if spec.k >= 1 => synthetic_y(spec.k, &spec.hyper, spec.data_seed),
                    None => {
                        return Err(Error::InvalidParameter(
                            "ranef: k must be at least 1".into(),
                        ))
                    }
                };
                RanefSampler::new(y.clone(), spec.hyper)?;
                Ok(Model::Ranef {
                    y,
                    hyper: spec.hyper,
                    burn_in: spec.burn_in,
                })
            }
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            Model::Ar1(_) => ModelKind::Ar1,
            Model::Logistic { .. } => ModelKind::Logistic,
            Model::Ranef { .. } => ModelKind::Ranef,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Model::Ar1(p) => p.p(),
            Model::Logistic { data, .. } => data.dim(),
            Model::Ranef { y, .. } => 3 * y.len() + 2,
        }
    }

    /// Closed-form truth, available for the AR(1) model only.
    pub fn ar1_truth(&self) -> Option<Result<Ar1Truth>> {
        match self {
            Model::Ar1(p) => Some(Ar1Truth::new(p)),
            _ => None,
        }
    }

    /// Records `n` iterations after the model's burn-in.
    pub fn simulate<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Chain> {
        if n == 0 {
            return Err(Error::InvalidParameter("n must be at least 1".into()));
        }
        match self {
            Model::Ar1(p) => ar1::simulate(p, n, rng),
            Model::Logistic {
                data,
                step_sd,
                burn_in,
            } => {
                let mut s = Rwm::new(data.clone(), *step_sd)?;
                s.burn(rng, *burn_in);
                Ok(record(&mut s, n, rng))
            }
            Model::Ranef { y, hyper, burn_in } => {
                let mut s = RanefSampler::new(y.clone(), *hyper)?;
                s.burn(rng, *burn_in);
                Ok(record(&mut s, n, rng))
            }
        }
    }

    /// Sample mean of a long run, computed without storing the chain.
    pub fn long_run_mean<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<f64>> {
        if n == 0 {
            return Err(Error::InvalidParameter("n must be at least 1".into()));
        }
        Ok(match self {
            Model::Ar1(p) => running_mean(&mut ar1::Ar1Sampler::new(p, rng)?, n, rng),
            Model::Logistic {
                data,
                step_sd,
                burn_in,
            } => {
                let mut s = Rwm::new(data.clone(), *step_sd)?;
                s.burn(rng, *burn_in);
                running_mean(&mut s, n, rng)
            }
            Model::Ranef { y, hyper, burn_in } => {
                let mut s = RanefSampler::new(y.clone(), *hyper)?;
                s.burn(rng, *burn_in);
                running_mean(&mut s, n, rng)
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samplers::rng::seeded;
    use serde_json::json;

    #[test]
    fn parses_each_model() {
        let m = Model::from_params(ModelKind::Ar1, &json!({"kind": "hadamard", "p": 4})).unwrap();
        assert_eq!(m.dim(), 4);
        let m = Model::from_params(ModelKind::Ar1, &json!({"kind": "scalar", "a": 0.5})).unwrap();
        assert_eq!(m.ar1_truth().unwrap().unwrap().sigma.get(0, 0), 4.0);
        let m = Model::from_params(
            ModelKind::Ar1,
            &json!({"kind": "explicit", "a": [[0.2, 0.0], [0.0, 0.1]], "v": [[1.0, 0.0], [0.0, 1.0]], "theta": [0.0, 1.0]}),
        )
        .unwrap();
        assert_eq!(m.dim(), 2);
        let m = Model::from_params(ModelKind::Logistic, &serde_json::Value::Null).unwrap();
        assert_eq!(m.dim(), 5);
        assert!(m.ar1_truth().is_none());
        let m = Model::from_params(ModelKind::Ranef, &json!({"k": 21})).unwrap();
        assert_eq!(m.dim(), 65);
    }

    #[test]
    fn rejects_bad_blocks() {
        assert!(Model::from_params(ModelKind::Ar1, &json!({"kind": "hadamard", "p": 3})).is_err());
        assert!(Model::from_params(ModelKind::Ar1, &json!({})).is_err());
        assert!(Model::from_params(ModelKind::Logistic, &json!({"step": 0.3})).is_err());
        assert!(Model::from_params(ModelKind::Ranef, &json!({"k": 0})).is_err());
        assert!("probit".parse::<ModelKind>().is_err());
    }

    #[test]
    fn simulate_honours_dimension_and_seed() {
        let m = Model::from_params(ModelKind::Ranef, &json!({"burn_in": 10})).unwrap();
        let a = m.simulate(50, &mut seeded(1)).unwrap();
        assert_eq!((a.n(), a.p()), (50, 8));
        assert_eq!(a, m.simulate(50, &mut seeded(1)).unwrap());
        assert!(m.simulate(0, &mut seeded(1)).is_err());
    }

    #[test]
    fn long_run_mean_of_scalar_ar1() {
        let m = Model::from_params(
            ModelKind::Ar1,
            &json!({"kind": "scalar", "a": 0.5, "theta": 1.0}),
        )
        .unwrap();
        let mean = m.long_run_mean(200_000, &mut seeded(9)).unwrap();
        // sd of the mean is sqrt(4 / n)
        assert!((mean[0] - 2.0).abs() < 5.0 * (4.0f64 / 200_000.0).sqrt());
    }
}
