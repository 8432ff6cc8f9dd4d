use serde::{Deserialize, Serialize};

use crate::diagnostics::RegionKind;
use crate::error::{Error, Result};
use crate::estimators::{Method, MkStart};
use crate::samplers::ModelKind;

pub const DEFAULT_N_TRUTH: usize = 10_000_000;

fn default_n() -> usize {
    100_000
}

fn default_replications() -> usize {
    200
}

fn default_level() -> f64 {
    0.9
}

fn default_methods() -> Vec<Method> {
    Method::ALL.to_vec()
}

fn default_regions() -> Vec<RegionKind> {
    vec![
        RegionKind::Ellipsoid,
        RegionKind::Cube,
        RegionKind::Bonferroni,
    ]
}

fn default_n_truth() -> usize {
    DEFAULT_N_TRUTH
}

/// Where the true mean comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruthSpec {
    /// Closed form; AR(1) only.
    Analytic,
    /// Sample mean of an independent run of length `n_truth`.
    LongRun {
        #[serde(default = "default_n_truth")]
        n_truth: usize,
    },
    External {
        vector: Vec<f64>,
    },
}

/// One experiment. Missing fields take the desk-scale defaults
/// (`n = 10^5`, 200 replications, level 0.9, every method and region).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelKind,
    #[serde(default)]
    pub model_params: serde_json::Value,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default = "default_level")]
    pub level: f64,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default = "default_regions")]
    pub regions: Vec<RegionKind>,
    /// Defaults to analytic for `ar1` and a long run otherwise.
    #[serde(default)]
    pub truth: Option<TruthSpec>,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub mk_start: MkStart,
    /// Keep per-replication records in the report.
    #[serde(default)]
    pub keep_records: bool,
}

impl ExperimentConfig {
    pub fn new(model: ModelKind, model_params: serde_json::Value) -> Self {
        ExperimentConfig {
            model,
            model_params,
            n: default_n(),
            replications: default_replications(),
            level: default_level(),
            methods: default_methods(),
            regions: default_regions(),
            truth: None,
            master_seed: 0,
            mk_start: MkStart::default(),
            keep_records: false,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: ExperimentConfig = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn truth_spec(&self) -> TruthSpec {
        self.truth.clone().unwrap_or(match self.model {
            ModelKind::Ar1 => TruthSpec::Analytic,
            _ => TruthSpec::LongRun {
                n_truth: DEFAULT_N_TRUTH,
            },
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::Config("replications must be at least 1".into()));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::Config(format!(
                "level {} outside (0, 1)",
                self.level
            )));
        }
        if self.n < 2 {
            return Err(Error::Config("n must be at least 2".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("at least one method is required".into()));
        }
        match self.truth_spec() {
            TruthSpec::Analytic if self.model != crate::samplers::ModelKind::Ar1 => {
                return Err(Error::Config(format!(
                    "analytic truth is only available for ar1, not {}",
                    self.model
                )))
            }
            TruthSpec::LongRun { n_truth: 0 } => {
                return Err(Error::Config("n_truth must be at least 1".into()))
            }
            _ => {}
        }
        Ok(())
    }

    /// Requested methods, deduplicated, in table order.
    pub fn ordered_methods(&self) -> Vec<Method> {
        [Method::Mk, Method::Mis, Method::Misadj, Method::Uis]
            .into_iter()
            .filter(|m| self.methods.contains(m))
            .collect()
    }

    pub fn wants(&self, region: RegionKind) -> bool {
        self.regions.contains(&region)
    }
}
