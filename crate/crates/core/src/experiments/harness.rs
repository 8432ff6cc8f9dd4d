use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, TruthSpec};
use super::report::{summarize, ReplicationReport, TruthSummary};
use crate::chain::Chain;
use crate::diagnostics::{
    cube_region, ellipsoid_region, ess_from_logdets, min_univariate_ess_from, RegionKind,
};
use crate::error::{Error, Result};
use crate::estimators::{Estimator, Method, MvEstimate};
use crate::samplers::rng::{stream, TRUTH_STREAM};
use crate::samplers::Model;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeStatus {
    Ok,
    /// mK or uIS fell back to `γ_{n,0}`.
    Degenerate,
    Failed,
}

/// One table row's result in one replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub method: String,
    pub status: OutcomeStatus,
    pub ess: Option<f64>,
    pub logdet: Option<f64>,
    pub volroot: Option<f64>,
    pub covered: Option<bool>,
    pub t_n: Option<i64>,
    pub error: Option<String>,
}

impl Outcome {
    fn failed(method: &str, err: &Error) -> Self {
        Outcome {
            method: method.to_string(),
            status: OutcomeStatus::Failed,
            ess: None,
            logdet: None,
            volroot: None,
            covered: None,
            t_n: None,
            error: Some(err.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub replication: usize,
    pub mu_n: Vec<f64>,
    pub outcomes: Vec<Outcome>,
    /// Mean diagonal of the first usable `Σ̂`, used for the truth s.e.
    #[serde(skip)]
    pub(crate) sigma_diag_mean: Option<f64>,
}

impl ReplicationRecord {
    pub fn outcome(&self, method: &str) -> Option<&Outcome> {
        self.outcomes.iter().find(|o| o.method == method)
    }
}

/// Table rows produced by a configuration.
pub(crate) fn row_names(config: &ExperimentConfig) -> Vec<String> {
    let mut rows = Vec::new();
    for m in config.ordered_methods() {
        rows.push(m.as_str().to_string());
        if m == Method::Uis && config.wants(RegionKind::Bonferroni) {
            rows.push("uis-bonferroni".to_string());
        }
    }
    rows
}

fn multivariate_outcome(
    method: Method,
    est: Result<MvEstimate>,
    config: &ExperimentConfig,
    chain: &Chain,
    mu_n: &[f64],
    logdet_lambda: Option<f64>,
    truth: &[f64],
) -> (Outcome, Option<f64>) {
    let method = method.as_str();
    let e = match est {
        Ok(e) => e,
        Err(err) => return (Outcome::failed(method, &err), None),
    };
    let status = if e.is_degenerate() {
        OutcomeStatus::Degenerate
    } else {
        OutcomeStatus::Ok
    };
    let diag_mean = e.sigma.diagonal().iter().sum::<f64>() / e.p() as f64;
    let Some(logdet) = e.logdet else {
        let err = Error::NotPositiveDefinite {
            min_eigenvalue: e.sigma.eigen().map(|s| s.min()).unwrap_or(f64::NAN),
        };
        let mut o = Outcome::failed(method, &err);
        o.t_n = Some(e.t_n_signed());
        return (o, None);
    };
    let ess = logdet_lambda.map(|l| ess_from_logdets(chain.n(), l, logdet, e.p() as f64));
    let (volroot, covered, error) = if config.wants(RegionKind::Ellipsoid) {
        match ellipsoid_region(mu_n, &e.sigma, chain.n(), 1.0 - config.level)
            .and_then(|r| Ok((r.volume_root(), r.contains(truth)?)))
        {
            Ok((v, c)) => (Some(v), Some(c), None),
            Err(err) => (None, None, Some(err.to_string())),
        }
    } else {
        (None, None, None)
    };
    let status = if error.is_some() {
        OutcomeStatus::Failed
    } else {
        status
    };
    (
        Outcome {
            method: method.to_string(),
            status,
            ess,
            logdet: Some(logdet),
            volroot,
            covered,
            t_n: Some(e.t_n_signed()),
            error,
        },
        Some(diag_mean),
    )
}

fn replicate(
    model: &Model,
    config: &ExperimentConfig,
    r: usize,
    truth: &[f64],
) -> Result<ReplicationRecord> {
    let mut rng = stream(config.master_seed, r as u64);
    let chain = model.simulate(config.n, &mut rng)?;
    let mu_n = chain.mean();
    let mut est = Estimator::new(&chain)?;
    let logdet_lambda = est.sequence().gamma0().logdet_pd().ok();
    let mut outcomes = Vec::new();
    let mut diag_means: Vec<(Method, f64)> = Vec::new();

    for m in config.ordered_methods() {
        match m {
            Method::Mk | Method::Mis | Method::Misadj => {
                let result = match m {
                    Method::Mk => est.mk(config.mk_start),
                    Method::Mis => est.mis(),
                    _ => est.misadj(),
                };
                let (o, d) =
                    multivariate_outcome(m, result, config, &chain, &mu_n, logdet_lambda, truth);
                if let Some(d) = d {
                    diag_means.push((m, d));
                }
                outcomes.push(o);
            }
            Method::Uis => {
                let uis = est.uis_all()?;
                let degenerate = uis.iter().any(|u| u.is_degenerate());
                let status = if degenerate {
                    OutcomeStatus::Degenerate
                } else {
                    OutcomeStatus::Ok
                };
                let ess = min_univariate_ess_from(chain.n(), &uis).ok().map(|m| m.ess);
                let sd: Vec<f64> = uis.iter().map(|u| u.sigma2.max(0.0).sqrt()).collect();
                let mean_sigma2 = uis.iter().map(|u| u.sigma2).sum::<f64>() / uis.len() as f64;
                diag_means.push((m, mean_sigma2));
                let mut kinds = vec![(m.as_str(), false, config.wants(RegionKind::Cube))];
                if config.wants(RegionKind::Bonferroni) {
                    kinds.push(("uis-bonferroni", true, true));
                }
                for (name, bonferroni, with_region) in kinds {
                    let mut o = Outcome {
                        method: name.to_string(),
                        status,
                        ess,
                        logdet: None,
                        volroot: None,
                        covered: None,
                        t_n: None,
                        error: None,
                    };
                    if with_region {
                        match cube_region(&mu_n, &sd, chain.n(), 1.0 - config.level, bonferroni)
                            .and_then(|r| Ok((r.volume_root(), r.contains(truth)?)))
                        {
                            Ok((v, c)) => {
                                o.volroot = Some(v);
                                o.covered = Some(c);
                            }
                            Err(err) => {
                                o.status = OutcomeStatus::Failed;
                                o.error = Some(err.to_string());
                            }
                        }
                    }
                    outcomes.push(o);
                }
            }
        }
    }

    let sigma_diag_mean = [Method::Mis, Method::Misadj, Method::Mk, Method::Uis]
        .iter()
        .find_map(|want| diag_means.iter().find(|(m, _)| m == want).map(|(_, d)| *d));
    Ok(ReplicationRecord {
        replication: r,
        mu_n,
        outcomes,
        sigma_diag_mean,
    })
}

fn resolve_truth(model: &Model, config: &ExperimentConfig) -> Result<(Vec<f64>, TruthSummary)> {
    let p = model.dim();
    let spec = config.truth_spec();
    let vector = match &spec {
        TruthSpec::Analytic => {
            let truth = model.ar1_truth().ok_or_else(|| {
                Error::Config(format!(
                    "analytic truth is only available for ar1, not {}",
                    model.kind()
                ))
            })??;
            truth.mu
        }
        TruthSpec::LongRun { n_truth } => {
            let mut rng = stream(config.master_seed, TRUTH_STREAM);
            model.long_run_mean(*n_truth, &mut rng)?
        }
        TruthSpec::External { vector } => vector.clone(),
    };
    if vector.len() != p {
        return Err(Error::Config(format!(
            "truth vector has {} entries, model dimension is {p}",
            vector.len()
        )));
    }
    let summary = TruthSummary {
        source: match spec {
            TruthSpec::Analytic => "analytic",
            TruthSpec::LongRun { .. } => "long_run",
            TruthSpec::External { .. } => "external",
        }
        .to_string(),
        n_truth: match spec {
            TruthSpec::LongRun { n_truth } => Some(n_truth),
            _ => None,
        },
        vector: vector.clone(),
        se: None,
    };
    Ok((vector, summary))
}

/// Runs every replication (in parallel, each on its own stream) and
/// aggregates the results in replication order.
///
/// Estimator failures inside a replication are recorded and counted. Errors
/// in configuration, truth resolution or simulation abort the run.
pub fn run_replications(config: &ExperimentConfig) -> Result<ReplicationReport> {
    config.validate()?;
    let model = Model::from_params(config.model, &config.model_params)?;
    let (truth, mut truth_summary) = resolve_truth(&model, config)?;
    let records = (0..config.replications)
        .into_par_iter()
        .map(|r| replicate(&model, config, r, &truth))
        .collect::<Result<Vec<_>>>()?;
    if let Some(n_truth) = truth_summary.n_truth {
        let diag: Vec<f64> = records.iter().filter_map(|r| r.sigma_diag_mean).collect();
        if !diag.is_empty() {
            let mean = diag.iter().sum::<f64>() / diag.len() as f64;
            truth_summary.se = Some((mean.max(0.0) / n_truth as f64).sqrt());
        }
    }
    let rows = row_names(config)
        .iter()
        .map(|name| summarize(name, &records))
        .collect();
    Ok(ReplicationReport {
        model: config.model,
        n: config.n,
        replications: config.replications,
        level: config.level,
        p: model.dim(),
        master_seed: config.master_seed,
        truth: truth_summary,
        rows,
        records: config.keep_records.then_some(records),
    })
}
