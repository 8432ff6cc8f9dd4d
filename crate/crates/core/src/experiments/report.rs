use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::harness::{OutcomeStatus, ReplicationRecord};
use crate::error::{Error, Result};
use crate::samplers::ModelKind;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthSummary {
    pub source: String,
    pub n_truth: Option<usize>,
    pub vector: Vec<f64>,
    /// Monte Carlo standard error of a long-run truth,
    /// `sqrt(mean diag Σ̂ / n_truth)`.
    pub se: Option<f64>,
}

/// Aggregates of one table row over all replications.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: String,
    pub ess_mean: Option<f64>,
    pub ess_se: Option<f64>,
    pub volroot_mean: Option<f64>,
    pub volroot_se: Option<f64>,
    pub logdet_mean: Option<f64>,
    pub logdet_se: Option<f64>,
    pub coverage: Option<f64>,
    pub coverage_se: Option<f64>,
    pub fail_count: usize,
    pub degenerate_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationReport {
    pub model: ModelKind,
    pub n: usize,
    pub replications: usize,
    pub level: f64,
    pub p: usize,
    pub master_seed: u64,
    pub truth: TruthSummary,
    pub rows: Vec<MethodSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub records: Option<Vec<ReplicationRecord>>,
}

impl ReplicationReport {
    pub fn row(&self, method: &str) -> Option<&MethodSummary> {
        self.rows.iter().find(|r| r.method == method)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.rows {
            w.serialize(CsvRow {
                method: &row.method,
                ess_mean: row.ess_mean,
                ess_se: row.ess_se,
                volroot_mean: row.volroot_mean,
                volroot_se: row.volroot_se,
                coverage: row.coverage,
                coverage_se: row.coverage_se,
                fail_count: row.fail_count,
            })?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

#[derive(Serialize)]
struct CsvRow<'a> {
    method: &'a str,
    ess_mean: Option<f64>,
    ess_se: Option<f64>,
    volroot_mean: Option<f64>,
    volroot_se: Option<f64>,
    coverage: Option<f64>,
    coverage_se: Option<f64>,
    fail_count: usize,
}

/// Mean and `sd / √k` of a sample; the s.e. needs at least two values.
fn mean_se(xs: &[f64]) -> (Option<f64>, Option<f64>) {
    let k = xs.len();
    if k == 0 {
        return (None, None);
    }
    let mean = xs.iter().sum::<f64>() / k as f64;
    if k < 2 {
        return (Some(mean), None);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1) as f64;
    (Some(mean), Some((var / k as f64).sqrt()))
}

pub(crate) fn summarize(method: &str, records: &[ReplicationRecord]) -> MethodSummary {
    let outcomes: Vec<_> = records.iter().filter_map(|r| r.outcome(method)).collect();
    let collect = |f: &dyn Fn(&super::harness::Outcome) -> Option<f64>| -> Vec<f64> {
        outcomes.iter().filter_map(|o| f(o)).collect()
    };
    let (ess_mean, ess_se) = mean_se(&collect(&|o| o.ess));
    let (volroot_mean, volroot_se) = mean_se(&collect(&|o| o.volroot));
    let (logdet_mean, logdet_se) = mean_se(&collect(&|o| o.logdet));
    let covered: Vec<bool> = outcomes.iter().filter_map(|o| o.covered).collect();
    let (coverage, coverage_se) = if covered.is_empty() {
        (None, None)
    } else {
        let k = covered.len() as f64;
        let hat = covered.iter().filter(|c| **c).count() as f64 / k;
        (Some(hat), Some((hat * (1.0 - hat) / k).sqrt()))
    };
    MethodSummary {
        method: method.to_string(),
        ess_mean,
        ess_se,
        volroot_mean,
        volroot_se,
        logdet_mean,
        logdet_se,
        coverage,
        coverage_se,
        fail_count: outcomes
            .iter()
            .filter(|o| o.status == OutcomeStatus::Failed)
            .count(),
        degenerate_count: outcomes
            .iter()
            .filter(|o| o.status == OutcomeStatus::Degenerate)
            .count(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Csv,
    Json,
}

impl TableFormat {
    /// `.json` selects JSON; anything else is csv.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => TableFormat::Json,
            _ => TableFormat::Csv,
        }
    }
}

impl FromStr for TableFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(TableFormat::Csv),
            "json" => Ok(TableFormat::Json),
            other => Err(Error::InvalidParameter(format!(
                "unknown table format `{other}`"
            ))),
        }
    }
}

impl fmt::Display for TableFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TableFormat::Csv => "csv",
            TableFormat::Json => "json",
        })
    }
}

/// One row per method: `method, ess_mean, ess_se, volroot_mean,
/// volroot_se, coverage, coverage_se, fail_count`. Missing statistics are
/// empty cells. JSON carries the whole report.
pub fn emit_tables(
    report: &ReplicationReport,
    path: impl AsRef<Path>,
    format: TableFormat,
) -> Result<()> {
    let path = path.as_ref();
    let text = match format {
        TableFormat::Csv => report.to_csv()?,
        TableFormat::Json => report.to_json()?,
    };
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::harness::Outcome;

    fn outcome(method: &str, ess: f64, covered: bool, status: OutcomeStatus) -> Outcome {
        Outcome {
            method: method.into(),
            status,
            ess: Some(ess),
            logdet: Some(ess.ln()),
            volroot: Some(1.0 / ess),
            covered: Some(covered),
            t_n: Some(3),
            error: None,
        }
    }

    fn records() -> Vec<ReplicationRecord> {
        [(100.0, true), (300.0, false), (200.0, true), (400.0, true)]
            .iter()
            .enumerate()
            .map(|(r, &(e, c))| ReplicationRecord {
                replication: r,
                mu_n: vec![0.0],
                outcomes: vec![outcome("mis", e, c, OutcomeStatus::Ok)],
                sigma_diag_mean: None,
            })
            .collect()
    }

    fn report() -> ReplicationReport {
        ReplicationReport {
            model: ModelKind::Ar1,
            n: 1000,
            replications: 4,
            level: 0.9,
            p: 1,
            master_seed: 0,
            truth: TruthSummary {
                source: "analytic".into(),
                n_truth: None,
                vector: vec![0.1],
                se: None,
            },
            rows: vec![summarize("mis", &records())],
            records: None,
        }
    }

    #[test]
    fn summary_statistics() {
        let s = summarize("mis", &records());
        assert_eq!(s.ess_mean, Some(250.0));
        // sample sd of {100, 200, 300, 400} is sqrt(50000 / 3)
        let se = (50_000.0f64 / 3.0).sqrt() / 2.0;
        assert!((s.ess_se.unwrap() - se).abs() < 1e-12);
        assert_eq!(s.coverage, Some(0.75));
        assert!((s.coverage_se.unwrap() - (0.75f64 * 0.25 / 4.0).sqrt()).abs() < 1e-15);
        assert_eq!(s.fail_count, 0);
    }

    #[test]
    fn aggregation_ignores_completion_order() {
        let mut rev = records();
        rev.reverse();
        let a = summarize("mis", &records());
        let b = summarize("mis", &rev);
        assert_eq!(a.coverage, b.coverage);
        assert!((a.ess_mean.unwrap() - b.ess_mean.unwrap()).abs() < 1e-12);
    }

    #[test]
    fn csv_has_one_row_and_seven_stat_columns() {
        let text = report().to_csv().unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(
            lines[0],
            "method,ess_mean,ess_se,volroot_mean,volroot_se,coverage,coverage_se,fail_count"
        );
        assert_eq!(lines[1].split(',').count(), 8);
    }

    #[test]
    fn json_round_trip_is_exact() {
        let mut r = report();
        r.rows[0].ess_mean = Some(0.1 + 0.2);
        r.records = Some(records());
        let back = ReplicationReport::from_json(&r.to_json().unwrap()).unwrap();
        assert_eq!(back.rows, r.rows);
        assert_eq!(back.truth, r.truth);
        assert_eq!(
            back.records.unwrap()[2].outcomes,
            r.records.unwrap()[2].outcomes
        );
    }

    #[test]
    fn single_value_has_no_standard_error() {
        let s = summarize("mis", &records()[..1]);
        assert_eq!(s.ess_se, None);
        assert_eq!(s.coverage, Some(1.0));
        assert_eq!(summarize("mk", &records()).ess_mean, None);
    }
}
