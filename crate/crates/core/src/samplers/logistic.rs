//! Bayesian logistic regression with a `N(0, 4 I)` prior on `β`, sampled by
//! random-walk Metropolis with `N(0, s² I)` increments.

use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;

use super::rng::seeded;
use super::Sampler;
use crate::chain::Chain;
use crate::error::{Error, Result};

/// Prior variance of each coefficient.
pub const PRIOR_VARIANCE: f64 = 4.0;

/// Seed and coefficients behind the bundled data set.
pub const SYNTHETIC_SEED: u64 = 1101;
pub const SYNTHETIC_BETA: [f64; 5] = [1.0; 5];
pub const SYNTHETIC_ROWS: usize = 100;

const BUNDLED_CSV: &str = include_str!("../../data/logit.csv");

/// Responses `y ∈ {0, 1}` and a row-major design matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticData {
    x: Vec<f64>,
    y: Vec<f64>,
    d: usize,
}

/// `ln(1 + e^η)` without overflow.
pub fn softplus(eta: f64) -> f64 {
    eta.max(0.0) + (-eta.abs()).exp().ln_1p()
}

fn sigmoid(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

impl LogisticData {
    pub fn new(x: Vec<f64>, y: Vec<f64>, d: usize) -> Result<Self> {
        if d == 0 || y.is_empty() || x.len() != y.len() * d {
            return Err(Error::Dimension(format!(
                "logistic data: {} design entries for {} responses and {d} columns",
                x.len(),
                y.len()
            )));
        }
        if let Some(bad) = y.iter().find(|v| **v != 0.0 && **v != 1.0) {
            return Err(Error::InvalidParameter(format!(
                "response {bad} is not 0 or 1"
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite covariate".into()));
        }
        Ok(LogisticData { x, y, d })
    }

    /// Intercept plus four standard normal covariates, responses drawn
    /// from the model at [`SYNTHETIC_BETA`].
    pub fn synthetic(rows: usize, seed: u64) -> Self {
        let mut rng = seeded(seed);
        let d = SYNTHETIC_BETA.len();
        let mut x = Vec::with_capacity(rows * d);
        let mut y = Vec::with_capacity(rows);
        for _ in 0..rows {
            let start = x.len();
            x.push(1.0);
            for _ in 1..d {
                x.push(rng.sample(StandardNormal));
            }
            let eta: f64 = x[start..]
                .iter()
                .zip(&SYNTHETIC_BETA)
                .map(|(a, b)| a * b)
                .sum();
            let u: f64 = rng.random();
            y.push(f64::from(u < sigmoid(eta)));
        }
        LogisticData { x, y, d }
    }

    /// The 100 × 5 data set shipped in `data/logit.csv`.
    pub fn bundled() -> Self {
        LogisticData::parse_csv(BUNDLED_CSV.as_bytes()).expect("bundled data set is well formed")
    }

    /// Reads a csv whose first column is `y` and remaining columns are the design.
    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        LogisticData::parse_csv(file)
    }

    fn parse_csv<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let d = rdr
            .headers()?
            .len()
            .checked_sub(1)
            .filter(|d| *d > 0)
            .ok_or_else(|| {
                Error::Format("logistic data needs a y column and at least one covariate".into())
            })?;
        let (mut x, mut y) = (Vec::new(), Vec::new());
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec?;
            for (col, field) in rec.iter().enumerate() {
                let v: f64 = field.trim().parse().map_err(|_| {
                    Error::Format(format!(
                        "row {row}, column {col}: `{field}` is not a number"
                    ))
                })?;
                if col == 0 {
                    y.push(v);
                } else {
                    x.push(v);
                }
            }
        }
        LogisticData::new(x, y, d)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("y");
        for j in 1..=self.d {
            out.push_str(&format!(",x{j}"));
        }
        out.push('\n');
        for i in 0..self.rows() {
            out.push_str(&format!("{:?}", self.y[i]));
            for v in self.row(i) {
                out.push_str(&format!(",{v:?}"));
            }
            out.push('\n');
        }
        out
    }

    pub fn rows(&self) -> usize {
        self.y.len()
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.d..(i + 1) * self.d]
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    fn eta(&self, i: usize, beta: &[f64]) -> f64 {
        self.row(i).iter().zip(beta).map(|(a, b)| a * b).sum()
    }
}

/// `Σ_i [y_i η_i - softplus(η_i)] - ‖β‖² / 8`, dropping constants.
pub fn log_posterior(beta: &[f64], data: &LogisticData) -> f64 {
    let lik: f64 = (0..data.rows())
        .map(|i| {
            let eta = data.eta(i, beta);
            data.y[i] * eta - softplus(eta)
        })
        .sum();
    lik - beta.iter().map(|b| b * b).sum::<f64>() / (2.0 * PRIOR_VARIANCE)
}

/// `∇ log π(β) = Σ_i (y_i - σ(η_i)) x_i - β / 4`.
pub fn grad_log_posterior(beta: &[f64], data: &LogisticData) -> Vec<f64> {
    let mut g: Vec<f64> = beta.iter().map(|b| -b / PRIOR_VARIANCE).collect();
    for i in 0..data.rows() {
        let r = data.y[i] - sigmoid(data.eta(i, beta));
        for (gj, xj) in g.iter_mut().zip(data.row(i)) {
            *gj += r * xj;
        }
    }
    g
}

/// Metropolis rule for a symmetric proposal. Always consumes one uniform.
pub fn metropolis_accept<R: Rng + ?Sized>(log_ratio: f64, rng: &mut R) -> bool {
    let u: f64 = rng.random();
    log_ratio >= 0.0 || u.ln() < log_ratio
}

/// Random-walk Metropolis on the logistic posterior, started at `β = 0`.
#[derive(Debug, Clone)]
pub struct Rwm {
    data: LogisticData,
    step_sd: f64,
    beta: Vec<f64>,
    proposal: Vec<f64>,
    log_post: f64,
    proposed: u64,
    accepted: u64,
}

impl Rwm {
    pub fn new(data: LogisticData, step_sd: f64) -> Result<Self> {
        if !(step_sd > 0.0 && step_sd.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "step_sd must be positive, got {step_sd}"
            )));
        }
        let beta = vec![0.0; data.dim()];
        let log_post = log_posterior(&beta, &data);
        Ok(Rwm {
            proposal: beta.clone(),
            data,
            step_sd,
            beta,
            log_post,
            proposed: 0,
            accepted: 0,
        })
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }

    pub fn reset_counts(&mut self) {
        self.proposed = 0;
        self.accepted = 0;
    }
}

impl Sampler for Rwm {
    fn dim(&self) -> usize {
        self.data.dim()
    }

    fn step<R: Rng + ?Sized>(&mut self, rng: &mut R, out: &mut [f64]) {
        for (q, b) in self.proposal.iter_mut().zip(&self.beta) {
            let z: f64 = rng.sample(StandardNormal);
            *q = b + self.step_sd * z;
        }
        let lp = log_posterior(&self.proposal, &self.data);
        self.proposed += 1;
        if metropolis_accept(lp - self.log_post, rng) {
            self.beta.copy_from_slice(&self.proposal);
            self.log_post = lp;
            self.accepted += 1;
        }
        out.copy_from_slice(&self.beta);
    }
}

/// A recorded RWM run and its post-burn-in acceptance rate.
#[derive(Debug, Clone)]
pub struct RwmRun {
    pub chain: Chain,
    pub acceptance_rate: f64,
}

pub fn rwm_logistic<R: Rng + ?Sized>(
    data: &LogisticData,
    step_sd: f64,
    n: usize,
    burn_in: usize,
    rng: &mut R,
) -> Result<RwmRun> {
    if n == 0 {
        return Err(Error::InvalidParameter("rwm: n must be at least 1".into()));
    }
    let mut s = Rwm::new(data.clone(), step_sd)?;
    s.burn(rng, burn_in);
    s.reset_counts();
    let chain = super::record(&mut s, n, rng);
    Ok(RwmRun {
        chain,
        acceptance_rate: s.acceptance_rate(),
    })
}
