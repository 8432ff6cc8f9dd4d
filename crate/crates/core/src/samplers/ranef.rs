//! Random-scan Gibbs sampler for the one-way random effects model
//!
//! ```text
//! y_i | θ_i, γ_i        ~ N(θ_i, 1/γ_i)
//! θ_i | μ, λ_θ, λ_i     ~ N(μ, 1/(λ_θ λ_i))
//! μ ~ N(m0, 1/v0),  λ_θ ~ G(a1, b1),  λ_i ~ G(a2, b2),  γ_i ~ G(a3, b3)
//! ```
//!
//! All gamma laws are shape–rate. The recorded state is
//! `(θ_1..θ_K, μ, λ_θ, λ_1..λ_K, γ_1..γ_K)`, so `p = 3K + 2`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use super::rng::seeded;
use super::Sampler;
use crate::chain::Chain;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyper {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
    pub m0: f64,
    pub v0: f64,
}

impl Default for Hyper {
    fn default() -> Self {
        Hyper {
            a1: 0.1,
            a2: 0.1,
            a3: 1.5,
            b1: 0.1,
            b2: 0.1,
            b3: 1.5,
            m0: 0.0,
            v0: 0.001,
        }
    }
}

impl Hyper {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("a1", self.a1),
            ("a2", self.a2),
            ("a3", self.a3),
            ("b1", self.b1),
            ("b2", self.b2),
            ("b3", self.b3),
            ("v0", self.v0),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "hyperparameter {name} = {v} must be positive"
                )));
            }
        }
        if !self.m0.is_finite() {
            return Err(Error::InvalidParameter(
                "hyperparameter m0 must be finite".into(),
            ));
        }
        Ok(())
    }
}

/// Seeded data set: `θ_i ~ N(0, 1)`, `γ_i ~ G(a3, b3)`, `y_i ~ N(θ_i, 1/γ_i)`.
pub fn synthetic_y(k: usize, hyper: &Hyper, seed: u64) -> Vec<f64> {
    let mut rng = seeded(seed);
    let gamma = Gamma::new(hyper.a3, 1.0 / hyper.b3).expect("validated hyperparameters");
    (0..k)
        .map(|_| {
            let theta: f64 = rng.sample(StandardNormal);
            let g = gamma.sample(&mut rng);
            let z: f64 = rng.sample(StandardNormal);
            theta + z / g.sqrt()
        })
        .collect()
}

/// Full state of the sampler.
#[derive(Debug, Clone, PartialEq)]
pub struct RanefState {
    pub theta: Vec<f64>,
    pub mu: f64,
    pub lambda_theta: f64,
    pub lambda: Vec<f64>,
    pub gamma: Vec<f64>,
}

impl RanefState {
    pub fn k(&self) -> usize {
        self.theta.len()
    }

    pub fn write(&self, out: &mut [f64]) {
        let k = self.k();
        out[..k].copy_from_slice(&self.theta);
        out[k] = self.mu;
        out[k + 1] = self.lambda_theta;
        out[k + 2..2 * k + 2].copy_from_slice(&self.lambda);
        out[2 * k + 2..3 * k + 2].copy_from_slice(&self.gamma);
    }
}

/// Shape and rate of `λ_θ | rest`.
pub fn lambda_theta_conditional(s: &RanefState, h: &Hyper) -> (f64, f64) {
    let ss: f64 = s
        .theta
        .iter()
        .zip(&s.lambda)
        .map(|(t, l)| l * (t - s.mu).powi(2))
        .sum();
    (h.a1 + 0.5 * s.k() as f64, h.b1 + 0.5 * ss)
}

/// Shape and rate of `λ_i | rest`.
pub fn lambda_conditional(s: &RanefState, h: &Hyper, i: usize) -> (f64, f64) {
    (
        h.a2 + 0.5,
        h.b2 + 0.5 * s.lambda_theta * (s.theta[i] - s.mu).powi(2),
    )
}

/// Shape and rate of `γ_i | rest`.
pub fn gamma_conditional(s: &RanefState, h: &Hyper, y: &[f64], i: usize) -> (f64, f64) {
    (h.a3 + 0.5, h.b3 + 0.5 * (y[i] - s.theta[i]).powi(2))
}

/// Precision `Q` and linear term `b` of `ξ = (θ, μ) | rest`, whose density is
/// proportional to `exp(-ξᵀ Q ξ / 2 + bᵀ ξ)`.
pub fn xi_conditional(s: &RanefState, h: &Hyper, y: &[f64]) -> (DMatrix<f64>, DVector<f64>) {
    let k = s.k();
    let mut q = DMatrix::zeros(k + 1, k + 1);
    let mut b = DVector::zeros(k + 1);
    q[(k, k)] = h.v0;
    b[k] = h.v0 * h.m0;
    for i in 0..k {
        let w = s.lambda_theta * s.lambda[i];
        q[(i, i)] = s.gamma[i] + w;
        q[(i, k)] = -w;
        q[(k, i)] = -w;
        q[(k, k)] += w;
        b[i] = s.gamma[i] * y[i];
    }
    (q, b)
}

fn draw_gamma<R: Rng + ?Sized>(rng: &mut R, (shape, rate): (f64, f64)) -> f64 {
    Gamma::new(shape, 1.0 / rate)
        .expect("positive shape and rate")
        .sample(rng)
}

/// The four blocks of the random scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    LambdaTheta,
    Lambda,
    Gamma,
    Xi,
}

impl Block {
    pub const ALL: [Block; 4] = [Block::LambdaTheta, Block::Lambda, Block::Gamma, Block::Xi];
}

#[derive(Debug, Clone)]
pub struct RanefSampler {
    y: Vec<f64>,
    hyper: Hyper,
    state: RanefState,
}

impl RanefSampler {
    /// Starts at `θ = y`, `μ = ȳ` and unit precisions.
    pub fn new(y: Vec<f64>, hyper: Hyper) -> Result<Self> {
        hyper.validate()?;
        if y.is_empty() || y.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "ranef: y must be a non-empty finite vector".into(),
            ));
        }
        let k = y.len();
        let state = RanefState {
            theta: y.clone(),
            mu: y.iter().sum::<f64>() / k as f64,
            lambda_theta: 1.0,
            lambda: vec![1.0; k],
            gamma: vec![1.0; k],
        };
        Ok(RanefSampler { y, hyper, state })
    }

    pub fn with_state(y: Vec<f64>, hyper: Hyper, state: RanefState) -> Result<Self> {
        let mut s = RanefSampler::new(y, hyper)?;
        if state.k() != s.y.len()
            || state.lambda.len() != state.k()
            || state.gamma.len() != state.k()
        {
            return Err(Error::Dimension("ranef: state does not match y".into()));
        }
        s.state = state;
        Ok(s)
    }

    pub fn state(&self) -> &RanefState {
        &self.state
    }

    pub fn update<R: Rng + ?Sized>(&mut self, block: Block, rng: &mut R) {
        let (s, h, y) = (&mut self.state, &self.hyper, &self.y);
        match block {
            Block::LambdaTheta => s.lambda_theta = draw_gamma(rng, lambda_theta_conditional(s, h)),
            Block::Lambda => {
                for i in 0..s.k() {
                    s.lambda[i] = draw_gamma(rng, lambda_conditional(s, h, i));
                }
            }
            Block::Gamma => {
                for i in 0..s.k() {
                    s.gamma[i] = draw_gamma(rng, gamma_conditional(s, h, y, i));
                }
            }
            Block::Xi => {
                let (q, b) = xi_conditional(s, h, y);
                let chol = q
                    .cholesky()
                    .expect("conditional precision is positive definite");
                let mean = chol.solve(&b);
                let z = DVector::from_fn(s.k() + 1, |_, _| rng.sample::<f64, _>(StandardNormal));
                // Q = L Lᵀ, so L⁻ᵀ z has covariance Q⁻¹.
                let dev = chol
                    .l()
                    .transpose()
                    .solve_upper_triangular(&z)
                    .expect("cholesky factor is invertible");
                let xi = mean + dev;
                let k = s.k();
                s.theta.copy_from_slice(&xi.as_slice()[..k]);
                s.mu = xi[k];
            }
        }
    }
}

impl Sampler for RanefSampler {
    fn dim(&self) -> usize {
        3 * self.y.len() + 2
    }

    fn step<R: Rng + ?Sized>(&mut self, rng: &mut R, out: &mut [f64]) {
        let block = Block::ALL[rng.random_range(0..4)];
        self.update(block, rng);
        self.state.write(out);
    }
}

pub fn gibbs_random_effects<R: Rng + ?Sized>(
    y: &[f64],
    hyper: &Hyper,
    n: usize,
    burn_in: usize,
    rng: &mut R,
) -> Result<Chain> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "ranef: n must be at least 1".into(),
        ));
    }
    let mut s = RanefSampler::new(y.to_vec(), *hyper)?;
    s.burn(rng, burn_in);
    Ok(super::record(&mut s, n, rng))
}
