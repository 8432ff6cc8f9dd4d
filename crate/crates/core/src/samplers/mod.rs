//! Seeded test processes: a reversible vector AR(1) with closed-form truth,
//! random-walk Metropolis on a Bayesian logistic regression and a
//! random-scan Gibbs sampler for a normal random-effects model.

pub mod ar1;
pub mod hadamard;
pub mod logistic;
pub mod model;
pub mod ranef;
pub mod rng;

use rand::Rng;

use crate::chain::Chain;

pub use ar1::{Ar1Params, Ar1Truth, LagConvention};
pub use hadamard::hadamard;
pub use logistic::{LogisticData, Rwm};
pub use model::{Model, ModelKind};
pub use ranef::{Hyper, RanefSampler};
pub use rng::{stream, ChainRng};

/// One Markov transition at a time.
pub trait Sampler {
    /// Number of recorded coordinates.
    fn dim(&self) -> usize;

    /// Advances the state and writes the recorded values into `out`.
    fn step<R: Rng + ?Sized>(&mut self, rng: &mut R, out: &mut [f64]);

    fn burn<R: Rng + ?Sized>(&mut self, rng: &mut R, iterations: usize) {
        let mut out = vec![0.0; self.dim()];
        for _ in 0..iterations {
            self.step(rng, &mut out);
        }
    }
}

/// Records `n` iterations into a chain.
pub fn record<S: Sampler, R: Rng + ?Sized>(sampler: &mut S, n: usize, rng: &mut R) -> Chain {
    let p = sampler.dim();
    let mut values = vec![0.0; n * p];
    for row in values.chunks_exact_mut(p) {
        sampler.step(rng, row);
    }
    Chain::new(values, n, p).expect("samplers produce finite values")
}

/// Sample mean over `n` iterations without storing the chain.
pub fn running_mean<S: Sampler, R: Rng + ?Sized>(
    sampler: &mut S,
    n: usize,
    rng: &mut R,
) -> Vec<f64> {
    const BLOCK: usize = 4096;
    let p = sampler.dim();
    let mut out = vec![0.0; p];
    let mut block = vec![0.0; p];
    let mut total = vec![0.0; p];
    for i in 0..n {
        sampler.step(rng, &mut out);
        for (b, o) in block.iter_mut().zip(&out) {
            *b += o;
        }
        if (i + 1) % BLOCK == 0 || i + 1 == n {
            for (t, b) in total.iter_mut().zip(block.iter_mut()) {
                *t += *b;
                *b = 0.0;
            }
        }
    }
    total.iter().map(|t| t / n as f64).collect()
}
