//! Empirical autocovariances of a chain and the lag-pair sums built on them.
//!
//! With `z_i = g(X_i) - μ_n`,
//!
//! ```text
//! γ_{n,t}   = (1/n) Σ_{i<n-t} z_i z_{i+t}ᵀ        (divisor n for every lag)
//! γ̃_{n,t}   = (γ_{n,t} + γ_{n,t}ᵀ) / 2
//! Γ_{n,i}   = γ̃_{n,2i} + γ̃_{n,2i+1}               0 <= i <= ⌊n/2 - 1⌋
//! Σ_{n,m}   = -γ_{n,0} + 2 Σ_{i<=m} Γ_{n,i}
//! ```
//!
//! Every lag is a direct `O(n p²)` scan over the centered rows.

use nalgebra::DMatrix;

use crate::chain::Chain;
use crate::error::{Error, Result};
use crate::symmat::SymMatrix;

/// Largest valid lag-pair index `⌊n/2 - 1⌋`, or `None` when `n < 2`.
pub fn max_pair_index(n: usize) -> Option<usize> {
    (n / 2).checked_sub(1)
}

/// Lag-`t` autocovariance `γ_{n,t}` (not symmetric in general).
pub fn autocov(chain: &Chain, t: usize) -> Result<DMatrix<f64>> {
    check_lag(chain.n(), t)?;
    Ok(lag_product(&chain.centered(), chain.n(), chain.p(), t))
}

/// Symmetrized lag-`t` autocovariance `γ̃_{n,t}`.
pub fn sym_autocov(chain: &Chain, t: usize) -> Result<SymMatrix> {
    check_lag(chain.n(), t)?;
    SymMatrix::symmetric_part(&lag_product(&chain.centered(), chain.n(), chain.p(), t))
}

/// Lag-pair sum `Γ_{n,i}`.
pub fn paired_gamma(chain: &Chain, i: usize) -> Result<SymMatrix> {
    LagPairSequence::new(chain).pair(i).cloned()
}

/// Partial sum `Σ_{n,m}`.
pub fn partial_sum_sigma(chain: &Chain, m: usize) -> Result<SymMatrix> {
    LagPairSequence::new(chain).partial_sum(m).cloned()
}

fn check_lag(n: usize, t: usize) -> Result<()> {
    if t >= n {
        return Err(Error::OutOfRange {
            index: t,
            max: n - 1,
        });
    }
    Ok(())
}

/// `(1/n) Σ_{i<n-t} z_i z_{i+t}ᵀ` for row-major centered data `z`.
fn lag_product(z: &[f64], n: usize, p: usize, t: usize) -> DMatrix<f64> {
    let mut acc = vec![0.0; p * p];
    if p == 1 {
        let s: f64 = z[..n - t].iter().zip(&z[t..]).map(|(a, b)| a * b).sum();
        acc[0] = s;
    } else {
        for i in 0..n - t {
            let x = &z[i * p..(i + 1) * p];
            let y = &z[(i + t) * p..(i + t + 1) * p];
            for (a, &xa) in x.iter().enumerate() {
                let row = &mut acc[a * p..(a + 1) * p];
                row.iter_mut().zip(y).for_each(|(r, &yb)| *r += xa * yb);
            }
        }
    }
    let inv_n = 1.0 / n as f64;
    DMatrix::from_fn(p, p, |a, b| acc[a * p + b] * inv_n)
}

/// Lazily materialized `Γ_{n,i}` and `Σ_{n,m}` for one chain.
///
/// Pairs are computed on first request and cached, so walking `m` upward
/// costs one extra `Γ_{n,m}` per step. Not `Sync`; confine to one thread.
#[derive(Debug, Clone)]
pub struct LagPairSequence {
    centered: Vec<f64>,
    n: usize,
    p: usize,
    gamma0: SymMatrix,
    pairs: Vec<SymMatrix>,
    partial_sums: Vec<SymMatrix>,
}

impl LagPairSequence {
    pub fn new(chain: &Chain) -> Self {
        let centered = chain.centered();
        let (n, p) = (chain.n(), chain.p());
        let gamma0 = SymMatrix::symmetric_part(&lag_product(&centered, n, p, 0))
            .expect("finite chain yields finite autocovariance");
        LagPairSequence {
            centered,
            n,
            p,
            gamma0,
            pairs: Vec::new(),
            partial_sums: Vec::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// `⌊n/2 - 1⌋`, or `None` for a single-draw chain.
    pub fn max_index(&self) -> Option<usize> {
        max_pair_index(self.n)
    }

    /// `γ_{n,0}`, the sample covariance with divisor `n`.
    pub fn gamma0(&self) -> &SymMatrix {
        &self.gamma0
    }

    fn check_index(&self, i: usize) -> Result<()> {
        match self.max_index() {
            Some(max) if i <= max => Ok(()),
            max => Err(Error::OutOfRange {
                index: i,
                max: max.unwrap_or(0),
            }),
        }
    }

    fn sym_lag(&self, t: usize) -> SymMatrix {
        SymMatrix::symmetric_part(&lag_product(&self.centered, self.n, self.p, t))
            .expect("finite chain yields finite autocovariance")
    }

    /// `Γ_{n,i}`.
    pub fn pair(&mut self, i: usize) -> Result<&SymMatrix> {
        self.check_index(i)?;
        while self.pairs.len() <= i {
            let k = self.pairs.len();
            let mut g = if k == 0 {
                self.gamma0.clone()
            } else {
                self.sym_lag(2 * k)
            };
            g.add_scaled(&self.sym_lag(2 * k + 1), 1.0);
            self.pairs.push(g);
        }
        Ok(&self.pairs[i])
    }

    /// `Σ_{n,m}`, built as `Σ_{n,m-1} + 2 Γ_{n,m}`.
    pub fn partial_sum(&mut self, m: usize) -> Result<&SymMatrix> {
        self.check_index(m)?;
        while self.partial_sums.len() <= m {
            let k = self.partial_sums.len();
            let mut s = match self.partial_sums.last() {
                Some(prev) => prev.clone(),
                None => self.gamma0.scaled(-1.0),
            };
            s.add_scaled(self.pair(k)?, 2.0);
            self.partial_sums.push(s);
        }
        Ok(&self.partial_sums[m])
    }

    /// `ξ_{n,i}`, the smallest eigenvalue of `Γ_{n,i}`.
    pub fn xi(&mut self, i: usize) -> Result<f64> {
        Ok(self.pair(i)?.eigen()?.min())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn series(v: &[f64]) -> Chain {
        Chain::from_series(v).unwrap()
    }

    fn naive_autocov(rows: &[Vec<f64>], t: usize) -> Vec<Vec<f64>> {
        let n = rows.len();
        let p = rows[0].len();
        let mu: Vec<f64> = (0..p)
            .map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n as f64)
            .collect();
        let mut out = vec![vec![0.0; p]; p];
        for a in 0..p {
            for b in 0..p {
                let mut s = 0.0;
                for i in 0..n - t {
                    s += (rows[i][a] - mu[a]) * (rows[i + t][b] - mu[b]);
                }
                out[a][b] = s / n as f64;
            }
        }
        out
    }

    #[test]
    fn constant_chain_has_zero_autocovariance() {
        let c = Chain::from_rows(&[[3.0, -1.0]; 6]).unwrap();
        for t in 0..6 {
            assert!(autocov(&c, t).unwrap().iter().all(|v| *v == 0.0));
        }
        assert_eq!(paired_gamma(&c, 2).unwrap(), SymMatrix::zeros(2));
        assert_eq!(partial_sum_sigma(&c, 0).unwrap(), SymMatrix::zeros(2));
    }

    #[test]
    fn two_point_series() {
        let c = series(&[0.0, 2.0]);
        assert_eq!(autocov(&c, 0).unwrap()[(0, 0)], 1.0);
        assert_eq!(autocov(&c, 1).unwrap()[(0, 0)], -0.5);
        assert_eq!(sym_autocov(&c, 1).unwrap().get(0, 0), -0.5);
        assert_eq!(paired_gamma(&c, 0).unwrap().get(0, 0), 0.5);
        assert_eq!(partial_sum_sigma(&c, 0).unwrap().get(0, 0), 0.0);
        assert!(matches!(autocov(&c, 2), Err(Error::OutOfRange { .. })));
        assert!(matches!(paired_gamma(&c, 1), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn alternating_series() {
        let c = series(&[1.0, -1.0, 1.0, -1.0]);
        assert_eq!(autocov(&c, 1).unwrap()[(0, 0)], -0.75);
        assert_eq!(paired_gamma(&c, 0).unwrap().get(0, 0), 0.25);
        assert_eq!(paired_gamma(&c, 1).unwrap().get(0, 0), 0.25);
        assert_eq!(partial_sum_sigma(&c, 1).unwrap().get(0, 0), 0.0);
    }

    #[test]
    fn symmetrized_bivariate_lag() {
        let c = Chain::from_rows(&[[1.0, 0.0], [0.0, 1.0]]).unwrap();
        let g = sym_autocov(&c, 1).unwrap();
        assert_eq!(g.to_rows(), vec![vec![-0.125, 0.125], vec![0.125, -0.125]]);
        let g0 = sym_autocov(&c, 0).unwrap();
        assert_eq!(g0.as_matrix(), &autocov(&c, 0).unwrap());
    }

    #[test]
    fn single_draw_has_no_pairs() {
        let mut seq = LagPairSequence::new(&series(&[1.0]));
        assert_eq!(seq.max_index(), None);
        assert!(seq.pair(0).is_err());
    }

    #[test]
    fn incremental_partial_sums_telescope() {
        let v: Vec<f64> = (0..40).map(|i| ((i * i) as f64 * 0.3).cos()).collect();
        let c = Chain::new(v, 20, 2).unwrap();
        let mut seq = LagPairSequence::new(&c);
        for m in 1..=9 {
            let prev = seq.partial_sum(m - 1).unwrap().clone();
            let pair = seq.pair(m).unwrap().clone();
            let mut expect = prev;
            expect.add_scaled(&pair, 2.0);
            assert_eq!(seq.partial_sum(m).unwrap(), &expect);
        }
    }

    fn arb_rows() -> impl Strategy<Value = Vec<Vec<f64>>> {
        (3usize..60, 1usize..4).prop_flat_map(|(n, p)| {
            prop::collection::vec(prop::collection::vec(-5.0f64..5.0, p), n)
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn matches_double_loop(rows in arb_rows(), t_frac in 0.0f64..1.0) {
            let c = Chain::from_rows(&rows).unwrap();
            let t = ((c.n() - 1) as f64 * t_frac) as usize;
            let got = autocov(&c, t).unwrap();
            let want = naive_autocov(&rows, t);
            for a in 0..c.p() {
                for b in 0..c.p() {
                    prop_assert!((got[(a, b)] - want[a][b]).abs() <= 1e-12);
                }
            }
        }

        #[test]
        fn lag_zero_is_psd(rows in arb_rows()) {
            let c = Chain::from_rows(&rows).unwrap();
            let g0 = sym_autocov(&c, 0).unwrap();
            prop_assert!(g0.eigen().unwrap().min() >= -1e-12 * g0.max_abs().max(1.0));
        }

        #[test]
        fn shift_invariance(rows in arb_rows(), shift in -100.0f64..100.0) {
            let c = Chain::from_rows(&rows).unwrap();
            let shifted = c.map_rows(c.p(), |r, out| {
                for (o, x) in out.iter_mut().zip(r) { *o = x + shift; }
            }).unwrap();
            for t in 0..c.n().min(5) {
                let a = autocov(&c, t).unwrap();
                let b = autocov(&shifted, t).unwrap();
                prop_assert!((a - b).amax() <= 1e-10);
            }
        }

        #[test]
        fn linear_map_equivariance(rows in arb_rows(), seed in prop::collection::vec(-1.0f64..1.0, 9)) {
            let c = Chain::from_rows(&rows).unwrap();
            let p = c.p();
            let b = DMatrix::from_fn(p, p, |i, j| seed[i * 3 + j] + if i == j { 3.0 } else { 0.0 });
            let mapped = c.map_rows(p, |r, out| {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = (0..p).map(|j| b[(i, j)] * r[j]).sum();
                }
            }).unwrap();
            for t in 0..c.n().min(4) {
                let lhs = autocov(&mapped, t).unwrap();
                let rhs = &b * autocov(&c, t).unwrap() * b.transpose();
                assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-10);
            }
        }
    }
}
