//! Reversible vector AR(1): `X_{k+1} = θ + A X_k + U_{k+1}`, `U ~ N_p(0, V)`.
//!
//! The chain satisfies detailed balance iff `A V` is symmetric. With
//! `C = (I - A²)⁻¹ V` the stationary law is `N_p((I - A)⁻¹ θ, C)`, the lag
//! covariances are `γ_t = C (Aᵀ)ᵗ = Aᵗ C`, and
//! `Σ = (I - A)⁻¹ V (I - A)⁻ᵀ = {2 (I - A)⁻¹ - I} C`.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::hadamard::hadamard;
use super::Sampler;
use crate::chain::Chain;
use crate::error::{Error, Result};
use crate::symmat::SymMatrix;

/// Largest tolerated `|A V - (A V)ᵀ|`, relative to `max(1, |A V|)`.
pub const REVERSIBILITY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Ar1Params {
    a: DMatrix<f64>,
    v: SymMatrix,
    theta: Vec<f64>,
}

impl Ar1Params {
    pub fn new(a: DMatrix<f64>, v: SymMatrix, theta: Vec<f64>) -> Result<Self> {
        let p = theta.len();
        if p == 0 || a.nrows() != p || a.ncols() != p || v.dim() != p {
            return Err(Error::Dimension(format!(
                "ar1: theta has {p} entries, A is {}x{}, V is {}x{}",
                a.nrows(),
                a.ncols(),
                v.dim(),
                v.dim()
            )));
        }
        if a.iter()
            .chain(&theta)
            .chain(v.as_matrix().iter())
            .any(|x| !x.is_finite())
        {
            return Err(Error::InvalidParameter("ar1: non-finite parameter".into()));
        }
        let spec = v.eigen()?;
        if !spec.is_pd() {
            return Err(Error::NotPositiveDefinite {
                min_eigenvalue: spec.min(),
            });
        }
        let av = &a * v.as_matrix();
        let asym = (&av - av.transpose()).amax();
        if asym > REVERSIBILITY_TOLERANCE * av.amax().max(1.0) {
            return Err(Error::InvalidParameter(format!(
                "ar1: A V is not symmetric (max asymmetry {asym:e}); the chain is not reversible"
            )));
        }
        let params = Ar1Params { a, v, theta };
        let rho = params.spectral_radius()?;
        if rho >= 1.0 {
            return Err(Error::InvalidParameter(format!(
                "ar1: spectral radius of A is {rho}, must be below 1"
            )));
        }
        Ok(params)
    }

    pub fn scalar(a: f64, v: f64, theta: f64) -> Result<Self> {
        Ar1Params::new(
            DMatrix::from_element(1, 1, a),
            SymMatrix::from_diagonal(&[v])?,
            vec![theta],
        )
    }

    /// `θ = 1_p`, `V = I`, `A = p⁻¹ H diag(2⁻¹, …, 2⁻ᵖ) Hᵀ` with `H` Hadamard.
    ///
    /// Entry `(i, j)` and `(j, i)` are summed in the same order, so `A` is
    /// exactly symmetric.
    pub fn hadamard_fixture(p: usize) -> Result<Self> {
        let h = hadamard(p)?;
        let d: Vec<f64> = (1..=p).map(|k| 0.5f64.powi(k as i32)).collect();
        let a = DMatrix::from_fn(p, p, |i, j| {
            let s: f64 = (0..p)
                .map(|k| f64::from(h[(i, k)] * h[(j, k)]) * d[k])
                .sum();
            s / p as f64
        });
        Ar1Params::new(a, SymMatrix::identity(p), vec![1.0; p])
    }

    pub fn p(&self) -> usize {
        self.theta.len()
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn v(&self) -> &SymMatrix {
        &self.v
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    /// `A` is similar to the symmetric `V^{-1/2} A V^{1/2}`, so its
    /// spectrum is real.
    pub fn modal(&self) -> Result<Modal> {
        let spec = self.v.eigen()?;
        let half = spec.reconstruct_with(f64::sqrt);
        let inv_half = spec.reconstruct_with(|l| 1.0 / l.sqrt());
        let w = SymMatrix::symmetric_part(&(&inv_half * &self.a * &half))?;
        let ws = w.eigen()?;
        Ok(Modal {
            basis: half * ws.eigenvectors,
            lambdas: ws.eigenvalues,
        })
    }

    pub fn spectral_radius(&self) -> Result<f64> {
        let m = self.modal()?;
        Ok(m.lambdas.iter().fold(0.0, |r, l| r.max(l.abs())))
    }
}

/// Lag-covariance formula used by [`Ar1Truth`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LagConvention {
    /// `γ_t = Aᵗ C`.
    #[default]
    Standard,
    /// `γ_t = A^{2t} C` and `Σ = {2 (I - A²)⁻¹ - I} C`; kept only for comparison.
    PrintedEvenPower,
}

/// Closed-form moments of a stationary reversible AR(1).
#[derive(Debug, Clone)]
pub struct Ar1Truth {
    pub mu: Vec<f64>,
    pub c: SymMatrix,
    pub sigma: SymMatrix,
    a: DMatrix<f64>,
    convention: LagConvention,
}

impl Ar1Truth {
    pub fn new(params: &Ar1Params) -> Result<Self> {
        Ar1Truth::with_convention(params, LagConvention::Standard)
    }

    pub fn with_convention(params: &Ar1Params, convention: LagConvention) -> Result<Self> {
        let p = params.p();
        let id = DMatrix::<f64>::identity(p, p);
        let singular = |what: &str| Error::InvalidParameter(format!("ar1: {what} is singular"));
        let inv_i_minus_a = (&id - &params.a)
            .try_inverse()
            .ok_or_else(|| singular("I - A"))?;
        let a2 = &params.a * &params.a;
        let inv_i_minus_a2 = (&id - &a2)
            .try_inverse()
            .ok_or_else(|| singular("I - A^2"))?;
        let theta = nalgebra::DVector::from_column_slice(&params.theta);
        let mu = (&inv_i_minus_a * theta).iter().copied().collect();
        let c = SymMatrix::symmetric_part(&(&inv_i_minus_a2 * params.v.as_matrix()))?;
        let sigma = match convention {
            LagConvention::Standard => SymMatrix::symmetric_part(
                &(&inv_i_minus_a * params.v.as_matrix() * inv_i_minus_a.transpose()),
            )?,
            LagConvention::PrintedEvenPower => {
                SymMatrix::symmetric_part(&((inv_i_minus_a2.scale(2.0) - &id) * c.as_matrix()))?
            }
        };
        Ok(Ar1Truth {
            mu,
            c,
            sigma,
            a: params.a.clone(),
            convention,
        })
    }

    pub fn p(&self) -> usize {
        self.mu.len()
    }

    pub fn convention(&self) -> LagConvention {
        self.convention
    }

    /// `γ_t = E[(X_k - μ)(X_{k+t} - μ)ᵀ]`.
    pub fn gamma(&self, t: usize) -> DMatrix<f64> {
        match self.convention {
            LagConvention::Standard => self.c.as_matrix() * self.a.transpose().pow(t as u32),
            LagConvention::PrintedEvenPower => self.a.pow(2 * t as u32) * self.c.as_matrix(),
        }
    }

    pub fn sym_gamma(&self, t: usize) -> SymMatrix {
        SymMatrix::symmetric_part(&self.gamma(t)).expect("finite lag covariance")
    }

    /// `Γ_i = γ̃_{2i} + γ̃_{2i+1}`.
    pub fn pair(&self, i: usize) -> SymMatrix {
        self.sym_gamma(2 * i).add(&self.sym_gamma(2 * i + 1))
    }

    /// `Σ_m = -γ_0 + 2 Σ_{i ≤ m} Γ_i`.
    pub fn partial_sum(&self, m: usize) -> SymMatrix {
        let mut s = self.c.scaled(-1.0);
        for i in 0..=m {
            s.add_scaled(&self.pair(i), 2.0);
        }
        s
    }
}

/// Every population matrix of the chain equals `B diag(f(λ)) Bᵀ` for the
/// fixed invertible `B = V^{1/2} U`, where `U diag(λ) Uᵀ = V^{-1/2} A V^{1/2}`.
///
/// Positive definiteness then reduces to `f(λ_k) > 0` for all `k`, and
/// determinant ratios to `Π_k f(λ_k) / g(λ_k)`, both free of the rounding
/// error of a dense eigensolver.
#[derive(Debug, Clone)]
pub struct Modal {
    pub basis: DMatrix<f64>,
    pub lambdas: Vec<f64>,
}

impl Modal {
    fn c(l: f64) -> f64 {
        1.0 / (1.0 - l * l)
    }

    /// Modal value of `γ_t`.
    pub fn gamma(t: usize, l: f64) -> f64 {
        l.powi(t as i32) * Modal::c(l)
    }

    /// Modal value of `Γ_i`: `λ^{2i} (1 + λ) / (1 - λ²)`.
    pub fn pair(i: usize, l: f64) -> f64 {
        l.powi(2 * i as i32) * (1.0 + l) * Modal::c(l)
    }

    /// Modal value of `Σ_m`.
    pub fn partial(m: usize, l: f64) -> f64 {
        -Modal::c(l) + 2.0 * (0..=m).map(|i| Modal::pair(i, l)).sum::<f64>()
    }

    /// Modal value of `Σ`: `1 / (1 - λ)²`.
    pub fn sigma(l: f64) -> f64 {
        1.0 / ((1.0 - l) * (1.0 - l))
    }

    /// `Σ - Σ_m` in modal form: `2 (1 + λ) λ^{2(m+1)} / (1 - λ²)²`.
    pub fn tail(m: usize, l: f64) -> f64 {
        2.0 * (1.0 + l) * l.powi(2 * (m as i32 + 1)) * Modal::c(l) * Modal::c(l)
    }

    pub fn eigs(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.lambdas.iter().map(|&l| f(l)).collect()
    }

    pub fn matrix(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        let mut scaled = self.basis.clone();
        for (k, &l) in self.lambdas.iter().enumerate() {
            scaled.column_mut(k).scale_mut(f(l));
        }
        SymMatrix::symmetric_part(&(scaled * self.basis.transpose())).expect("finite modal matrix")
    }

    /// `ln(|Σ_m| / |Σ_{m-1}|)` for `m >= 1`.
    pub fn log_det_increment(&self, m: usize) -> f64 {
        assert!(m >= 1, "increment needs m >= 1");
        self.lambdas
            .iter()
            .map(|&l| (2.0 * Modal::pair(m, l) / Modal::partial(m - 1, l)).ln_1p())
            .sum()
    }

    /// `ln(|Σ_m| / |Σ|)`.
    pub fn log_det_gap(&self, m: usize) -> f64 {
        self.lambdas
            .iter()
            .map(|&l| (-Modal::tail(m, l) / Modal::sigma(l)).ln_1p())
            .sum()
    }
}

/// Draws `X_0` from the stationary law, then records `X_1, X_2, …`.
#[derive(Debug, Clone)]
pub struct Ar1Sampler {
    p: usize,
    a: Vec<f64>,
    theta: Vec<f64>,
    chol_v: Vec<f64>,
    x: Vec<f64>,
    z: Vec<f64>,
}

fn cholesky_lower(m: &SymMatrix) -> Result<Vec<f64>> {
    let p = m.dim();
    let l = nalgebra::Cholesky::new(m.as_matrix().clone())
        .ok_or(Error::NotPositiveDefinite {
            min_eigenvalue: m.eigen()?.min(),
        })?
        .unpack();
    Ok((0..p * p).map(|k| l[(k / p, k % p)]).collect())
}

fn normals<R: Rng + ?Sized>(rng: &mut R, z: &mut [f64]) {
    for zi in z.iter_mut() {
        *zi = rng.sample(StandardNormal);
    }
}

impl Ar1Sampler {
    pub fn new<R: Rng + ?Sized>(params: &Ar1Params, rng: &mut R) -> Result<Self> {
        let p = params.p();
        let truth = Ar1Truth::new(params)?;
        let chol_c = cholesky_lower(&truth.c)?;
        let mut z = vec![0.0; p];
        normals(rng, &mut z);
        let x = (0..p)
            .map(|i| truth.mu[i] + (0..=i).map(|j| chol_c[i * p + j] * z[j]).sum::<f64>())
            .collect();
        Ok(Ar1Sampler {
            p,
            a: (0..p * p).map(|k| params.a[(k / p, k % p)]).collect(),
            theta: params.theta.clone(),
            chol_v: cholesky_lower(&params.v)?,
            x,
            z,
        })
    }
}

impl Sampler for Ar1Sampler {
    fn dim(&self) -> usize {
        self.p
    }

    fn step<R: Rng + ?Sized>(&mut self, rng: &mut R, out: &mut [f64]) {
        let p = self.p;
        normals(rng, &mut self.z);
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.a[i * p..(i + 1) * p];
            let ax: f64 = row.iter().zip(&self.x).map(|(a, x)| a * x).sum();
            let noise: f64 = (0..=i).map(|j| self.chol_v[i * p + j] * self.z[j]).sum();
            *o = self.theta[i] + ax + noise;
        }
        self.x.copy_from_slice(out);
    }
}

pub fn simulate<R: Rng + ?Sized>(params: &Ar1Params, n: usize, rng: &mut R) -> Result<Chain> {
    if n == 0 {
        return Err(Error::InvalidParameter("ar1: n must be at least 1".into()));
    }
    let mut s = Ar1Sampler::new(params, rng)?;
    Ok(super::record(&mut s, n, rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samplers::rng::seeded;
    use approx::assert_relative_eq;

    fn rel_close(a: &SymMatrix, b: &SymMatrix, tol: f64) -> bool {
        a.sub(b).max_abs() <= tol * b.max_abs().max(1.0)
    }

    #[test]
    fn scalar_truth() {
        let t = Ar1Truth::new(&Ar1Params::scalar(0.5, 1.0, 1.0).unwrap()).unwrap();
        assert_eq!(t.mu, vec![2.0]);
        assert_relative_eq!(t.c.get(0, 0), 4.0 / 3.0, max_relative = 1e-15);
        assert_eq!(t.sigma.get(0, 0), 4.0);
        assert_relative_eq!(t.gamma(3)[(0, 0)], 0.125 * 4.0 / 3.0, max_relative = 1e-15);
    }

    #[test]
    fn printed_variant_disagrees_with_scalar_oracle() {
        let params = Ar1Params::scalar(0.5, 1.0, 1.0).unwrap();
        let t = Ar1Truth::with_convention(&params, LagConvention::PrintedEvenPower).unwrap();
        assert_relative_eq!(t.sigma.get(0, 0), 20.0 / 9.0, max_relative = 1e-14);
        assert_relative_eq!(t.gamma(1)[(0, 0)], 0.25 * 4.0 / 3.0, max_relative = 1e-15);
    }

    #[test]
    fn iid_case() {
        let v = SymMatrix::from_rows(&[vec![2.0, 0.3], vec![0.3, 1.0]]).unwrap();
        let p = Ar1Params::new(DMatrix::zeros(2, 2), v.clone(), vec![1.0, -1.0]).unwrap();
        let t = Ar1Truth::new(&p).unwrap();
        assert_eq!(t.mu, vec![1.0, -1.0]);
        assert_eq!(t.c, v);
        assert_eq!(t.sigma, v);
    }

    #[test]
    fn hadamard_fixture_structure() {
        for p in [1, 2, 4, 8, 12] {
            let params = Ar1Params::hadamard_fixture(p).unwrap();
            assert_eq!(params.a(), &params.a().transpose(), "order {p}");
            assert_relative_eq!(params.spectral_radius().unwrap(), 0.5, max_relative = 1e-12);
            let t = Ar1Truth::new(&params).unwrap();
            assert!(t.sigma.is_pd().unwrap());
            assert!(t.partial_sum(0).is_pd().unwrap());
            for (m, mu) in t.mu.iter().enumerate() {
                assert!(mu.is_finite(), "mu[{m}]");
            }
        }
    }

    #[test]
    fn stationarity_fixed_point_and_sigma_forms() {
        for p in [4, 12] {
            let params = Ar1Params::hadamard_fixture(p).unwrap();
            let t = Ar1Truth::new(&params).unwrap();
            let a = params.a();
            let fixed = a * t.c.as_matrix() * a.transpose() + params.v().as_matrix();
            assert!((fixed - t.c.as_matrix()).amax() < 1e-10);
            let id = DMatrix::<f64>::identity(p, p);
            let alt = ((&id - a).try_inverse().unwrap().scale(2.0) - &id) * t.c.as_matrix();
            assert!((alt - t.sigma.as_matrix()).amax() < 1e-10 * t.sigma.max_abs());
            // reversibility makes every lag covariance symmetric
            for lag in 0..4 {
                let g = t.gamma(lag);
                assert!((&g - g.transpose()).amax() < 1e-12);
            }
        }
    }

    #[test]
    fn sigma_is_the_limit_of_partial_sums() {
        let t = Ar1Truth::new(&Ar1Params::hadamard_fixture(4).unwrap()).unwrap();
        assert!(rel_close(&t.partial_sum(40), &t.sigma, 1e-12));
    }

    #[test]
    fn modal_form_matches_dense_matrices() {
        let v = SymMatrix::from_rows(&[vec![2.0, 0.4], vec![0.4, 1.0]]).unwrap();
        let w = SymMatrix::from_rows(&[vec![0.3, 0.1], vec![0.1, -0.2]]).unwrap();
        // A = V^{1/2} W V^{-1/2} makes A V symmetric.
        let spec = v.eigen().unwrap();
        let a = spec.reconstruct_with(f64::sqrt)
            * w.as_matrix()
            * spec.reconstruct_with(|l| 1.0 / l.sqrt());
        let params = Ar1Params::new(a, v, vec![0.5, 0.5]).unwrap();
        for params in [params, Ar1Params::hadamard_fixture(12).unwrap()] {
            let t = Ar1Truth::new(&params).unwrap();
            let m = params.modal().unwrap();
            assert!(rel_close(&m.matrix(Modal::sigma), &t.sigma, 1e-10));
            assert!(rel_close(&m.matrix(|l| Modal::gamma(0, l)), &t.c, 1e-10));
            for i in 0..4 {
                assert!(rel_close(
                    &m.matrix(|l| Modal::pair(i, l)),
                    &t.pair(i),
                    1e-10
                ));
                assert!(rel_close(
                    &m.matrix(|l| Modal::partial(i, l)),
                    &t.partial_sum(i),
                    1e-10
                ));
                let tail = m.matrix(|l| Modal::tail(i, l));
                assert!(rel_close(&t.sigma.sub(&t.partial_sum(i)), &tail, 1e-9));
            }
            let d1 = t.partial_sum(1).logdet_pd().unwrap() - t.partial_sum(0).logdet_pd().unwrap();
            assert_relative_eq!(m.log_det_increment(1), d1, max_relative = 1e-8);
        }
    }

    #[test]
    fn rejects_invalid_parameters() {
        let v = SymMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 2.0]]).unwrap();
        let a = DMatrix::from_row_slice(2, 2, &[0.1, 0.2, 0.2, 0.1]);
        assert!(Ar1Params::new(a, v.clone(), vec![0.0; 2]).is_err());
        assert!(Ar1Params::scalar(1.0, 1.0, 0.0).is_err());
        assert!(Ar1Params::scalar(0.5, -1.0, 0.0).is_err());
        assert!(Ar1Params::new(DMatrix::zeros(3, 3), v, vec![0.0; 2]).is_err());
    }

    #[test]
    fn simulation_is_deterministic() {
        let params = Ar1Params::hadamard_fixture(4).unwrap();
        let a = simulate(&params, 500, &mut seeded(42)).unwrap();
        let b = simulate(&params, 500, &mut seeded(42)).unwrap();
        let c = simulate(&params, 500, &mut seeded(43)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn iid_sample_mean() {
        let params = Ar1Params::scalar(0.0, 1.0, 3.0).unwrap();
        let n = 100_000;
        let c = simulate(&params, n, &mut seeded(5)).unwrap();
        assert!((c.mean()[0] - 3.0).abs() < 4.0 / (n as f64).sqrt());
    }
}
