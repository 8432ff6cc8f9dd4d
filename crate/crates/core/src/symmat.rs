//! Symmetric-matrix kernel: eigendecomposition, positive-definiteness,
//! log-determinants and positive parts.
//!
//! Eigenvalues are always reported in ascending order, so `eigenvalues[0]`
//! is the smallest one.

use nalgebra::DMatrix;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Relative eigenvalue threshold used by [`SymMatrix::is_pd`].
///
/// A matrix is positive definite iff `λ_min > PD_TOLERANCE * max(1, |λ_max|)`.
pub const PD_TOLERANCE: f64 = 1e-12;

const EIGEN_EPS: f64 = f64::EPSILON;
const EIGEN_MAX_ITER: usize = 10_000;

/// A `p × p` real symmetric matrix.
///
/// Every constructor mirrors one triangle onto the other, so `m[(i, j)]`
/// and `m[(j, i)]` are the same bits.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(DMatrix<f64>);

impl SymMatrix {
    /// Take the lower triangle of `m` (diagonal included) and mirror it.
    pub fn from_lower(mut m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::Dimension(format!(
                "expected a non-empty square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let p = m.nrows();
        for j in 0..p {
            for i in j + 1..p {
                m[(j, i)] = m[(i, j)];
            }
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "symmetric matrix has a non-finite entry".into(),
            ));
        }
        Ok(SymMatrix(m))
    }

    /// `(m + mᵀ) / 2`, exactly symmetric.
    pub fn symmetric_part(m: &DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::Dimension(
                "symmetric part of a non-square matrix".into(),
            ));
        }
        let p = m.nrows();
        let sym = DMatrix::from_fn(p, p, |i, j| 0.5 * (m[(i, j)] + m[(j, i)]));
        SymMatrix::from_lower(sym)
    }

    /// Build from `f(i, j)` evaluated on the lower triangle.
    pub fn from_fn(p: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut m = DMatrix::zeros(p, p);
        for j in 0..p {
            for i in j..p {
                m[(i, j)] = f(i, j);
            }
        }
        SymMatrix::from_lower(m)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let p = rows.len();
        if rows.iter().any(|r| r.len() != p) {
            return Err(Error::Dimension("rows do not form a square matrix".into()));
        }
        let m = DMatrix::from_fn(p, p, |i, j| rows[i][j]);
        let sym = SymMatrix::from_lower(m.clone())?;
        if sym.0 != m {
            return Err(Error::InvalidParameter("matrix is not symmetric".into()));
        }
        Ok(sym)
    }

    pub fn zeros(p: usize) -> Self {
        SymMatrix(DMatrix::zeros(p, p))
    }

    pub fn identity(p: usize) -> Self {
        SymMatrix(DMatrix::identity(p, p))
    }

    pub fn from_diagonal(d: &[f64]) -> Result<Self> {
        SymMatrix::from_fn(d.len(), |i, j| if i == j { d[i] } else { 0.0 })
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn diagonal(&self) -> Vec<f64> {
        self.0.diagonal().iter().copied().collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim())
            .map(|i| (0..self.dim()).map(|j| self.0[(i, j)]).collect())
            .collect()
    }

    /// Row-major entries.
    pub fn to_row_major(&self) -> Vec<f64> {
        self.to_rows().into_iter().flatten().collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// `self += k * other`, entrywise (symmetry is preserved exactly).
    pub fn add_scaled(&mut self, other: &SymMatrix, k: f64) {
        self.0.zip_apply(&other.0, |a, b| *a += k * b);
    }

    pub fn scaled(&self, k: f64) -> SymMatrix {
        SymMatrix(&self.0 * k)
    }

    pub fn sub(&self, other: &SymMatrix) -> SymMatrix {
        SymMatrix(&self.0 - &other.0)
    }

    pub fn add(&self, other: &SymMatrix) -> SymMatrix {
        SymMatrix(&self.0 + &other.0)
    }

    /// `B · self · Bᵀ` for a square `B`.
    pub fn congruence(&self, b: &DMatrix<f64>) -> Result<SymMatrix> {
        SymMatrix::from_lower(b * &self.0 * b.transpose())
    }

    pub fn eigen(&self) -> Result<Spectrum> {
        eigen_sym(self)
    }

    pub fn is_pd(&self) -> Result<bool> {
        Ok(self.eigen()?.is_pd())
    }

    pub fn logdet_pd(&self) -> Result<f64> {
        self.eigen()?.logdet_pd()
    }

    pub fn positive_part(&self) -> Result<SymMatrix> {
        positive_part(self)
    }
}

impl Serialize for SymMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_rows().serialize(s)
    }
}

impl<'de> Deserialize<'de> for SymMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        SymMatrix::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

/// Eigenvalues in ascending order paired with orthonormal eigenvector columns.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<f64>,
}

impl Spectrum {
    pub fn min(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max(&self) -> f64 {
        *self.eigenvalues.last().unwrap()
    }

    pub fn is_pd(&self) -> bool {
        self.min() > PD_TOLERANCE * self.max().abs().max(1.0)
    }

    pub fn logdet_pd(&self) -> Result<f64> {
        if !self.is_pd() {
            return Err(Error::NotPositiveDefinite {
                min_eigenvalue: self.min(),
            });
        }
        Ok(self.eigenvalues.iter().map(|l| l.ln()).sum())
    }

    /// Sign and log-magnitude of the determinant, tracked eigenvalue by
    /// eigenvalue so large `p` cannot overflow. A zero eigenvalue yields
    /// sign `0` and `-inf`.
    pub fn signed_logdet(&self) -> (f64, f64) {
        self.eigenvalues.iter().fold((1.0, 0.0), |(sign, acc), &l| {
            (sign * l.signum() * f64::from(l != 0.0), acc + l.abs().ln())
        })
    }

    /// `Q diag(f(λ)) Qᵀ`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let p = self.eigenvalues.len();
        let q = &self.eigenvectors;
        let mut scaled = q.clone();
        for (k, l) in self.eigenvalues.iter().enumerate() {
            let fl = f(*l);
            for i in 0..p {
                scaled[(i, k)] *= fl;
            }
        }
        scaled * q.transpose()
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        self.reconstruct_with(|l| l)
    }
}

/// Symmetric eigendecomposition with ascending eigenvalues.
pub fn eigen_sym(m: &SymMatrix) -> Result<Spectrum> {
    let p = m.dim();
    let eig =
        m.0.clone()
            .try_symmetric_eigen(EIGEN_EPS, EIGEN_MAX_ITER)
            .ok_or_else(|| Error::NoConvergence {
                residual: max_off_diagonal(&m.0),
            })?;
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let eigenvectors = DMatrix::from_fn(p, p, |i, k| eig.eigenvectors[(i, order[k])]);
    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
    })
}

/// `Q diag(max(λ, 0)) Qᵀ`. A positive semi-definite input is returned unchanged.
pub fn positive_part(m: &SymMatrix) -> Result<SymMatrix> {
    let spec = eigen_sym(m)?;
    if spec.min() >= 0.0 {
        return Ok(m.clone());
    }
    SymMatrix::from_lower(spec.reconstruct_with(|l| l.max(0.0)))
}

fn max_off_diagonal(m: &DMatrix<f64>) -> f64 {
    let mut best = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if i != j {
                best = best.max(m[(i, j)].abs());
            }
        }
    }
    best
}
