//! Effective sample size, generalized variance and confidence regions.

pub mod quantile;

use std::fmt;
use std::str::FromStr;

use nalgebra::{Cholesky, DVector, Dyn};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::acov::sym_autocov;
use crate::chain::Chain;
use crate::error::{Error, Result};
use crate::estimators::{Estimator, UvEstimate};
use crate::symmat::SymMatrix;

pub use quantile::{chisq_quantile, normal_quantile, quantile, Quantile};

/// Sample covariance `Λ_n = γ_{n,0}` (divisor `n`).
pub fn sample_cov(chain: &Chain) -> SymMatrix {
    sym_autocov(chain, 0).expect("lag 0 is always in range")
}

/// Multivariate effective sample size `n (|Λ| / |Σ|)^{1/p}`.
pub fn ess(n: usize, lambda: &SymMatrix, sigma: &SymMatrix) -> Result<f64> {
    if lambda.dim() != sigma.dim() {
        return Err(Error::Dimension(format!(
            "ess: lambda is {0}x{0} but sigma is {1}x{1}",
            lambda.dim(),
            sigma.dim()
        )));
    }
    let p = lambda.dim() as f64;
    Ok(ess_from_logdets(
        n,
        lambda.logdet_pd()?,
        sigma.logdet_pd()?,
        p,
    ))
}

pub(crate) fn ess_from_logdets(n: usize, logdet_lambda: f64, logdet_sigma: f64, p: f64) -> f64 {
    n as f64 * ((logdet_lambda - logdet_sigma) / p).exp()
}

/// Smallest component-wise univariate ESS.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinUnivariateEss {
    pub ess: f64,
    /// Coordinate that attains the minimum.
    pub component: usize,
    /// Coordinates whose uIS estimate was degenerate.
    pub excluded: Vec<usize>,
}

/// `min_i n γ_{n,0}(i,i) / σ²_pos,n(i)` over non-degenerate coordinates.
pub fn min_univariate_ess(chain: &Chain) -> Result<MinUnivariateEss> {
    let uis = Estimator::new(chain)?.uis_all()?;
    min_univariate_ess_from(chain.n(), &uis)
}

pub fn min_univariate_ess_from(n: usize, uis: &[UvEstimate]) -> Result<MinUnivariateEss> {
    let mut excluded = Vec::new();
    let mut best: Option<(f64, usize)> = None;
    for (i, u) in uis.iter().enumerate() {
        if u.is_degenerate() || u.sigma2 <= 0.0 {
            excluded.push(i);
            continue;
        }
        let e = n as f64 * u.gamma0 / u.sigma2;
        if best.is_none_or(|(b, _)| e < b) {
            best = Some((e, i));
        }
    }
    let (ess, component) = best.ok_or_else(|| {
        Error::InvalidParameter("every component has a degenerate uIS estimate".into())
    })?;
    Ok(MinUnivariateEss {
        ess,
        component,
        excluded,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegionKind {
    Ellipsoid,
    Cube,
    #[serde(alias = "bonf")]
    Bonferroni,
}

impl RegionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RegionKind::Ellipsoid => "ellipsoid",
            RegionKind::Cube => "cube",
            RegionKind::Bonferroni => "bonferroni",
        }
    }
}

impl fmt::Display for RegionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RegionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ellipsoid" => Ok(RegionKind::Ellipsoid),
            "cube" => Ok(RegionKind::Cube),
            "bonf" | "bonferroni" => Ok(RegionKind::Bonferroni),
            other => Err(Error::InvalidParameter(format!(
                "unknown region kind `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
enum Shape {
    Ellipsoid {
        sigma: SymMatrix,
        chol: Cholesky<f64, Dyn>,
        cutoff: f64,
    },
    Box {
        half_widths: Vec<f64>,
        z: f64,
    },
}

/// A confidence region for `μ` centred at `μ_n`.
#[derive(Debug, Clone)]
pub struct Region {
    kind: RegionKind,
    center: Vec<f64>,
    level: f64,
    n: usize,
    log_volume: f64,
    shape: Shape,
}

impl Region {
    pub fn kind(&self) -> RegionKind {
        self.kind
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn level(&self) -> f64 {
        self.level
    }

    pub fn p(&self) -> usize {
        self.center.len()
    }

    pub fn log_volume(&self) -> f64 {
        self.log_volume
    }

    pub fn volume(&self) -> f64 {
        self.log_volume.exp()
    }

    /// `volume^{1/p}`.
    pub fn volume_root(&self) -> f64 {
        (self.log_volume / self.p() as f64).exp()
    }

    /// Chi-square cutoff of an ellipsoid.
    pub fn cutoff(&self) -> Option<f64> {
        match &self.shape {
            Shape::Ellipsoid { cutoff, .. } => Some(*cutoff),
            Shape::Box { .. } => None,
        }
    }

    /// Normal quantile used for a box.
    pub fn z(&self) -> Option<f64> {
        match &self.shape {
            Shape::Box { z, .. } => Some(*z),
            Shape::Ellipsoid { .. } => None,
        }
    }

    pub fn half_widths(&self) -> Option<&[f64]> {
        match &self.shape {
            Shape::Box { half_widths, .. } => Some(half_widths),
            Shape::Ellipsoid { .. } => None,
        }
    }

    pub fn sigma(&self) -> Option<&SymMatrix> {
        match &self.shape {
            Shape::Ellipsoid { sigma, .. } => Some(sigma),
            Shape::Box { .. } => None,
        }
    }

    /// For an ellipsoid, `n (μ_n - x)ᵀ Σ̂⁻¹ (μ_n - x)`; for a box, the largest
    /// standardized deviation `max_i |x_i - μ_n(i)| / half_width_i`.
    pub fn statistic(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.p() {
            return Err(Error::Dimension(format!(
                "point has {} coordinates, region has {}",
                x.len(),
                self.p()
            )));
        }
        Ok(match &self.shape {
            Shape::Ellipsoid { chol, .. } => {
                let d = DVector::from_iterator(
                    self.p(),
                    self.center.iter().zip(x).map(|(c, xi)| c - xi),
                );
                let y = chol
                    .l()
                    .solve_lower_triangular(&d)
                    .expect("cholesky factor is invertible");
                self.n as f64 * y.norm_squared()
            }
            Shape::Box { half_widths, .. } => self
                .center
                .iter()
                .zip(x)
                .zip(half_widths)
                .map(|((c, xi), h)| (xi - c).abs() / h)
                .fold(0.0, f64::max),
        })
    }

    pub fn contains(&self, x: &[f64]) -> Result<bool> {
        let s = self.statistic(x)?;
        Ok(match &self.shape {
            Shape::Ellipsoid { cutoff, .. } => s <= *cutoff,
            Shape::Box { .. } => s <= 1.0,
        })
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::Probability(alpha))
    }
}

/// `{x : n (μ_n - x)ᵀ Σ̂⁻¹ (μ_n - x) <= χ²_{p,1-α}}`.
pub fn ellipsoid_region(mu_n: &[f64], sigma: &SymMatrix, n: usize, alpha: f64) -> Result<Region> {
    check_alpha(alpha)?;
    let p = mu_n.len();
    if sigma.dim() != p {
        return Err(Error::Dimension(format!(
            "center has {p} coordinates, sigma is {0}x{0}",
            sigma.dim()
        )));
    }
    let logdet = sigma.logdet_pd()?;
    let chol = Cholesky::new(sigma.as_matrix().clone()).ok_or(Error::NotPositiveDefinite {
        min_eigenvalue: sigma.eigen()?.min(),
    })?;
    let cutoff = chisq_quantile(p, 1.0 - alpha)?;
    let pf = p as f64;
    // unit-ball volume π^{p/2} / Γ(p/2 + 1)
    let log_ball = 0.5 * pf * std::f64::consts::PI.ln() - ln_gamma(0.5 * pf + 1.0);
    let log_volume = log_ball + 0.5 * pf * (cutoff / n as f64).ln() + 0.5 * logdet;
    Ok(Region {
        kind: RegionKind::Ellipsoid,
        center: mu_n.to_vec(),
        level: 1.0 - alpha,
        n,
        log_volume,
        shape: Shape::Ellipsoid {
            sigma: sigma.clone(),
            chol,
            cutoff,
        },
    })
}

/// Axis-aligned box `μ_n(i) ± z σ_n(i) / √n` with `z = z_{1-α/2}`, or
/// `z_{1-α/(2p)}` when `bonferroni` is set.
pub fn cube_region(
    mu_n: &[f64],
    sigma_diag: &[f64],
    n: usize,
    alpha: f64,
    bonferroni: bool,
) -> Result<Region> {
    check_alpha(alpha)?;
    let p = mu_n.len();
    if sigma_diag.len() != p {
        return Err(Error::Dimension(format!(
            "center has {p} coordinates, {} standard deviations given",
            sigma_diag.len()
        )));
    }
    if let Some(bad) = sigma_diag.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
        return Err(Error::InvalidParameter(format!(
            "box standard deviations must be positive, got {bad}"
        )));
    }
    let tail = if bonferroni {
        alpha / (2.0 * p as f64)
    } else {
        alpha / 2.0
    };
    let z = normal_quantile(1.0 - tail)?;
    let root_n = (n as f64).sqrt();
    let half_widths: Vec<f64> = sigma_diag.iter().map(|s| z * s / root_n).collect();
    let log_volume = half_widths.iter().map(|h| (2.0 * h).ln()).sum();
    Ok(Region {
        kind: if bonferroni {
            RegionKind::Bonferroni
        } else {
            RegionKind::Cube
        },
        center: mu_n.to_vec(),
        level: 1.0 - alpha,
        n,
        log_volume,
        shape: Shape::Box { half_widths, z },
    })
}
