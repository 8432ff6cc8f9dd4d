//! Estimators of the asymptotic covariance `Σ` of `√n (μ_n - μ)`.
//!
//! * **uIS**, the univariate initial positive sequence: add lag pairs while
//!   `Γ_{n,i} > 0`.
//! * **mK**: add lag pairs while the smallest eigenvalue of `Γ_{n,i}` is
//!   positive.
//! * **mIS**: find the first positive definite partial sum `Σ_{n,s_n}`,
//!   then keep adding pairs while `|Σ_{n,i}|` strictly increases; stop at the
//!   first local maximum `t_n`.
//! * **mISadj**: same `s_n`, `t_n` as mIS, but each pair after `s_n` is
//!   replaced by its positive part before it is added.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::acov::LagPairSequence;
use crate::chain::Chain;
use crate::error::{Error, Result};
use crate::symmat::SymMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Uis,
    Mk,
    Mis,
    Misadj,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Uis, Method::Mk, Method::Mis, Method::Misadj];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Uis => "uis",
            Method::Mk => "mk",
            Method::Mis => "mis",
            Method::Misadj => "misadj",
        }
    }

    pub fn is_multivariate(self) -> bool {
        self != Method::Uis
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown method `{s}`")))
    }
}

/// First lag pair whose positivity mK checks.
///
/// The published rule reads `i ∈ {1, …, m}`; the default also requires
/// `Γ_{n,0}` to be positive definite.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MkStart {
    #[default]
    Zero,
    One,
}

/// A multivariate estimate of `Σ`.
#[derive(Debug, Clone, PartialEq)]
pub struct MvEstimate {
    pub method: Method,
    pub sigma: SymMatrix,
    /// First index with a positive definite partial sum (mIS / mISadj only).
    pub s_n: Option<usize>,
    /// Truncation index; `None` flags a degenerate mK result where
    /// `Γ_{n,0}` is not positive definite and `sigma = γ_{n,0}`.
    pub t_n: Option<usize>,
    pub pd: bool,
    /// `ln |sigma|`, present when `sigma` is positive definite.
    pub logdet: Option<f64>,
    pub n: usize,
}

impl MvEstimate {
    pub fn p(&self) -> usize {
        self.sigma.dim()
    }

    pub fn is_degenerate(&self) -> bool {
        self.t_n.is_none()
    }

    /// `t_n` with `-1` standing in for a degenerate result.
    pub fn t_n_signed(&self) -> i64 {
        self.t_n.map_or(-1, |t| t as i64)
    }

    fn new(
        method: Method,
        sigma: SymMatrix,
        s_n: Option<usize>,
        t_n: Option<usize>,
        n: usize,
    ) -> Result<Self> {
        let spec = sigma.eigen()?;
        let pd = spec.is_pd();
        let logdet = pd.then(|| spec.logdet_pd()).transpose()?;
        Ok(MvEstimate {
            method,
            sigma,
            s_n,
            t_n,
            pd,
            logdet,
            n,
        })
    }
}

/// A univariate uIS estimate `σ²_pos,n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UvEstimate {
    pub sigma2: f64,
    /// `None` when `Γ_{n,0} <= 0`; `sigma2` then falls back to `γ_{n,0}`.
    pub t_n: Option<usize>,
    /// `γ_{n,0}` of the series.
    pub gamma0: f64,
}

impl UvEstimate {
    pub fn is_degenerate(&self) -> bool {
        self.t_n.is_none()
    }
}

/// Truncation indices shared by mIS and mISadj.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Truncation {
    pub s_n: usize,
    pub t_n: usize,
}

/// Runs several estimators against one chain, sharing the lag-pair cache.
#[derive(Debug, Clone)]
pub struct Estimator {
    seq: LagPairSequence,
    truncation: Option<Truncation>,
}

impl Estimator {
    pub fn new(chain: &Chain) -> Result<Self> {
        if chain.n() < 2 {
            return Err(Error::Dimension(format!(
                "estimators need n >= 2, got n = {}",
                chain.n()
            )));
        }
        Ok(Estimator {
            seq: LagPairSequence::new(chain),
            truncation: None,
        })
    }

    pub fn sequence(&mut self) -> &mut LagPairSequence {
        &mut self.seq
    }

    fn max_index(&self) -> usize {
        self.seq
            .max_index()
            .expect("n >= 2 checked at construction")
    }

    /// The mIS truncation search.
    pub fn truncation(&mut self) -> Result<Truncation> {
        if let Some(t) = self.truncation {
            return Ok(t);
        }
        let max = self.max_index();
        let no_pd = Error::NoPositiveDefinitePartialSum { max_index: max };
        // If γ_{n,0} v = 0 then every γ_{n,t} annihilates v, so no partial
        // sum can be positive definite either.
        if !self.seq.gamma0().is_pd()? {
            return Err(no_pd);
        }
        let mut first_pd = None;
        for m in 0..=max {
            let spec = self.seq.partial_sum(m)?.eigen()?;
            if spec.is_pd() {
                first_pd = Some((m, spec.logdet_pd()?));
                break;
            }
        }
        let (s_n, mut best) = first_pd.ok_or(no_pd)?;
        let mut t_n = s_n;
        for i in s_n + 1..=max {
            let (sign, ln_abs) = self.seq.partial_sum(i)?.eigen()?.signed_logdet();
            if sign > 0.0 && ln_abs > best {
                best = ln_abs;
                t_n = i;
            } else {
                break;
            }
        }
        let t = Truncation { s_n, t_n };
        self.truncation = Some(t);
        Ok(t)
    }

    pub fn mis(&mut self) -> Result<MvEstimate> {
        let Truncation { s_n, t_n } = self.truncation()?;
        let sigma = self.seq.partial_sum(t_n)?.clone();
        MvEstimate::new(Method::Mis, sigma, Some(s_n), Some(t_n), self.seq.n())
    }

    pub fn misadj(&mut self) -> Result<MvEstimate> {
        let Truncation { s_n, t_n } = self.truncation()?;
        let mut sigma = self.seq.partial_sum(s_n)?.clone();
        for i in s_n + 1..=t_n {
            let plus = self.seq.pair(i)?.positive_part()?;
            sigma.add_scaled(&plus, 2.0);
        }
        MvEstimate::new(Method::Misadj, sigma, Some(s_n), Some(t_n), self.seq.n())
    }

    pub fn mk(&mut self, start: MkStart) -> Result<MvEstimate> {
        let max = self.max_index();
        let n = self.seq.n();
        let first = match start {
            MkStart::Zero => {
                if self.seq.xi(0)? <= 0.0 {
                    let g0 = self.seq.gamma0().clone();
                    return MvEstimate::new(Method::Mk, g0, None, None, n);
                }
                1
            }
            MkStart::One => 1,
        };
        let mut t_n = 0;
        for i in first..=max {
            if self.seq.xi(i)? > 0.0 {
                t_n = i;
            } else {
                break;
            }
        }
        let sigma = self.seq.partial_sum(t_n)?.clone();
        MvEstimate::new(Method::Mk, sigma, None, Some(t_n), n)
    }

    /// uIS on coordinate `j`, read off the diagonal of the shared lag pairs.
    pub fn uis(&mut self, j: usize) -> Result<UvEstimate> {
        if j >= self.seq.p() {
            return Err(Error::OutOfRange {
                index: j,
                max: self.seq.p() - 1,
            });
        }
        let max = self.max_index();
        let gamma0 = self.seq.gamma0().get(j, j);
        let mut t_n = None;
        // Same accumulation order as `partial_sum`, so a univariate chain
        // gives the mK value bit for bit.
        let mut sum = -gamma0;
        for i in 0..=max {
            let g = self.seq.pair(i)?.get(j, j);
            if g > 0.0 {
                sum += 2.0 * g;
                t_n = Some(i);
            } else {
                break;
            }
        }
        let sigma2 = match t_n {
            Some(_) => sum,
            None => gamma0,
        };
        Ok(UvEstimate {
            sigma2,
            t_n,
            gamma0,
        })
    }

    pub fn uis_all(&mut self) -> Result<Vec<UvEstimate>> {
        (0..self.seq.p()).map(|j| self.uis(j)).collect()
    }
}

/// Geyer's initial positive sequence estimator for a `p = 1` chain.
pub fn uis(series: &Chain) -> Result<UvEstimate> {
    if series.p() != 1 {
        return Err(Error::Dimension(format!(
            "uIS needs a univariate series, got p = {}",
            series.p()
        )));
    }
    Estimator::new(series)?.uis(0)
}

/// uIS applied to every coordinate.
pub fn uis_components(chain: &Chain) -> Result<Vec<UvEstimate>> {
    Estimator::new(chain)?.uis_all()
}

pub fn mis(chain: &Chain) -> Result<MvEstimate> {
    Estimator::new(chain)?.mis()
}

pub fn misadj(chain: &Chain) -> Result<MvEstimate> {
    Estimator::new(chain)?.misadj()
}

pub fn mk(chain: &Chain) -> Result<MvEstimate> {
    mk_with(chain, MkStart::Zero)
}

pub fn mk_with(chain: &Chain, start: MkStart) -> Result<MvEstimate> {
    Estimator::new(chain)?.mk(start)
}
