//! Inverse CDFs for the standard normal and chi-square distributions.

use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::erf::erfc;
use statrs::function::gamma::{gamma_lr, gamma_ur, ln_gamma};

use crate::error::{Error, Result};

/// Distribution whose quantile is requested.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Quantile {
    StdNormal,
    /// Chi-square with the given degrees of freedom.
    ChiSquare(usize),
}

pub fn quantile(kind: Quantile, prob: f64) -> Result<f64> {
    match kind {
        Quantile::StdNormal => normal_quantile(prob),
        Quantile::ChiSquare(df) => chisq_quantile(df, prob),
    }
}

fn check_prob(prob: f64) -> Result<()> {
    if prob > 0.0 && prob < 1.0 {
        Ok(())
    } else {
        Err(Error::Probability(prob))
    }
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

pub fn normal_quantile(prob: f64) -> Result<f64> {
    check_prob(prob)?;
    Ok(Normal::standard().inverse_cdf(prob))
}

fn chisq_log_pdf(df: f64, x: f64) -> f64 {
    let k = 0.5 * df;
    (k - 1.0) * x.ln() - 0.5 * x - k * std::f64::consts::LN_2 - ln_gamma(k)
}

/// Chi-square quantile by safeguarded Newton iteration on the regularized
/// incomplete gamma function. statrs' own inverse stops around 1e-9
/// relative error in the lower tail.
pub fn chisq_quantile(df: usize, prob: f64) -> Result<f64> {
    check_prob(prob)?;
    if df == 0 {
        return Err(Error::InvalidParameter("chi-square needs df >= 1".into()));
    }
    let k = df as f64;
    let upper_tail = prob > 0.5;
    // Residual of the tail we solve on; increasing in x.
    let residual = |x: f64| {
        if upper_tail {
            (1.0 - prob) - gamma_ur(0.5 * k, 0.5 * x)
        } else {
            gamma_lr(0.5 * k, 0.5 * x) - prob
        }
    };

    // Wilson–Hilferty starting point.
    let z = normal_quantile(prob)?;
    let h = 2.0 / (9.0 * k);
    let mut x = (k * (1.0 - h + z * h.sqrt()).powi(3)).max(1e-3);

    let (mut lo, mut hi) = (0.0f64, f64::INFINITY);
    for _ in 0..200 {
        let r = residual(x);
        if r == 0.0 {
            return Ok(x);
        }
        if r > 0.0 {
            hi = hi.min(x);
        } else {
            lo = lo.max(x);
        }
        let step = r / chisq_log_pdf(k, x).exp();
        let mut next = x - step;
        if !next.is_finite() || next <= lo || next >= hi {
            next = if hi.is_finite() {
                0.5 * (lo + hi)
            } else {
                2.0 * x.max(1.0)
            };
        }
        if (next - x).abs() <= 1e-14 * x.max(1.0) {
            return Ok(next);
        }
        x = next;
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Maclaurin series for erf; accurate to ~1e-14 for |x| <= 4.
    fn erf_series(x: f64) -> f64 {
        let mut term = x;
        let mut sum = x;
        let x2 = x * x;
        for k in 1..200 {
            term *= -x2 / k as f64;
            let add = term / (2 * k + 1) as f64;
            sum += add;
            if add.abs() < 1e-18 {
                break;
            }
        }
        sum * 2.0 / std::f64::consts::PI.sqrt()
    }

    fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    fn oracle_normal(prob: f64) -> f64 {
        bisect(-4.0, 4.0, |x| {
            0.5 * (1.0 + erf_series(x / 2f64.sqrt())) - prob
        })
    }

    /// Chi-square CDF by composite Simpson quadrature of the density in
    /// `u = sqrt(x)`, which removes the singularity at zero for df = 1.
    fn oracle_chisq_cdf(df: usize, x: f64) -> f64 {
        let k = df as f64 / 2.0;
        let ln_norm = -k * std::f64::consts::LN_2 - ln_gamma(k);
        // density of u = sqrt(x): 2u f(u²)
        let g = |u: f64| {
            if u == 0.0 {
                return if df == 1 { 2.0 * ln_norm.exp() } else { 0.0 };
            }
            2.0 * u * ((k - 1.0) * (u * u).ln() - 0.5 * u * u + ln_norm).exp()
        };
        let b = x.sqrt();
        let m = 20_000;
        let h = b / m as f64;
        let mut s = g(0.0) + g(b);
        for i in 1..m {
            s += g(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    #[test]
    fn closed_form_two_df() {
        let q = chisq_quantile(2, 0.9).unwrap();
        assert!((q - 4.605_170_185_988_091).abs() < 1e-10);
        assert!((q + 2.0 * 0.1f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn normal_975_against_series_oracle() {
        let oracle = oracle_normal(0.975);
        assert!((oracle - 1.959_964).abs() < 1e-6);
        assert!((normal_quantile(0.975).unwrap() - oracle).abs() < 1e-10);
    }

    #[test]
    fn chisq_one_df_is_squared_normal() {
        let z = oracle_normal(0.95);
        let q = chisq_quantile(1, 0.9).unwrap();
        assert!((q - z * z).abs() < 1e-9);
        assert!((q - 2.705_543_5).abs() < 1e-6);
    }

    #[test]
    fn normal_grid_against_oracle() {
        for &p in &[0.001, 0.01, 0.02425, 0.1, 0.3, 0.5, 0.7, 0.95, 0.99, 0.999] {
            let q = normal_quantile(p).unwrap();
            let o = oracle_normal(p);
            assert!((q - o).abs() < 1e-8, "p = {p}: {q} vs {o}");
        }
        assert_eq!(normal_quantile(0.5).unwrap(), 0.0);
    }

    #[test]
    fn normal_far_tails() {
        // The series oracle cancels badly out here; reference values were
        // computed as sqrt(2) erfinv(2p - 1) at 40 significant digits.
        let cases = [
            (1e-6, -4.753_424_308_822_899),
            (0.999_99, 4.264_890_793_922_825),
        ];
        for (p, z) in cases {
            // one ulp of 0.99999 already moves z by about 2.5e-12
            assert!((normal_quantile(p).unwrap() - z).abs() < 1e-11, "p = {p}");
        }
        // Lower chi-square tail, same 40-digit reference.
        assert!((chisq_quantile(12, 1e-6).unwrap() - 0.626_062_957_294_630_8).abs() < 1e-13);
    }

    #[test]
    fn chisq_grid_against_quadrature() {
        for &df in &[1usize, 2, 3, 5, 12, 65] {
            for &p in &[0.05, 0.5, 0.9, 0.975, 0.999] {
                let q = chisq_quantile(df, p).unwrap();
                let cdf = oracle_chisq_cdf(df, q);
                assert!((cdf - p).abs() < 1e-9, "df {df}, p {p}: cdf(q) = {cdf}");
            }
        }
    }

    #[test]
    fn rejects_bad_probabilities() {
        for &p in &[0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(matches!(normal_quantile(p), Err(Error::Probability(_))));
            assert!(matches!(chisq_quantile(3, p), Err(Error::Probability(_))));
        }
        assert!(chisq_quantile(0, 0.5).is_err());
        assert_eq!(
            quantile(Quantile::ChiSquare(2), 0.9).unwrap(),
            chisq_quantile(2, 0.9).unwrap()
        );
    }
}
