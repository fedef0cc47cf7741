//! Kelly allocation under Gaussian returns.
//!
//! Single asset: `f = lambda * (mu - r) / sigma^2`. Several assets:
//! `f = lambda * pinv(Sigma) (mu - r 1)`, with the Moore-Penrose
//! pseudoinverse standing in for the inverse when `Sigma` is singular.
//! Drifts are arithmetic; estimates from log returns add back `sigma^2/2`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::mean_var;

/// Relative eigenvalue cutoff for the pseudoinverse.
pub const PINV_RCOND: f64 = 1e-10;

/// Minimum price observations for an estimate.
pub const MIN_OBSERVATIONS: usize = 30;

/// Annualized return statistics of one asset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReturnStats {
    pub mu: f64,
    pub sigma: f64,
    pub r: f64,
    pub se_mu: f64,
    pub n_obs: usize,
}

impl ReturnStats {
    pub fn new(mu: f64, sigma: f64, r: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::domain(format!(
                "sigma must be positive, got {sigma}"
            )));
        }
        Ok(Self {
            mu,
            sigma,
            r,
            se_mu: 0.0,
            n_obs: 0,
        })
    }

    pub fn with_rate(mut self, r: f64) -> Self {
        self.r = r;
        self
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda <= 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "lambda must lie in (0, 1], got {lambda}"
        )))
    }
}

/// Fractional Kelly fraction. Not clamped: values above 1 mean leverage,
/// negative values a short.
pub fn kelly_single(stats: &ReturnStats, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    if !(stats.sigma > 0.0) {
        return Err(Error::domain(format!(
            "sigma must be positive, got {}",
            stats.sigma
        )));
    }
    Ok(lambda * (stats.mu - stats.r) / (stats.sigma * stats.sigma))
}

/// Drift vector, covariance and riskless rate for several assets.
///
/// Serializes with a dimension header and the covariance flattened
/// row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CovStatsRecord", into = "CovStatsRecord")]
pub struct CovStats {
    mu_vec: DVector<f64>,
    cov: DMatrix<f64>,
    r: f64,
}

#[derive(Serialize, Deserialize)]
struct CovStatsRecord {
    dim: usize,
    mu_vec: Vec<f64>,
    cov: Vec<f64>,
    r: f64,
}

impl TryFrom<CovStatsRecord> for CovStats {
    type Error = Error;

    fn try_from(rec: CovStatsRecord) -> Result<Self> {
        if rec.cov.len() != rec.dim * rec.dim {
            return Err(Error::domain(format!(
                "covariance has {} entries for dimension {}",
                rec.cov.len(),
                rec.dim
            )));
        }
        CovStats::new(
            rec.mu_vec,
            DMatrix::from_row_slice(rec.dim, rec.dim, &rec.cov),
            rec.r,
        )
    }
}

impl From<CovStats> for CovStatsRecord {
    fn from(c: CovStats) -> Self {
        let dim = c.dim();
        let cov = (0..dim)
            .flat_map(|i| (0..dim).map(move |j| (i, j)))
            .map(|(i, j)| c.cov[(i, j)])
            .collect();
        CovStatsRecord {
            dim,
            mu_vec: c.mu_vec.iter().copied().collect(),
            cov,
            r: c.r,
        }
    }
}

impl CovStats {
    /// Checks symmetry (to 1e-12 relative) and positive semi-definiteness up
    /// to eigenvalues of `-1e-10 * max eigenvalue`.
    pub fn new(mu_vec: Vec<f64>, cov: DMatrix<f64>, r: f64) -> Result<Self> {
        let m = mu_vec.len();
        if m == 0 || cov.nrows() != m || cov.ncols() != m {
            return Err(Error::domain(format!(
                "drift vector of length {m} needs a {m}x{m} covariance, got {}x{}",
                cov.nrows(),
                cov.ncols()
            )));
        }
        if cov.iter().chain(mu_vec.iter()).any(|v| !v.is_finite()) || !r.is_finite() {
            return Err(Error::domain("non-finite entry in covariance statistics"));
        }
        let scale = cov.amax().max(f64::MIN_POSITIVE);
        for i in 0..m {
            for j in 0..i {
                if (cov[(i, j)] - cov[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::domain(format!(
                        "covariance not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        let eig = SymmetricEigen::new(cov.clone()).eigenvalues;
        let top = eig.max();
        if top < 0.0 || eig.min() < -1e-10 * top.max(0.0) {
            return Err(Error::domain("covariance is not positive semi-definite"));
        }
        Ok(Self {
            mu_vec: DVector::from_vec(mu_vec),
            cov,
            r,
        })
    }

    pub fn dim(&self) -> usize {
        self.mu_vec.len()
    }

    pub fn mu_vec(&self) -> &DVector<f64> {
        &self.mu_vec
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn with_rate(mut self, r: f64) -> Self {
        self.r = r;
        self
    }
}

/// Moore-Penrose pseudoinverse of a symmetric matrix via its
/// eigendecomposition. Eigenvalues below `PINV_RCOND * max eigenvalue`
/// (including negative fp noise) are treated as zero.
pub fn pinv_symmetric(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let eig = SymmetricEigen::new(a.clone());
    let top = eig.eigenvalues.max();
    let cutoff = PINV_RCOND * top.max(0.0);
    let mut out = DMatrix::zeros(n, n);
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda > cutoff && lambda > 0.0 {
            let v = eig.eigenvectors.column(k);
            out += (v * v.transpose()) / lambda;
        }
    }
    // remove asymmetric rounding
    (&out + out.transpose()) * 0.5
}

pub fn kelly_multi(stats: &CovStats, lambda: f64) -> Result<Vec<f64>> {
    check_lambda(lambda)?;
    let excess = stats.mu_vec.map(|mu| mu - stats.r);
    let f = pinv_symmetric(&stats.cov) * excess * lambda;
    Ok(f.iter().copied().collect())
}

/// Strictly increasing timestamps (UTC seconds) with positive prices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceSeries {
    timestamps: Vec<i64>,
    prices: Vec<f64>,
}

impl PriceSeries {
    pub fn new(timestamps: Vec<i64>, prices: Vec<f64>) -> Result<Self> {
        if timestamps.len() != prices.len() {
            return Err(Error::domain(format!(
                "{} timestamps for {} prices",
                timestamps.len(),
                prices.len()
            )));
        }
        if prices.len() < 2 {
            return Err(Error::insufficient(
                "a price series needs at least 2 points",
            ));
        }
        if let Some(w) = timestamps.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::domain(format!(
                "timestamps not strictly increasing at index {}",
                w + 1
            )));
        }
        if let Some(p) = prices.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
            return Err(Error::domain(format!("prices must be positive, got {p}")));
        }
        Ok(Self { timestamps, prices })
    }

    pub fn timestamps(&self) -> &[i64] {
        &self.timestamps
    }

    pub fn prices(&self) -> &[f64] {
        &self.prices
    }

    pub fn len(&self) -> usize {
        self.prices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prices.is_empty()
    }

    pub fn log_returns(&self) -> Vec<f64> {
        log_returns(&self.prices)
    }
}

pub(crate) fn log_returns(prices: &[f64]) -> Vec<f64> {
    prices.windows(2).map(|w| (w[1] / w[0]).ln()).collect()
}

/// Annualized statistics from per-period log returns, `r = 0`.
///
/// Errors with `Domain` when the returns have no variance.
pub fn stats_from_log_returns(returns: &[f64], periods_per_year: f64) -> Result<ReturnStats> {
    if !(periods_per_year > 0.0) {
        return Err(Error::domain("periods_per_year must be positive"));
    }
    if returns.len() < 2 {
        return Err(Error::insufficient("need at least 2 returns"));
    }
    let (mean, var) = mean_var(returns);
    let sd = var.sqrt();
    if !(sd > 1e-9 * mean.abs()) {
        return Err(Error::domain(
            "returns have zero variance, the Kelly fraction is undefined",
        ));
    }
    let sigma = sd * periods_per_year.sqrt();
    let years = returns.len() as f64 / periods_per_year;
    Ok(ReturnStats {
        mu: mean * periods_per_year + 0.5 * sigma * sigma,
        sigma,
        r: 0.0,
        se_mu: drift_standard_error(sigma, years),
        n_obs: returns.len() + 1,
    })
}

/// Standard error of a drift estimated over `years`: `sigma / sqrt(years)`.
pub fn drift_standard_error(sigma: f64, years: f64) -> f64 {
    sigma / years.sqrt()
}

pub fn estimate_stats(series: &PriceSeries, periods_per_year: f64) -> Result<ReturnStats> {
    if series.len() < MIN_OBSERVATIONS {
        return Err(Error::insufficient(format!(
            "{} observations, need at least {MIN_OBSERVATIONS}",
            series.len()
        )));
    }
    stats_from_log_returns(&series.log_returns(), periods_per_year)
}

/// Annualized covariance of log returns over the timestamps common to all
/// series (exact-match inner join, no interpolation).
pub fn estimate_cov(series_list: &[PriceSeries], periods_per_year: f64) -> Result<CovStats> {
    if series_list.is_empty() {
        return Err(Error::insufficient("no series given"));
    }
    if !(periods_per_year > 0.0) {
        return Err(Error::domain("periods_per_year must be positive"));
    }
    if let Some(s) = series_list.iter().find(|s| s.len() < MIN_OBSERVATIONS) {
        return Err(Error::insufficient(format!(
            "a series has {} observations, need at least {MIN_OBSERVATIONS}",
            s.len()
        )));
    }
    let mut common: Vec<i64> = series_list[0].timestamps.clone();
    for s in &series_list[1..] {
        common.retain(|t| s.timestamps.binary_search(t).is_ok());
    }
    if common.len() < MIN_OBSERVATIONS {
        return Err(Error::Alignment(format!(
            "{} common timestamps, need at least {MIN_OBSERVATIONS}",
            common.len()
        )));
    }
    let returns: Vec<Vec<f64>> = series_list
        .iter()
        .map(|s| {
            let aligned: Vec<f64> = common
                .iter()
                .map(|t| s.prices[s.timestamps.binary_search(t).unwrap()])
                .collect();
            log_returns(&aligned)
        })
        .collect();
    let m = returns.len();
    let n = returns[0].len() as f64;
    let means: Vec<f64> = returns.iter().map(|r| r.iter().sum::<f64>() / n).collect();
    let mut cov = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..=i {
            let c: f64 = returns[i]
                .iter()
                .zip(&returns[j])
                .map(|(a, b)| (a - means[i]) * (b - means[j]))
                .sum::<f64>()
                / (n - 1.0)
                * periods_per_year;
            cov[(i, j)] = c;
            cov[(j, i)] = c;
        }
    }
    let mu_vec = (0..m)
        .map(|i| means[i] * periods_per_year + 0.5 * cov[(i, i)])
        .collect();
    CovStats::new(mu_vec, cov, 0.0)
}

/// Years of observation needed before the drift's standard error falls to
/// `target_se`: `(sigma / target_se)^2`.
pub fn drift_confidence_horizon(sigma: f64, target_se: f64) -> Result<f64> {
    if !(sigma > 0.0 && target_se > 0.0) {
        return Err(Error::domain("sigma and target_se must be positive"));
    }
    // squaring the ratio keeps round inputs exact, e.g. (0.2, 0.02) -> 100
    let ratio = sigma / target_se;
    Ok(ratio * ratio)
}

/// Years to grow by `total_factor` when value multiplies by
/// `per_period_multiple` every `period_years`.
pub fn growth_horizon(
    total_factor: f64,
    per_period_multiple: f64,
    period_years: f64,
) -> Result<f64> {
    if !(total_factor > 1.0 && per_period_multiple > 1.0 && period_years > 0.0) {
        return Err(Error::domain(
            "growth_horizon needs total_factor > 1, per_period_multiple > 1, period_years > 0",
        ));
    }
    Ok(period_years * total_factor.ln() / per_period_multiple.ln())
}
