//! Power-law scaling of rank-size data, `C_n ~ K n^(-alpha)`.
//!
//! The rank exponent `alpha_rank` and the Pareto tail exponent `alpha_tail`
//! of the same data are tied by `alpha_tail = 1 + 1/alpha_rank`. Fitting goes
//! through the tail: a continuous maximum-likelihood estimate above a cutoff
//! `xmin`, with `xmin` chosen by minimising the Kolmogorov-Smirnov distance.
//! A log-log least-squares fit is kept alongside as a cross-check.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{ols, NeumaierSum};

/// Smallest tail accepted by the automatic cutoff search.
pub const MIN_TAIL: usize = 10;

/// Default number of bootstrap resamples for per-period error bars.
pub const DEFAULT_RESAMPLES: usize = 200;

/// Default seed for the bootstrap.
pub const DEFAULT_BOOTSTRAP_SEED: u64 = 0x5ca1_ab1e;

/// Positive magnitudes ranked largest first. Rank `n` is the 1-based index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankSizeSample {
    values: Vec<f64>,
    labels: Option<Vec<String>>,
    as_of: Option<i64>,
}

impl RankSizeSample {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        Self::build(values, None)
    }

    /// Values and labels are sorted together, largest value first.
    pub fn with_labels(values: Vec<f64>, labels: Vec<String>) -> Result<Self> {
        if labels.len() != values.len() {
            return Err(Error::domain(format!(
                "{} labels for {} values",
                labels.len(),
                values.len()
            )));
        }
        Self::build(values, Some(labels))
    }

    fn build(values: Vec<f64>, labels: Option<Vec<String>>) -> Result<Self> {
        if let Some(bad) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::domain(format!(
                "rank-size values must be finite and positive, got {bad}"
            )));
        }
        let mut order: Vec<usize> = (0..values.len()).collect();
        // stable: equal values keep input order
        order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
        let sorted = order.iter().map(|&i| values[i]).collect();
        let labels = labels.map(|l| order.iter().map(|&i| l[i].clone()).collect());
        Ok(Self {
            values: sorted,
            labels,
            as_of: None,
        })
    }

    pub fn with_as_of(mut self, as_of: i64) -> Self {
        self.as_of = Some(as_of);
        self
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn as_of(&self) -> Option<i64> {
        self.as_of
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Result of a rank-size fit. Serializes as a flat record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub alpha_rank: f64,
    pub k_scale: f64,
    pub alpha_tail: f64,
    pub xmin: f64,
    pub n_tail: usize,
    pub ks_stat: f64,
    pub stderr_tail: f64,
}

/// Converts a tail exponent (> 1) to the rank exponent.
pub fn rank_from_tail(alpha_tail: f64) -> f64 {
    1.0 / (alpha_tail - 1.0)
}

/// Converts a rank exponent (> 0) to the tail exponent.
pub fn tail_from_rank(alpha_rank: f64) -> f64 {
    1.0 + 1.0 / alpha_rank
}

/// Continuous maximum-likelihood tail estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailEstimate {
    pub alpha_tail: f64,
    pub stderr: f64,
    pub n_tail: usize,
}

fn check_positive(values: &[f64]) -> Result<()> {
    match values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        Some(v) => Err(Error::domain(format!("values must be positive, got {v}"))),
        None => Ok(()),
    }
}

fn check_xmin(xmin: f64) -> Result<()> {
    if xmin.is_finite() && xmin > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("xmin must be positive, got {xmin}")))
    }
}

/// `alpha = 1 + n / sum(ln(x_i / xmin))` over `x_i >= xmin`, with standard
/// error `(alpha - 1) / sqrt(n)`.
pub fn fit_tail_mle(values: &[f64], xmin: f64) -> Result<TailEstimate> {
    check_positive(values)?;
    check_xmin(xmin)?;
    let mut n = 0usize;
    let mut log_sum = NeumaierSum::default();
    for &x in values.iter().filter(|&&x| x >= xmin) {
        n += 1;
        log_sum.add((x / xmin).ln());
    }
    if n < 2 {
        return Err(Error::insufficient(format!(
            "{n} values at or above xmin = {xmin}, need at least 2"
        )));
    }
    let log_sum = log_sum.value();
    if log_sum <= 0.0 {
        return Err(Error::domain(
            "all tail values equal xmin, the exponent estimate diverges",
        ));
    }
    let alpha_tail = 1.0 + n as f64 / log_sum;
    Ok(TailEstimate {
        alpha_tail,
        stderr: (alpha_tail - 1.0) / (n as f64).sqrt(),
        n_tail: n,
    })
}

/// KS distance of the tail `x >= xmin` against the Pareto CDF
/// `1 - (x/xmin)^(1 - alpha_tail)`.
///
/// The empirical CDF uses the mid-step value `(i - 0.5)/n` at the i-th
/// smallest tail point, so a lone point at `xmin` scores 0.5.
pub fn ks_distance(values: &[f64], alpha_tail: f64, xmin: f64) -> Result<f64> {
    check_positive(values)?;
    check_xmin(xmin)?;
    if !(alpha_tail > 1.0) {
        return Err(Error::domain(format!(
            "alpha_tail must exceed 1, got {alpha_tail}"
        )));
    }
    let mut tail: Vec<f64> = values.iter().copied().filter(|&x| x >= xmin).collect();
    if tail.is_empty() {
        return Err(Error::insufficient(format!("no values at or above {xmin}")));
    }
    tail.sort_by(f64::total_cmp);
    Ok(ks_sorted(&tail, alpha_tail, xmin))
}

fn ks_sorted(tail: &[f64], alpha_tail: f64, xmin: f64) -> f64 {
    let n = tail.len() as f64;
    let expo = 1.0 - alpha_tail;
    tail.iter()
        .enumerate()
        .map(|(i, &x)| {
            let empirical = (i as f64 + 0.5) / n;
            let model = 1.0 - (x / xmin).powf(expo);
            (empirical - model).abs()
        })
        .fold(0.0, f64::max)
}

/// Chooses `xmin` among the distinct values by minimising the KS distance of
/// the implied fit. Candidates must leave at least [`MIN_TAIL`] points in the
/// tail; ties go to the smaller cutoff.
pub fn select_xmin(values: &[f64]) -> Result<(f64, TailEstimate, f64)> {
    check_positive(values)?;
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);

    let n = sorted.len();
    let mut distinct = 0usize;
    for (i, x) in sorted.iter().enumerate() {
        if i == 0 || *x != sorted[i - 1] {
            distinct += 1;
        }
    }
    if distinct < MIN_TAIL {
        return Err(Error::insufficient(format!(
            "{distinct} distinct values, need at least {MIN_TAIL}"
        )));
    }

    // suffix sums of ln x so each candidate's MLE is O(1)
    let logs: Vec<f64> = sorted.iter().map(|x| x.ln()).collect();
    let mut suffix = vec![0.0; n + 1];
    let mut acc = NeumaierSum::default();
    for i in (0..n).rev() {
        acc.add(logs[i]);
        suffix[i] = acc.value();
    }

    let mut best: Option<(f64, TailEstimate, f64)> = None;
    let mut start = 0usize;
    while start + MIN_TAIL <= n {
        let xmin = sorted[start];
        let n_tail = n - start;
        let log_sum = suffix[start] - n_tail as f64 * logs[start];
        if log_sum > 0.0 {
            let alpha_tail = 1.0 + n_tail as f64 / log_sum;
            let ks = ks_sorted(&sorted[start..], alpha_tail, xmin);
            if best.as_ref().is_none_or(|b| ks < b.2) {
                let est = TailEstimate {
                    alpha_tail,
                    stderr: (alpha_tail - 1.0) / (n_tail as f64).sqrt(),
                    n_tail,
                };
                best = Some((xmin, est, ks));
            }
        }
        // next distinct value
        let mut next = start + 1;
        while next < n && sorted[next] == xmin {
            next += 1;
        }
        start = next;
    }
    best.ok_or_else(|| Error::insufficient("no admissible xmin candidate"))
}

fn assemble(sample: &RankSizeSample, xmin: f64, est: TailEstimate, ks: f64) -> PowerLawFit {
    PowerLawFit {
        alpha_rank: rank_from_tail(est.alpha_tail),
        k_scale: sample.values()[0],
        alpha_tail: est.alpha_tail,
        xmin,
        n_tail: est.n_tail,
        ks_stat: ks,
        stderr_tail: est.stderr,
    }
}

/// Rank-size fit with an automatically selected cutoff.
pub fn fit_rank_size(sample: &RankSizeSample) -> Result<PowerLawFit> {
    if sample.len() < MIN_TAIL {
        return Err(Error::insufficient(format!(
            "{} entries, need at least {MIN_TAIL}",
            sample.len()
        )));
    }
    let (xmin, est, ks) = select_xmin(sample.values())?;
    Ok(assemble(sample, xmin, est, ks))
}

/// Rank-size fit with a caller-supplied cutoff.
pub fn fit_rank_size_with_xmin(sample: &RankSizeSample, xmin: f64) -> Result<PowerLawFit> {
    let est = fit_tail_mle(sample.values(), xmin)?;
    let ks = ks_distance(sample.values(), est.alpha_tail, xmin)?;
    Ok(assemble(sample, xmin, est, ks))
}

/// Log-log least-squares fit of `ln C_n` on `ln n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeastSquaresFit {
    pub alpha_rank: f64,
    pub k_scale: f64,
    /// Reported as 1 when the sample is constant; see `zero_variance`.
    pub r_squared: f64,
    pub zero_variance: bool,
}

pub fn fit_rank_size_ls(sample: &RankSizeSample) -> Result<LeastSquaresFit> {
    if sample.len() < 3 {
        return Err(Error::insufficient(format!(
            "{} entries, need at least 3",
            sample.len()
        )));
    }
    let ln_rank: Vec<f64> = (1..=sample.len()).map(|n| (n as f64).ln()).collect();
    let ln_value: Vec<f64> = sample.values().iter().map(|v| v.ln()).collect();
    let line = ols(&ln_rank, &ln_value);
    Ok(LeastSquaresFit {
        alpha_rank: -line.slope,
        k_scale: line.intercept.exp(),
        r_squared: line.r_squared.unwrap_or(1.0),
        zero_variance: line.r_squared.is_none(),
    })
}

/// Backs out the dimension `D` from `alpha_rank = (D + 1)/D`.
pub fn dimension_from_exponent(alpha_rank: f64) -> Result<f64> {
    if alpha_rank.is_finite() && alpha_rank > 1.0 {
        Ok(1.0 / (alpha_rank - 1.0))
    } else {
        Err(Error::domain(format!(
            "alpha_rank = {alpha_rank} <= 1 has no finite dimension"
        )))
    }
}

/// Partial sum of `k n^(-alpha)` for `n = 1..=n_terms`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartialSum {
    pub partial: f64,
    pub converges: bool,
    /// Integral bound on the remainder, present only when the series converges.
    pub tail_bound: Option<f64>,
}

pub fn total_cap_partial_sums(fit: &PowerLawFit, n_terms: u64) -> PartialSum {
    rank_size_partial_sum(fit.k_scale, fit.alpha_rank, n_terms)
}

/// Same as [`total_cap_partial_sums`] for a bare `(k, alpha)` pair.
pub fn rank_size_partial_sum(k_scale: f64, alpha_rank: f64, n_terms: u64) -> PartialSum {
    let mut sum = NeumaierSum::default();
    for n in 1..=n_terms {
        sum.add(k_scale * (n as f64).powf(-alpha_rank));
    }
    let converges = alpha_rank > 1.0;
    let tail_bound = converges
        .then(|| k_scale * (n_terms.max(1) as f64).powf(1.0 - alpha_rank) / (alpha_rank - 1.0));
    PartialSum {
        partial: sum.value(),
        converges,
        tail_bound,
    }
}

/// Number of terms after which the partial sum of a non-convergent series
/// (`alpha_rank <= 1`) is guaranteed to exceed `bound`, from the integral
/// lower bound `sum_{n<=N} n^-a >= ((N+1)^(1-a) - 1)/(1-a)`.
pub fn terms_to_exceed(k_scale: f64, alpha_rank: f64, bound: f64) -> Result<f64> {
    if !(k_scale > 0.0) || !bound.is_finite() {
        return Err(Error::domain("k_scale must be positive and bound finite"));
    }
    if alpha_rank > 1.0 {
        return Err(Error::domain(format!(
            "alpha_rank = {alpha_rank} > 1 converges, no bound is exceeded eventually"
        )));
    }
    let m = bound / k_scale;
    let n = if alpha_rank == 1.0 {
        m.exp() - 1.0
    } else {
        let a = 1.0 - alpha_rank;
        (m * a + 1.0).powf(1.0 / a) - 1.0
    };
    Ok(n.max(1.0).ceil())
}

/// Fit of one period within a binned series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodFit {
    pub label: String,
    pub fit: PowerLawFit,
    /// Bootstrap one-sigma error of `alpha_rank`.
    pub sigma_alpha_rank: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedPeriod {
    pub label: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinnedSeriesFit {
    pub period_fits: Vec<PeriodFit>,
    /// Inverse-variance weighted mean of the per-period `alpha_rank`.
    pub pooled_alpha: f64,
    pub skipped: Vec<SkippedPeriod>,
}

/// Bootstrap settings for [`fit_binned_series`].
#[derive(Debug, Clone, Copy)]
pub struct Bootstrap {
    pub resamples: usize,
    pub seed: u64,
}

impl Default for Bootstrap {
    fn default() -> Self {
        Self {
            resamples: DEFAULT_RESAMPLES,
            seed: DEFAULT_BOOTSTRAP_SEED,
        }
    }
}

/// One-sigma bootstrap error of `alpha_rank`, resampling with replacement and
/// refitting the cutoff each time.
pub fn bootstrap_alpha_sigma(values: &[f64], resamples: usize, rng: &mut impl Rng) -> Result<f64> {
    if resamples < 2 {
        return Err(Error::domain("bootstrap needs at least 2 resamples"));
    }
    let n = values.len();
    let mut draw = vec![0.0; n];
    let mut alphas = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        for slot in draw.iter_mut() {
            *slot = values[rng.random_range(0..n)];
        }
        // degenerate resamples (too few distinct values) are skipped
        if let Ok((_, est, _)) = select_xmin(&draw) {
            alphas.push(rank_from_tail(est.alpha_tail));
        }
    }
    if alphas.len() < 2 {
        return Err(Error::insufficient("bootstrap produced fewer than 2 fits"));
    }
    let (_, var) = crate::numeric::mean_var(&alphas);
    Ok(var.sqrt())
}

/// Fits each period and pools the exponents. Periods that fail to fit are
/// listed in `skipped`; it is an error only if none fit.
pub fn fit_binned_series(
    periods: &[(String, Vec<f64>)],
    bootstrap: Bootstrap,
) -> Result<BinnedSeriesFit> {
    let mut period_fits = Vec::new();
    let mut skipped = Vec::new();
    for (index, (label, values)) in periods.iter().enumerate() {
        let attempt = RankSizeSample::new(values.clone()).and_then(|sample| {
            let fit = fit_rank_size(&sample)?;
            // one stream per period keeps periods independent of each other
            let mut rng = ChaCha8Rng::seed_from_u64(bootstrap.seed);
            rng.set_stream(index as u64);
            let sigma = bootstrap_alpha_sigma(sample.values(), bootstrap.resamples, &mut rng)?;
            if !(sigma > 0.0) {
                return Err(Error::domain("bootstrap error is zero"));
            }
            Ok((fit, sigma))
        });
        match attempt {
            Ok((fit, sigma_alpha_rank)) => period_fits.push(PeriodFit {
                label: label.clone(),
                fit,
                sigma_alpha_rank,
            }),
            Err(e) => skipped.push(SkippedPeriod {
                label: label.clone(),
                reason: e.to_string(),
            }),
        }
    }
    if period_fits.is_empty() {
        return Err(Error::insufficient("no period could be fitted"));
    }
    let (mut num, mut den) = (0.0, 0.0);
    for p in &period_fits {
        let w = 1.0 / (p.sigma_alpha_rank * p.sigma_alpha_rank);
        num += w * p.fit.alpha_rank;
        den += w;
    }
    Ok(BinnedSeriesFit {
        period_fits,
        pooled_alpha: num / den,
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    fn power_law(k: f64, alpha: f64, n: usize) -> RankSizeSample {
        RankSizeSample::new((1..=n).map(|r| k * (r as f64).powf(-alpha)).collect()).unwrap()
    }

    #[test]
    fn sample_sorts_values_with_labels() {
        let s = RankSizeSample::with_labels(
            vec![3.0, 1.0, 2.0],
            vec!["a".into(), "b".into(), "c".into()],
        )
        .unwrap();
        assert_eq!(s.values(), &[3.0, 2.0, 1.0]);
        assert_eq!(s.labels().unwrap(), &["a", "c", "b"]);
    }

    #[test]
    fn sample_rejects_non_positive_and_nan() {
        assert!(RankSizeSample::new(vec![1.0, 0.0]).is_err());
        assert!(RankSizeSample::new(vec![1.0, f64::NAN]).is_err());
        assert!(RankSizeSample::with_labels(vec![1.0], vec![]).is_err());
    }

    #[test]
    fn mle_on_exponential_powers() {
        let est = fit_tail_mle(&[E, E * E, E.powi(3)], 1.0).unwrap();
        assert!((est.alpha_tail - 1.5).abs() < 1e-12);
        assert!((est.stderr - 0.5 / 3f64.sqrt()).abs() < 1e-12);
        assert!((est.stderr - 0.2887).abs() < 1e-4);
    }

    #[test]
    fn mle_degenerate_and_short_inputs() {
        assert!(matches!(
            fit_tail_mle(&[2.0, 2.0, 2.0], 2.0),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            fit_tail_mle(&[1.0, 5.0], 2.0),
            Err(Error::InsufficientData(_))
        ));
        assert!(matches!(
            fit_tail_mle(&[1.0, -5.0, 3.0], 0.5),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            fit_tail_mle(&[1.0, 2.0], 0.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn ks_single_point_at_xmin_is_half() {
        assert_eq!(ks_distance(&[3.0], 2.5, 3.0).unwrap(), 0.5);
    }

    #[test]
    fn ks_at_model_quantiles_is_tiny() {
        let (alpha, xmin, n) = (2.5, 1.0, 1000usize);
        let values: Vec<f64> = (1..=n)
            .map(|i| {
                let u = (i as f64 - 0.5) / n as f64;
                xmin * (1.0 - u).powf(1.0 / (1.0 - alpha))
            })
            .collect();
        let ks = ks_distance(&values, alpha, xmin).unwrap();
        assert!(ks <= 0.5 / n as f64 + 1e-12, "ks = {ks}");
    }

    #[test]
    fn select_xmin_needs_ten_distinct() {
        let v: Vec<f64> = (1..=9).map(f64::from).collect();
        assert!(matches!(select_xmin(&v), Err(Error::InsufficientData(_))));
        let mut v: Vec<f64> = (1..=9).map(f64::from).collect();
        v.extend([9.0; 5]);
        assert!(matches!(select_xmin(&v), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn ls_exact_on_noiseless_power_law() {
        let fit = fit_rank_size_ls(&power_law(7.0, 2.0, 100)).unwrap();
        assert!((fit.alpha_rank - 2.0).abs() < 1e-10);
        assert!((fit.k_scale - 7.0).abs() < 1e-9);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert!(!fit.zero_variance);
    }

    #[test]
    fn ls_constant_sample_flags_zero_variance() {
        let fit = fit_rank_size_ls(&RankSizeSample::new(vec![5.0; 20]).unwrap()).unwrap();
        assert_eq!(fit.alpha_rank, 0.0);
        assert!((fit.k_scale - 5.0).abs() < 1e-12);
        assert_eq!(fit.r_squared, 1.0);
        assert!(fit.zero_variance);
        assert!(fit_rank_size_ls(&RankSizeSample::new(vec![1.0, 2.0]).unwrap()).is_err());
    }

    #[test]
    fn noiseless_rank_size_recovery() {
        let fit = fit_rank_size(&power_law(1000.0, 1.644, 1000)).unwrap();
        assert!((fit.alpha_rank - 1.644).abs() <= 0.02, "{fit:?}");
        assert_eq!(fit.k_scale, 1000.0);
        let harmonic = fit_rank_size(&power_law(50.0, 1.0, 1000)).unwrap();
        assert!((harmonic.alpha_rank - 1.0).abs() <= 0.02, "{harmonic:?}");
    }

    #[test]
    fn fit_rank_size_precondition() {
        let s = power_law(1.0, 1.5, 9);
        assert!(matches!(fit_rank_size(&s), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn dimension_examples() {
        let d = dimension_from_exponent(1.644).unwrap();
        assert!((d - 1.5528).abs() < 1e-3);
        assert!((d - 1.5).abs() < 0.06);
        assert_eq!(dimension_from_exponent(1.5).unwrap(), 2.0);
        let d2 = dimension_from_exponent(2.0).unwrap();
        assert_eq!(d2, 1.0);
        assert_eq!(1.0 / (d2 / (d2 + 1.0)), 2.0);
        assert!(dimension_from_exponent(1.0).is_err());
        assert!(dimension_from_exponent(0.7).is_err());
    }

    #[test]
    fn basel_partial_sum_within_tail_bound() {
        let s = rank_size_partial_sum(1.0, 2.0, 1_000_000);
        let limit = std::f64::consts::PI.powi(2) / 6.0;
        assert!(s.converges);
        let bound = s.tail_bound.unwrap();
        assert!(s.partial <= limit);
        assert!(limit <= s.partial + bound, "gap {}", limit - s.partial);
    }

    #[test]
    fn harmonic_partial_sum_diverges() {
        let s = rank_size_partial_sum(1.0, 1.0, 1_000_000);
        assert!(!s.converges);
        assert!(s.tail_bound.is_none());
        // ln N + gamma + 1/(2N)
        let oracle = (1e6f64).ln() + 0.577_215_664_901_532_9 + 0.5e-6;
        assert!((s.partial - oracle).abs() < 1e-9);
        assert!((s.partial - 14.39).abs() < 0.01);
    }

    #[test]
    fn sub_harmonic_exceeds_bound_at_computed_horizon() {
        for bound in [5.0, 20.0, 50.0] {
            let n = terms_to_exceed(1.0, 0.9, bound).unwrap();
            let s = rank_size_partial_sum(1.0, 0.9, n as u64);
            assert!(!s.converges);
            assert!(
                s.partial > bound,
                "bound {bound} n {n} partial {}",
                s.partial
            );
        }
        assert!(terms_to_exceed(1.0, 1.5, 10.0).is_err());
    }

    #[test]
    fn binned_single_period_pools_to_itself() {
        let values = power_law(1e6, 1.66, 300).values().to_vec();
        let out = fit_binned_series(
            &[("q1".into(), values)],
            Bootstrap {
                resamples: 50,
                seed: 7,
            },
        )
        .unwrap();
        assert_eq!(out.period_fits.len(), 1);
        assert_eq!(out.pooled_alpha, out.period_fits[0].fit.alpha_rank);
        assert!(out.period_fits[0].sigma_alpha_rank > 0.0);
        assert!(out.period_fits[0].fit.n_tail >= MIN_TAIL);
    }

    #[test]
    fn binned_skips_and_flags_short_periods() {
        let good = power_law(1e6, 1.5, 200).values().to_vec();
        let out = fit_binned_series(
            &[("short".into(), vec![1.0, 2.0, 3.0]), ("good".into(), good)],
            Bootstrap {
                resamples: 20,
                seed: 1,
            },
        )
        .unwrap();
        assert_eq!(out.skipped.len(), 1);
        assert_eq!(out.skipped[0].label, "short");
        assert_eq!(out.period_fits[0].label, "good");
        assert!(fit_binned_series(&[("x".into(), vec![1.0])], Bootstrap::default()).is_err());
    }
}
