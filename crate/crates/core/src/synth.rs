//! Seeded synthetic fixtures: noisy rank-size samples, Pareto draws, GBM
//! price series and the standard triangle venues.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, StandardNormal};

use crate::error::Result;
use crate::impact::{CfmmPool, Venue};
use crate::kelly::PriceSeries;
use crate::powerlaw::RankSizeSample;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `k n^-alpha` for `n = 1..=n`, each term multiplied by lognormal noise of
/// log-scale `sigma`.
pub fn noisy_rank_size(
    k: f64,
    alpha_rank: f64,
    n: usize,
    sigma: f64,
    seed: u64,
) -> Result<RankSizeSample> {
    let mut rng = rng(seed);
    let noise = LogNormal::new(0.0, sigma).map_err(|e| crate::Error::domain(e.to_string()))?;
    let values = (1..=n)
        .map(|i| k * (i as f64).powf(-alpha_rank) * noise.sample(&mut rng))
        .collect();
    RankSizeSample::new(values)
}

/// `n` draws from a continuous Pareto law with density exponent `alpha_tail`
/// above `xmin`, by inversion.
pub fn pareto(alpha_tail: f64, xmin: f64, n: usize, rng: &mut impl Rng) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let u: f64 = 1.0 - rng.random::<f64>();
            xmin * u.powf(-1.0 / (alpha_tail - 1.0))
        })
        .collect()
}

/// Geometric Brownian motion sampled `n` times at spacing `dt` years,
/// timestamps `i * step_secs`.
pub fn gbm_series(
    mu: f64,
    sigma: f64,
    dt: f64,
    n: usize,
    p0: f64,
    step_secs: i64,
    rng: &mut impl Rng,
) -> Result<PriceSeries> {
    let mut prices = Vec::with_capacity(n);
    let mut p = p0;
    prices.push(p);
    for _ in 1..n {
        let z: f64 = rng.sample(StandardNormal);
        p *= ((mu - 0.5 * sigma * sigma) * dt + sigma * dt.sqrt() * z).exp();
        prices.push(p);
    }
    let ts = (0..n as i64).map(|i| i * step_secs).collect();
    PriceSeries::new(ts, prices)
}

/// Three fee-free pools A/B, B/C, C/A with equal depth `depth` on every side
/// except that the last leg pays out `1 + mispricing` times as much C-to-A.
pub fn triangle(depth: f64, mispricing: f64) -> Result<[Venue; 3]> {
    Ok([
        Venue::dex("A", "B", CfmmPool::new(depth, depth, 0.0)?)?,
        Venue::dex("B", "C", CfmmPool::new(depth, depth, 0.0)?)?,
        Venue::dex(
            "C",
            "A",
            CfmmPool::new(depth, depth * (1.0 + mispricing), 0.0)?,
        )?,
    ])
}
