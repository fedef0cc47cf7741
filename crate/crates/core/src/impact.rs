//! Price impact on the two venue types.
//!
//! Order-book venues follow the square-root law `dp/p = c * sigma * sqrt(dx/V)`.
//! Constant-product pools keep `K = x * y` fixed across a swap, so the output
//! for an input `dx` is `y - K/(x + dx)`, linear in `dx` to lowest order.
//!
//! Everything here is a quote on an immutable value; executing a swap returns
//! a new pool.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::ols;

fn require_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must be positive, got {v}")))
    }
}

fn default_c_pref() -> f64 {
    1.0
}

/// Square-root impact model of an order-book venue.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqrtImpactModel {
    /// Daily volatility, fraction per day.
    pub sigma: f64,
    /// Average daily volume in base units.
    pub v_daily: f64,
    #[serde(default = "default_c_pref")]
    pub c_pref: f64,
    /// Mid price, quote per base.
    pub p_mid: f64,
}

impl SqrtImpactModel {
    pub fn new(sigma: f64, v_daily: f64, c_pref: f64, p_mid: f64) -> Result<Self> {
        let model = Self {
            sigma,
            v_daily,
            c_pref,
            p_mid,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("sigma", self.sigma)?;
        require_positive("v_daily", self.v_daily)?;
        require_positive("c_pref", self.c_pref)?;
        require_positive("p_mid", self.p_mid)
    }

    /// Relative impact of `dx` base units with an explicit prefactor.
    pub fn impact_with_pref(&self, dx: f64, c_pref: f64) -> Result<f64> {
        require_positive("dx", dx)?;
        Ok(c_pref * self.sigma * (dx / self.v_daily).sqrt())
    }

    pub fn impact(&self, dx: f64) -> Result<f64> {
        self.impact_with_pref(dx, self.c_pref)
    }

    /// Quote for selling `dx` base, filled at `mid * (1 - impact/2)`.
    pub fn quote_sell_base(&self, dx: f64) -> Result<Quote> {
        let impact = self.impact(dx)?;
        let fill = (self.p_mid * (1.0 - impact / 2.0)).max(0.0);
        Ok(Quote {
            dx_in: dx,
            dy_out: dx * fill,
            price_impact: -impact,
            effective_price: fill,
        })
    }

    /// Quote for spending `dq` quote units on base, filled at
    /// `mid * (1 + impact/2)` where the impact is that of the base amount
    /// bought. `dy_out` is the base received.
    pub fn quote_buy_base(&self, dq: f64) -> Result<Quote> {
        require_positive("dq", dq)?;
        let base = self.base_for_quote(dq);
        let impact = self.impact(base)?;
        Ok(Quote {
            dx_in: dq,
            dy_out: base,
            price_impact: impact,
            effective_price: base / dq,
        })
    }

    /// Solves `b * mid * (1 + a * sqrt(b)) = dq` for the base amount `b`,
    /// with `a = c * sigma / (2 sqrt(V))`.
    fn base_for_quote(&self, dq: f64) -> f64 {
        let a = self.c_pref * self.sigma / (2.0 * self.v_daily.sqrt());
        // cost(s) = mid * (s^2 + a s^3) with s = sqrt(b), increasing and convex
        let cost = |s: f64| self.p_mid * s * s * (1.0 + a * s);
        let mut hi = (dq / self.p_mid).sqrt();
        let mut lo = 0.0;
        let mut s = hi;
        for _ in 0..100 {
            let f = cost(s) - dq;
            if f > 0.0 {
                hi = s;
            } else {
                lo = s;
            }
            let df = self.p_mid * (2.0 * s + 3.0 * a * s * s);
            let newton = s - f / df;
            s = if newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if (hi - lo) <= 1e-15 * hi {
                break;
            }
        }
        s * s
    }
}

/// Relative price change from executing `dx` base units. Positive; callers
/// negate for sells.
pub fn cex_impact(model: &SqrtImpactModel, dx: f64) -> Result<f64> {
    model.impact(dx)
}

/// Constant-product pool `K = x * y` with an input-side fee.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CfmmPool {
    pub x_reserve: f64,
    pub y_reserve: f64,
    #[serde(default)]
    pub fee_rate: f64,
}

impl CfmmPool {
    pub fn new(x_reserve: f64, y_reserve: f64, fee_rate: f64) -> Result<Self> {
        let pool = Self {
            x_reserve,
            y_reserve,
            fee_rate,
        };
        pool.validate()?;
        Ok(pool)
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("x_reserve", self.x_reserve)?;
        require_positive("y_reserve", self.y_reserve)?;
        if !(0.0..1.0).contains(&self.fee_rate) {
            return Err(Error::domain(format!(
                "fee_rate must lie in [0, 1), got {}",
                self.fee_rate
            )));
        }
        Ok(())
    }

    pub fn invariant(&self) -> f64 {
        self.x_reserve * self.y_reserve
    }

    pub fn spot_price(&self) -> f64 {
        self.y_reserve / self.x_reserve
    }

    /// The same pool seen from the quote side: swaps quote in, base out.
    pub fn reversed(&self) -> Self {
        Self {
            x_reserve: self.y_reserve,
            y_reserve: self.x_reserve,
            fee_rate: self.fee_rate,
        }
    }

    fn gross_out(&self, dx: f64) -> f64 {
        let net = dx * (1.0 - self.fee_rate);
        self.y_reserve * net / (self.x_reserve + net)
    }

    pub fn quote_exact(&self, dx: f64) -> Result<Quote> {
        require_positive("dx", dx)?;
        let dy = self.gross_out(dx);
        let new_spot = (self.y_reserve - dy) / (self.x_reserve + dx);
        Ok(Quote {
            dx_in: dx,
            dy_out: dy,
            price_impact: new_spot / self.spot_price() - 1.0,
            effective_price: dy / dx,
        })
    }

    /// First-order quote `dy = y dx / x`. The reported impact is the
    /// first-order mid change `-2 dx/x`.
    pub fn quote_linear(&self, dx: f64) -> Result<Quote> {
        require_positive("dx", dx)?;
        let dy = self.y_reserve * dx / self.x_reserve;
        Ok(Quote {
            dx_in: dx,
            dy_out: dy,
            price_impact: -2.0 * dx / self.x_reserve,
            effective_price: dy / dx,
        })
    }

    /// Swaps `dx` base in; the full `dx` enters the pool while only the
    /// post-fee amount prices the trade.
    pub fn execute(&self, dx: f64) -> Result<(CfmmPool, f64)> {
        require_positive("dx", dx)?;
        let dy = self.gross_out(dx);
        let next = CfmmPool {
            x_reserve: self.x_reserve + dx,
            y_reserve: if self.fee_rate == 0.0 {
                self.invariant() / (self.x_reserve + dx)
            } else {
                self.y_reserve - dy
            },
            fee_rate: self.fee_rate,
        };
        if !(next.y_reserve > 0.0) {
            return Err(Error::domain("swap would drain the pool"));
        }
        Ok((next, dy))
    }

    /// Quote input needed to take exactly `out` base out of the pool.
    pub fn quote_in_for_base_out(&self, out: f64) -> Result<f64> {
        require_positive("out", out)?;
        if out >= self.x_reserve {
            return Err(Error::domain(format!(
                "cannot take {out} base from a pool holding {}",
                self.x_reserve
            )));
        }
        let net = self.invariant() / (self.x_reserve - out) - self.y_reserve;
        Ok(net / (1.0 - self.fee_rate))
    }

    /// Pool with the same invariant and spot price `spot`.
    pub fn repriced(&self, spot: f64) -> Result<CfmmPool> {
        require_positive("spot", spot)?;
        let k = self.invariant();
        Ok(CfmmPool {
            x_reserve: (k / spot).sqrt(),
            y_reserve: (k * spot).sqrt(),
            fee_rate: self.fee_rate,
        })
    }
}

pub fn cfmm_quote_exact(pool: &CfmmPool, dx: f64) -> Result<Quote> {
    pool.quote_exact(dx)
}

pub fn cfmm_quote_linear(pool: &CfmmPool, dx: f64) -> Result<Quote> {
    pool.quote_linear(dx)
}

pub fn cfmm_execute(pool: &CfmmPool, dx: f64) -> Result<(CfmmPool, f64)> {
    pool.execute(dx)
}

pub fn cfmm_spot_price(pool: &CfmmPool) -> f64 {
    pool.spot_price()
}

/// Outcome of quoting one trade.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quote {
    pub dx_in: f64,
    pub dy_out: f64,
    pub price_impact: f64,
    pub effective_price: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum VenueModel {
    Cex(SqrtImpactModel),
    Dex(CfmmPool),
}

/// A trading venue for one base/quote pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Venue {
    pub base: String,
    pub quote: String,
    #[serde(flatten)]
    pub model: VenueModel,
}

impl Venue {
    pub fn new(
        base: impl Into<String>,
        quote: impl Into<String>,
        model: VenueModel,
    ) -> Result<Self> {
        let venue = Self {
            base: base.into(),
            quote: quote.into(),
            model,
        };
        venue.validate()?;
        Ok(venue)
    }

    pub fn cex(base: &str, quote: &str, model: SqrtImpactModel) -> Result<Self> {
        Self::new(base, quote, VenueModel::Cex(model))
    }

    pub fn dex(base: &str, quote: &str, pool: CfmmPool) -> Result<Self> {
        Self::new(base, quote, VenueModel::Dex(pool))
    }

    pub fn validate(&self) -> Result<()> {
        if self.base.is_empty() || self.quote.is_empty() {
            return Err(Error::domain("venue symbols must be non-empty"));
        }
        if self.base == self.quote {
            return Err(Error::domain(format!(
                "venue base and quote are both {}",
                self.base
            )));
        }
        match &self.model {
            VenueModel::Cex(m) => m.validate(),
            VenueModel::Dex(p) => p.validate(),
        }
    }

    pub fn mid_price(&self) -> f64 {
        match &self.model {
            VenueModel::Cex(m) => m.p_mid,
            VenueModel::Dex(p) => p.spot_price(),
        }
    }

    pub fn trades(&self, symbol: &str) -> bool {
        self.base == symbol || self.quote == symbol
    }

    pub fn counterpart(&self, symbol: &str) -> Option<&str> {
        if symbol == self.base {
            Some(&self.quote)
        } else if symbol == self.quote {
            Some(&self.base)
        } else {
            None
        }
    }

    /// Zero-size conversion rate from `from` into the other symbol.
    pub fn spot_rate(&self, from: &str) -> Result<f64> {
        if from == self.base {
            Ok(self.mid_price())
        } else if from == self.quote {
            Ok(1.0 / self.mid_price())
        } else {
            Err(Error::Topology(format!(
                "{from} is not traded on {}/{}",
                self.base, self.quote
            )))
        }
    }

    /// Quotes converting `amount` of `from` into the other symbol.
    pub fn convert(&self, from: &str, amount: f64) -> Result<f64> {
        let selling_base = if from == self.base {
            true
        } else if from == self.quote {
            false
        } else {
            return Err(Error::Topology(format!(
                "{from} is not traded on {}/{}",
                self.base, self.quote
            )));
        };
        let quote = match (&self.model, selling_base) {
            (VenueModel::Cex(m), true) => m.quote_sell_base(amount)?,
            (VenueModel::Cex(m), false) => m.quote_buy_base(amount)?,
            (VenueModel::Dex(p), true) => p.quote_exact(amount)?,
            (VenueModel::Dex(p), false) => p.reversed().quote_exact(amount)?,
        };
        Ok(quote.dy_out)
    }

    /// Relative mid-price move caused by trading `dx` base, as a magnitude.
    pub fn impact_magnitude(&self, dx: f64) -> Result<f64> {
        match &self.model {
            VenueModel::Cex(m) => m.impact(dx),
            VenueModel::Dex(p) => Ok(p.quote_exact(dx)?.price_impact.abs()),
        }
    }
}

/// Log-log slope of impact against trade size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Set when a pool is probed where impact reaches 50%, so the slope
    /// reflects curvature rather than the small-trade law.
    pub saturated: bool,
}

/// `n` sizes spaced geometrically from `lo` to `hi` inclusive.
pub fn geometric_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    require_positive("lo", lo)?;
    require_positive("hi", hi)?;
    if n < 2 || hi <= lo {
        return Err(Error::domain("grid needs n >= 2 and hi > lo"));
    }
    let ratio = (hi / lo).ln() / (n - 1) as f64;
    Ok((0..n).map(|i| lo * (ratio * i as f64).exp()).collect())
}

/// Fits the slope of `ln impact` on `ln dx`: about 0.5 on order-book venues,
/// about 1 on constant-product pools for small trades.
pub fn impact_exponent_probe(venue: &Venue, dx_grid: &[f64]) -> Result<ProbeResult> {
    if dx_grid.len() < 10 {
        return Err(Error::insufficient(format!(
            "probe grid has {} points, need at least 10",
            dx_grid.len()
        )));
    }
    let lo = dx_grid.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = dx_grid.iter().copied().fold(0.0, f64::max);
    if !(lo > 0.0) || hi / lo < 100.0 {
        return Err(Error::insufficient(
            "probe grid must be positive and span at least two decades",
        ));
    }
    let mut ln_dx = Vec::with_capacity(dx_grid.len());
    let mut ln_impact = Vec::with_capacity(dx_grid.len());
    let mut saturated = false;
    for &dx in dx_grid {
        let impact = venue.impact_magnitude(dx)?;
        if matches!(venue.model, VenueModel::Dex(_)) && impact >= 0.5 {
            saturated = true;
        }
        ln_dx.push(dx.ln());
        ln_impact.push(impact.ln());
    }
    let line = ols(&ln_dx, &ln_impact);
    Ok(ProbeResult {
        slope: line.slope,
        intercept: line.intercept,
        r_squared: line.r_squared.unwrap_or(1.0),
        saturated,
    })
}

/// Amounts along a three-leg round trip starting and ending in `path[0]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundTrip {
    pub path: [String; 4],
    pub amounts: [f64; 4],
    pub profit: f64,
}

/// Resolves the symbol cycle `A -> B -> C -> A` of three venues.
pub fn triangle_path(venues: &[Venue; 3]) -> Result<[String; 4]> {
    let first = &venues[0];
    let last = &venues[2];
    let shared: Vec<&String> = [&first.base, &first.quote]
        .into_iter()
        .filter(|s| last.trades(s))
        .collect();
    let start = match shared.as_slice() {
        [one] => (*one).clone(),
        _ => {
            return Err(Error::Topology(
                "first and last venue must share exactly one symbol".into(),
            ))
        }
    };
    let b = first.counterpart(&start).unwrap().to_string();
    let c = venues[1]
        .counterpart(&b)
        .ok_or_else(|| Error::Topology(format!("second venue does not trade {b}")))?
        .to_string();
    match last.counterpart(&c) {
        Some(end) if end == start => {}
        _ => {
            return Err(Error::Topology(format!(
                "third venue must connect {c} back to {start}"
            )))
        }
    }
    if c == start {
        return Err(Error::Topology("cycle revisits its start early".into()));
    }
    Ok([start.clone(), b, c, start])
}

/// Product of zero-size conversion rates around the cycle. Above 1 the loop
/// is profitable for small enough trades.
pub fn cycle_spot_product(venues: &[Venue; 3]) -> Result<f64> {
    let path = triangle_path(venues)?;
    let mut product = 1.0;
    for (leg, venue) in venues.iter().enumerate() {
        product *= venue.spot_rate(&path[leg])?;
    }
    Ok(product)
}

/// Quotes `dx` of the start symbol around the cycle without touching any
/// venue. Order-book legs fill at mid with half their impact.
pub fn triangle_roundtrip(venues: &[Venue; 3], dx: f64) -> Result<RoundTrip> {
    require_positive("dx", dx)?;
    let path = triangle_path(venues)?;
    let mut amounts = [dx, 0.0, 0.0, 0.0];
    for (leg, venue) in venues.iter().enumerate() {
        let amount = amounts[leg];
        amounts[leg + 1] = if amount > 0.0 {
            venue.convert(&path[leg], amount)?
        } else {
            0.0
        };
    }
    Ok(RoundTrip {
        profit: amounts[3] - dx,
        path,
        amounts,
    })
}
