//! Seeded agent-based market.
//!
//! Each step:
//! 1. every token's fundamental takes a geometric Brownian step and the
//!    venue mid follows it (pools are repriced along their invariant);
//! 2. agents submit orders, noise traders first, then Kelly investors, then
//!    manipulators (configurable);
//! 3. orders execute on the token's venue. Order-book venues batch the step:
//!    every order fills against the opening mid at half its own impact, and
//!    the mid then moves by `phi` times the summed signed impacts. Pools
//!    execute orders one after another;
//! 4. prices, capitalisations and agent P&L are recorded.
//!
//! Randomness comes from one ChaCha stream per (agent, token) pair and one
//! per token fundamental, all derived from the config seed, so adding an
//! agent does not change the draws of the others.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::impact::{CfmmPool, SqrtImpactModel, Venue, VenueModel};
use crate::kelly::{log_returns, stats_from_log_returns};
use crate::powerlaw::RankSizeSample;

fn one() -> f64 {
    1.0
}

fn default_cash() -> f64 {
    1e6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenSpec {
    pub symbol: String,
    /// Drift of the latent fundamental, per year.
    pub fitness_drift: f64,
    /// Volatility of the latent fundamental, per sqrt(year).
    pub latent_vol: f64,
    pub initial_price: f64,
    pub initial_supply: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    NoiseTrader,
    KellyInvestor,
    Manipulator,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum AgentSpec {
    /// Net flow per token per step is the imbalance of `volume_scale` unit
    /// orders of random sign, drawn as `N(0, volume_scale)`.
    NoiseTrader { volume_scale: f64 },
    /// Rebalances each token sleeve (an equal share of equity) to the
    /// fractional Kelly fraction estimated over `lookback_steps` returns.
    KellyInvestor {
        lambda: f64,
        lookback_steps: usize,
        rebalance_every: usize,
        #[serde(default = "default_cash")]
        initial_cash: f64,
        #[serde(default)]
        min_fraction: f64,
        #[serde(default = "one")]
        max_fraction: f64,
    },
    /// Holds `inventory_w` and each step buys `cycle_q` in the high-impact
    /// phase (prefactor `high_window_pref`) and sells it in the low-impact
    /// phase (prefactor `low_window_pref`).
    Manipulator {
        inventory_w: f64,
        cycle_q: f64,
        high_window_pref: f64,
        low_window_pref: f64,
        /// Defaults to the first token.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        token: Option<String>,
    },
}

impl AgentSpec {
    pub fn kind(&self) -> AgentKind {
        match self {
            AgentSpec::NoiseTrader { .. } => AgentKind::NoiseTrader,
            AgentSpec::KellyInvestor { .. } => AgentKind::KellyInvestor,
            AgentSpec::Manipulator { .. } => AgentKind::Manipulator,
        }
    }

    fn label_prefix(&self) -> &'static str {
        match self {
            AgentSpec::NoiseTrader { .. } => "noise",
            AgentSpec::KellyInvestor { .. } => "kelly",
            AgentSpec::Manipulator { .. } => "manipulator",
        }
    }
}

fn default_order() -> Vec<AgentKind> {
    vec![
        AgentKind::NoiseTrader,
        AgentKind::KellyInvestor,
        AgentKind::Manipulator,
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub seed: u64,
    pub n_steps: usize,
    pub dt_years: f64,
    pub tokens: Vec<TokenSpec>,
    /// One venue per token, with the token as base symbol.
    pub venues: Vec<Venue>,
    #[serde(default)]
    pub agents: Vec<AgentSpec>,
    /// Share of order-book impact that persists.
    #[serde(default = "one")]
    pub permanent_impact_phi: f64,
    #[serde(default)]
    pub riskless_rate: f64,
    #[serde(default = "default_order")]
    pub agent_order: Vec<AgentKind>,
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Config(msg()))
    }
}

impl SimConfig {
    /// Checks every config invariant and returns, per token, the index of
    /// its venue.
    fn venue_index(&self) -> Result<Vec<usize>> {
        check(!self.tokens.is_empty(), || {
            "at least one token required".into()
        })?;
        check(self.n_steps >= 1, || "at least one step required".into())?;
        check(self.dt_years.is_finite() && self.dt_years > 0.0, || {
            format!("dt_years must be positive, got {}", self.dt_years)
        })?;
        check((0.0..=1.0).contains(&self.permanent_impact_phi), || {
            format!(
                "permanent_impact_phi must lie in [0, 1], got {}",
                self.permanent_impact_phi
            )
        })?;
        check(self.riskless_rate.is_finite(), || {
            "riskless_rate must be finite".into()
        })?;
        let mut order = self.agent_order.clone();
        order.sort_by_key(|k| *k as u8);
        order.dedup();
        check(order.len() == 3 && self.agent_order.len() == 3, || {
            "agent_order must list each agent kind exactly once".into()
        })?;

        for (i, t) in self.tokens.iter().enumerate() {
            check(!t.symbol.is_empty(), || {
                format!("token {i} has an empty symbol")
            })?;
            check(
                self.tokens[..i].iter().all(|o| o.symbol != t.symbol),
                || format!("duplicate token symbol {}", t.symbol),
            )?;
            check(t.initial_price.is_finite() && t.initial_price > 0.0, || {
                format!("{}: initial_price must be positive", t.symbol)
            })?;
            check(
                t.initial_supply.is_finite() && t.initial_supply > 0.0,
                || format!("{}: initial_supply must be positive", t.symbol),
            )?;
            check(t.latent_vol.is_finite() && t.latent_vol >= 0.0, || {
                format!("{}: latent_vol must be non-negative", t.symbol)
            })?;
            check(t.fitness_drift.is_finite(), || {
                format!("{}: fitness_drift must be finite", t.symbol)
            })?;
        }

        for v in &self.venues {
            v.validate().map_err(|e| Error::Config(e.to_string()))?;
            check(self.tokens.iter().any(|t| t.symbol == v.base), || {
                format!("venue {}/{} has no matching token", v.base, v.quote)
            })?;
        }
        let mut index = Vec::with_capacity(self.tokens.len());
        for t in &self.tokens {
            let matches: Vec<usize> = self
                .venues
                .iter()
                .enumerate()
                .filter(|(_, v)| v.base == t.symbol)
                .map(|(i, _)| i)
                .collect();
            check(matches.len() == 1, || {
                format!(
                    "token {} needs exactly one venue, found {}",
                    t.symbol,
                    matches.len()
                )
            })?;
            let mid = self.venues[matches[0]].mid_price();
            check(
                (mid - t.initial_price).abs() <= 1e-9 * t.initial_price,
                || {
                    format!(
                        "venue mid {mid} for {} differs from initial_price {}",
                        t.symbol, t.initial_price
                    )
                },
            )?;
            index.push(matches[0]);
        }

        for (i, a) in self.agents.iter().enumerate() {
            match a {
                AgentSpec::NoiseTrader { volume_scale } => {
                    check(volume_scale.is_finite() && *volume_scale >= 0.0, || {
                        format!("agent {i}: volume_scale must be non-negative")
                    })?;
                }
                AgentSpec::KellyInvestor {
                    lambda,
                    lookback_steps,
                    rebalance_every,
                    initial_cash,
                    min_fraction,
                    max_fraction,
                } => {
                    check(*lambda > 0.0 && *lambda <= 1.0, || {
                        format!("agent {i}: lambda must lie in (0, 1]")
                    })?;
                    check(*lookback_steps >= 2, || {
                        format!("agent {i}: lookback_steps must be at least 2")
                    })?;
                    check(*rebalance_every >= 1, || {
                        format!("agent {i}: rebalance_every must be at least 1")
                    })?;
                    check(initial_cash.is_finite() && *initial_cash > 0.0, || {
                        format!("agent {i}: initial_cash must be positive")
                    })?;
                    check(
                        min_fraction.is_finite()
                            && max_fraction.is_finite()
                            && min_fraction <= max_fraction,
                        || format!("agent {i}: need finite min_fraction <= max_fraction"),
                    )?;
                }
                AgentSpec::Manipulator {
                    inventory_w,
                    cycle_q,
                    high_window_pref,
                    low_window_pref,
                    token,
                } => {
                    check(inventory_w.is_finite() && *inventory_w >= 0.0, || {
                        format!("agent {i}: inventory_w must be non-negative")
                    })?;
                    check(cycle_q.is_finite() && *cycle_q > 0.0, || {
                        format!("agent {i}: cycle_q must be positive")
                    })?;
                    check(
                        *low_window_pref > 0.0 && high_window_pref >= low_window_pref,
                        || format!("agent {i}: need high_window_pref >= low_window_pref > 0"),
                    )?;
                    let t = self.manipulator_token(token.as_deref())?;
                    check(
                        matches!(self.venues[index[t]].model, VenueModel::Cex(_)),
                        || format!("agent {i}: manipulator needs an order-book venue"),
                    )?;
                }
            }
        }
        Ok(index)
    }

    fn manipulator_token(&self, token: Option<&str>) -> Result<usize> {
        match token {
            None => Ok(0),
            Some(sym) => self
                .tokens
                .iter()
                .position(|t| t.symbol == sym)
                .ok_or_else(|| Error::config(format!("manipulator token {sym} not found"))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.venue_index().map(|_| ())
    }

    pub fn agent_labels(&self) -> Vec<String> {
        self.agents
            .iter()
            .enumerate()
            .map(|(i, a)| format!("{}_{i}", a.label_prefix()))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Buy,
    Sell,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::Buy => 1.0,
            Side::Sell => -1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Side::Buy => "buy",
            Side::Sell => "sell",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Trade {
    pub step: usize,
    pub agent: usize,
    pub token: usize,
    pub side: Side,
    pub size: f64,
    pub fill_price: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub symbols: Vec<String>,
    pub agent_labels: Vec<String>,
    /// `[token][step]`, mid after the step.
    pub price_paths: Vec<Vec<f64>>,
    /// `[token][step]`, price times supply.
    pub cap_paths: Vec<Vec<f64>>,
    /// `[agent][step]`, mark-to-market equity minus initial equity.
    pub agent_pnl: Vec<Vec<f64>>,
    pub trade_log: Vec<Trade>,
    pub final_snapshot: RankSizeSample,
}

impl SimResult {
    pub fn n_steps(&self) -> usize {
        self.price_paths.first().map_or(0, Vec::len)
    }
}

/// Market caps at `step`, largest first, labelled by symbol.
pub fn rank_size_snapshot(result: &SimResult, step: usize) -> Result<RankSizeSample> {
    if step >= result.n_steps() {
        return Err(Error::Range(format!(
            "step {step} outside 0..{}",
            result.n_steps()
        )));
    }
    let caps = result.cap_paths.iter().map(|p| p[step]).collect();
    RankSizeSample::with_labels(caps, result.symbols.clone())
}

enum VenueState {
    Cex(SqrtImpactModel),
    Dex(CfmmPool),
}

impl VenueState {
    fn mid(&self) -> f64 {
        match self {
            VenueState::Cex(m) => m.p_mid,
            VenueState::Dex(p) => p.spot_price(),
        }
    }

    fn scale_mid(&mut self, factor: f64) -> Result<()> {
        match self {
            VenueState::Cex(m) => m.p_mid *= factor,
            VenueState::Dex(p) => *p = p.repriced(p.spot_price() * factor)?,
        }
        Ok(())
    }
}

struct AgentState {
    cash: f64,
    holdings: Vec<f64>,
    initial_equity: f64,
}

impl AgentState {
    fn equity(&self, mids: &[f64]) -> f64 {
        self.cash
            + self
                .holdings
                .iter()
                .zip(mids)
                .map(|(h, m)| h * m)
                .sum::<f64>()
    }
}

struct Order {
    agent: usize,
    /// Positive buys, negative sells, in base units.
    qty: f64,
    /// Impact prefactor override for order-book venues.
    pref: Option<f64>,
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn fundamental_stream(seed: u64, token: usize) -> ChaCha8Rng {
    stream(seed, token as u64)
}

fn agent_stream(seed: u64, agent: usize, token: usize) -> ChaCha8Rng {
    stream(seed, ((agent as u64 + 1) << 32) | token as u64)
}

/// Runs a simulation. Identical configs give bit-identical results.
pub fn run_sim(config: &SimConfig) -> Result<SimResult> {
    let venue_of = config.venue_index()?;
    let n_tokens = config.tokens.len();
    let n_steps = config.n_steps;
    let dt = config.dt_years;
    let phi = config.permanent_impact_phi;

    let mut venues: Vec<VenueState> = venue_of
        .iter()
        .map(|&v| match config.venues[v].model {
            VenueModel::Cex(m) => VenueState::Cex(m),
            VenueModel::Dex(p) => VenueState::Dex(p),
        })
        .collect();

    let mut fundamental_rngs: Vec<ChaCha8Rng> = (0..n_tokens)
        .map(|t| fundamental_stream(config.seed, t))
        .collect();
    let mut noise_rngs: Vec<Vec<ChaCha8Rng>> = config
        .agents
        .iter()
        .enumerate()
        .map(|(a, spec)| match spec {
            AgentSpec::NoiseTrader { .. } => (0..n_tokens)
                .map(|t| agent_stream(config.seed, a, t))
                .collect(),
            _ => Vec::new(),
        })
        .collect();

    let mut mids: Vec<f64> = venues.iter().map(VenueState::mid).collect();
    let mut agents: Vec<AgentState> = config
        .agents
        .iter()
        .map(|spec| {
            let mut holdings = vec![0.0; n_tokens];
            let cash = match spec {
                AgentSpec::KellyInvestor { initial_cash, .. } => *initial_cash,
                AgentSpec::Manipulator {
                    inventory_w, token, ..
                } => {
                    let t = config.manipulator_token(token.as_deref()).unwrap_or(0);
                    holdings[t] = *inventory_w;
                    0.0
                }
                AgentSpec::NoiseTrader { .. } => 0.0,
            };
            let mut state = AgentState {
                cash,
                holdings,
                initial_equity: 0.0,
            };
            state.initial_equity = state.equity(&mids);
            state
        })
        .collect();

    let mut agent_sequence: Vec<usize> = Vec::with_capacity(config.agents.len());
    for kind in &config.agent_order {
        agent_sequence.extend(
            config
                .agents
                .iter()
                .enumerate()
                .filter(|(_, a)| a.kind() == *kind)
                .map(|(i, _)| i),
        );
    }

    let mut history: Vec<Vec<f64>> = mids.iter().map(|&m| vec![m]).collect();
    let mut price_paths = vec![Vec::with_capacity(n_steps); n_tokens];
    let mut cap_paths = vec![Vec::with_capacity(n_steps); n_tokens];
    let mut agent_pnl = vec![Vec::with_capacity(n_steps); config.agents.len()];
    let mut trade_log = Vec::new();
    let mut orders: Vec<Vec<Order>> = (0..n_tokens).map(|_| Vec::new()).collect();

    for step in 0..n_steps {
        for (t, token) in config.tokens.iter().enumerate() {
            let z: f64 = if token.latent_vol > 0.0 {
                fundamental_rngs[t].sample(StandardNormal)
            } else {
                0.0
            };
            let vol = token.latent_vol;
            let factor = ((token.fitness_drift - 0.5 * vol * vol) * dt + vol * dt.sqrt() * z).exp();
            if factor != 1.0 {
                venues[t].scale_mid(factor)?;
            }
            mids[t] = venues[t].mid();
        }

        for &a in &agent_sequence {
            match &config.agents[a] {
                AgentSpec::NoiseTrader { volume_scale } => {
                    let scale = volume_scale.sqrt();
                    for (t, rng) in noise_rngs[a].iter_mut().enumerate() {
                        let z: f64 = rng.sample(StandardNormal);
                        let qty = scale * z;
                        if qty != 0.0 {
                            orders[t].push(Order {
                                agent: a,
                                qty,
                                pref: None,
                            });
                        }
                    }
                }
                AgentSpec::KellyInvestor {
                    lambda,
                    lookback_steps,
                    rebalance_every,
                    min_fraction,
                    max_fraction,
                    ..
                } => {
                    if (step + 1) % rebalance_every != 0 {
                        continue;
                    }
                    let equity = agents[a].equity(&mids);
                    let sleeve = equity.max(0.0) / n_tokens as f64;
                    for t in 0..n_tokens {
                        let h = &history[t];
                        if h.len() < lookback_steps + 1 {
                            continue;
                        }
                        let window = &h[h.len() - lookback_steps - 1..];
                        let Ok(stats) = stats_from_log_returns(&log_returns(window), 1.0 / dt)
                        else {
                            continue;
                        };
                        let f = lambda * (stats.mu - config.riskless_rate)
                            / (stats.sigma * stats.sigma);
                        let f = f.clamp(*min_fraction, *max_fraction);
                        let target = f * sleeve / mids[t];
                        let qty = target - agents[a].holdings[t];
                        if qty.abs() > 1e-12 * target.abs().max(agents[a].holdings[t].abs()) {
                            orders[t].push(Order {
                                agent: a,
                                qty,
                                pref: None,
                            });
                        }
                    }
                }
                AgentSpec::Manipulator {
                    cycle_q,
                    high_window_pref,
                    low_window_pref,
                    token,
                    ..
                } => {
                    let t = config.manipulator_token(token.as_deref())?;
                    orders[t].push(Order {
                        agent: a,
                        qty: *cycle_q,
                        pref: Some(*high_window_pref),
                    });
                    orders[t].push(Order {
                        agent: a,
                        qty: -*cycle_q,
                        pref: Some(*low_window_pref),
                    });
                }
            }
        }

        for t in 0..n_tokens {
            for order in orders[t].drain(..) {
                let side = if order.qty > 0.0 {
                    Side::Buy
                } else {
                    Side::Sell
                };
                let (size, fill) = match &mut venues[t] {
                    VenueState::Cex(m) => {
                        let size = order.qty.abs();
                        let impact = m.impact_with_pref(size, order.pref.unwrap_or(m.c_pref))?;
                        // batch fill against the opening mid, mid[t] still holds it
                        let fill = mids[t] * (1.0 + side.sign() * impact / 2.0);
                        if !(fill > 0.0) {
                            return Err(Error::domain(format!(
                                "step {step}: sell of {size} exhausts the book of {}",
                                config.tokens[t].symbol
                            )));
                        }
                        m.p_mid += mids[t] * phi * side.sign() * impact;
                        (size, fill)
                    }
                    VenueState::Dex(pool) => match side {
                        Side::Buy => {
                            let pay = pool.quote_in_for_base_out(order.qty)?;
                            let (next, got) = pool.reversed().execute(pay)?;
                            *pool = next.reversed();
                            (got, pay / got)
                        }
                        Side::Sell => {
                            let size = -order.qty;
                            let (next, got) = pool.execute(size)?;
                            *pool = next;
                            (size, got / size)
                        }
                    },
                };
                let agent = &mut agents[order.agent];
                agent.holdings[t] += side.sign() * size;
                agent.cash -= side.sign() * size * fill;
                trade_log.push(Trade {
                    step,
                    agent: order.agent,
                    token: t,
                    side,
                    size,
                    fill_price: fill,
                });
            }
            let mid = venues[t].mid();
            if !(mid > 0.0 && mid.is_finite()) {
                return Err(Error::domain(format!(
                    "step {step}: price of {} left the positive reals",
                    config.tokens[t].symbol
                )));
            }
            mids[t] = mid;
        }

        for (t, token) in config.tokens.iter().enumerate() {
            history[t].push(mids[t]);
            price_paths[t].push(mids[t]);
            cap_paths[t].push(mids[t] * token.initial_supply);
        }
        for (a, state) in agents.iter().enumerate() {
            agent_pnl[a].push(state.equity(&mids) - state.initial_equity);
        }
    }

    let mut result = SimResult {
        symbols: config.tokens.iter().map(|t| t.symbol.clone()).collect(),
        agent_labels: config.agent_labels(),
        price_paths,
        cap_paths,
        agent_pnl,
        trade_log,
        final_snapshot: RankSizeSample::new(vec![1.0])?,
    };
    result.final_snapshot = rank_size_snapshot(&result, n_steps - 1)?;
    Ok(result)
}

/// Mark-to-market gain, round-trip cost and their difference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CyclePnl {
    pub mark_to_market_gain: f64,
    pub cyclic_trading_cost: f64,
    pub net: f64,
}

fn check_cycle_inputs(
    model: &SqrtImpactModel,
    w: f64,
    q: f64,
    c_h: f64,
    c_l: f64,
    phi: f64,
) -> Result<()> {
    model.validate()?;
    if !(w.is_finite() && w >= 0.0) {
        return Err(Error::domain("inventory must be non-negative"));
    }
    if !(q.is_finite() && q > 0.0) {
        return Err(Error::domain("cycle size must be positive"));
    }
    if !(c_l > 0.0 && c_h >= c_l && c_h.is_finite()) {
        return Err(Error::domain("need c_h >= c_l > 0"));
    }
    if !(0.0..=1.0).contains(&phi) {
        return Err(Error::domain("phi must lie in [0, 1]"));
    }
    Ok(())
}

/// Closed-form P&L of the buy-high-impact / sell-low-impact cycle, linearised
/// at the model's mid price.
///
/// Per cycle the mid drifts by `phi (c_h - c_l) sigma sqrt(q/V) p`, which
/// the inventory `w` marks to market, while the round trip pays
/// `q p (c_h + c_l)/2 sigma sqrt(q/V)` in half-impact fills.
pub fn manipulator_cycle_pnl_oracle(
    model: &SqrtImpactModel,
    w: f64,
    q: f64,
    c_h: f64,
    c_l: f64,
    phi: f64,
    n_cycles: usize,
) -> Result<CyclePnl> {
    check_cycle_inputs(model, w, q, c_h, c_l, phi)?;
    let unit = model.sigma * (q / model.v_daily).sqrt() * model.p_mid;
    let drift = phi * (c_h - c_l) * unit;
    let n = n_cycles as f64;
    let gain = w * drift * n;
    let cost = q * 0.5 * (c_h + c_l) * unit * n;
    Ok(CyclePnl {
        mark_to_market_gain: gain,
        cyclic_trading_cost: cost,
        net: gain - cost,
    })
}

/// Inventory above which the cycle's mark-to-market gain outweighs its cost:
/// `q (c_h + c_l) / (2 phi (c_h - c_l))`.
pub fn manipulator_threshold_inventory(q: f64, c_h: f64, c_l: f64, phi: f64) -> Result<f64> {
    if !(phi > 0.0 && c_h > c_l) {
        return Err(Error::domain(
            "no finite threshold without permanent impact and an impact differential",
        ));
    }
    Ok(q * (c_h + c_l) / (2.0 * phi * (c_h - c_l)))
}

/// Simulated cycle P&L next to the closed-form oracle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ManipulatorComparison {
    pub n_cycles: usize,
    pub inventory_w: f64,
    pub threshold_w: Option<f64>,
    pub simulated: CyclePnl,
    pub oracle: CyclePnl,
    /// `|simulated.net - oracle.net| / |oracle.net|`.
    pub rel_err_net: f64,
}

/// Index of the manipulator when `config` qualifies as an isolated
/// manipulation experiment.
pub fn manipulator_experiment_agent(config: &SimConfig) -> Result<usize> {
    let manipulators: Vec<usize> = config
        .agents
        .iter()
        .enumerate()
        .filter(|(_, a)| a.kind() == AgentKind::Manipulator)
        .map(|(i, _)| i)
        .collect();
    check(manipulators.len() == 1, || {
        format!(
            "experiment needs exactly one manipulator, found {}",
            manipulators.len()
        )
    })?;
    for a in &config.agents {
        match a {
            AgentSpec::NoiseTrader { volume_scale } => check(*volume_scale == 0.0, || {
                "experiment requires noise volume 0".into()
            })?,
            AgentSpec::KellyInvestor { .. } => {
                return Err(Error::config("experiment allows no Kelly investors"))
            }
            AgentSpec::Manipulator { .. } => {}
        }
    }
    for t in &config.tokens {
        check(t.latent_vol == 0.0 && t.fitness_drift == 0.0, || {
            format!("experiment requires a static fundamental for {}", t.symbol)
        })?;
    }
    Ok(manipulators[0])
}

/// Runs the manipulation experiment, one cycle per step, and compares the
/// manipulator's P&L against [`manipulator_cycle_pnl_oracle`].
pub fn run_manipulator_experiment(config: &SimConfig) -> Result<ManipulatorComparison> {
    let agent = manipulator_experiment_agent(config)?;
    let venue_of = config.venue_index()?;
    let AgentSpec::Manipulator {
        inventory_w,
        cycle_q,
        high_window_pref,
        low_window_pref,
        token,
    } = &config.agents[agent]
    else {
        unreachable!("manipulator_experiment_agent returns a manipulator");
    };
    let t = config.manipulator_token(token.as_deref())?;
    let VenueModel::Cex(model) = config.venues[venue_of[t]].model else {
        return Err(Error::config("manipulator needs an order-book venue"));
    };

    let result = run_sim(config)?;
    let p0 = config.tokens[t].initial_price;
    let p_end = result.price_paths[t][config.n_steps - 1];
    let net = result.agent_pnl[agent][config.n_steps - 1];
    let gain = inventory_w * (p_end - p0);
    let simulated = CyclePnl {
        mark_to_market_gain: gain,
        cyclic_trading_cost: gain - net,
        net,
    };
    let oracle = manipulator_cycle_pnl_oracle(
        &model,
        *inventory_w,
        *cycle_q,
        *high_window_pref,
        *low_window_pref,
        config.permanent_impact_phi,
        config.n_steps,
    )?;
    Ok(ManipulatorComparison {
        n_cycles: config.n_steps,
        inventory_w: *inventory_w,
        threshold_w: manipulator_threshold_inventory(
            *cycle_q,
            *high_window_pref,
            *low_window_pref,
            config.permanent_impact_phi,
        )
        .ok(),
        simulated,
        oracle,
        rel_err_net: (simulated.net - oracle.net).abs() / oracle.net.abs(),
    })
}
