//! Command-line front end. [`run`] parses arguments and returns the exit
//! code together with the stdout payload and stderr diagnostics, so commands
//! can be exercised without spawning a process.
//!
//! Exit codes: 0 success, 1 domain or validation error, 2 usage error.

use std::ffi::OsString;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::Value;

use tokenscale::data::{self, LoadReport};
use tokenscale::impact::{
    cycle_spot_product, geometric_grid, impact_exponent_probe, triangle_path, triangle_roundtrip,
    ProbeResult,
};
use tokenscale::kelly::{
    drift_confidence_horizon, estimate_cov, estimate_stats, growth_horizon, kelly_multi,
    kelly_single,
};
use tokenscale::powerlaw::{
    self, bootstrap_alpha_sigma, dimension_from_exponent, fit_binned_series, fit_rank_size,
    fit_rank_size_ls, fit_rank_size_with_xmin, total_cap_partial_sums, Bootstrap, PartialSum,
};
use tokenscale::sim::{manipulator_experiment_agent, run_manipulator_experiment, run_sim};
use tokenscale::{synth, CovStats, Error, PowerLawFit, ReturnStats, SimConfig, Venue, VenueModel};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Result of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandOutcome {
    pub exit_code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl CommandOutcome {
    fn ok(stdout: String, stderr: String) -> Self {
        Self {
            exit_code: EXIT_OK,
            stdout,
            stderr,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "tokenscale",
    version,
    about = "Scaling laws, price impact and Kelly sizing for crypto markets"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit a rank-size power law to a snapshot CSV.
    Fit(FitArgs),
    /// Run a seeded market simulation and write its result directory.
    Simulate(SimulateArgs),
    /// Measure the impact-vs-size exponent of a venue.
    Probe(ProbeArgs),
    /// Kelly fractions from parameters, price files or a covariance JSON.
    Kelly(KellyArgs),
    /// Years needed to pin down a drift, or to grow by a given factor.
    Horizon(HorizonArgs),
    /// Scan a three-venue round trip over trade sizes.
    Arb(ArbArgs),
    /// Print a seeded synthetic rank-size CSV.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
struct Format {
    /// JSON payload (default).
    #[arg(long, conflicts_with = "csv")]
    json: bool,
    /// CSV payload instead of JSON.
    #[arg(long)]
    csv: bool,
}

#[derive(Debug, Clone, Copy)]
enum Xmin {
    Auto,
    Value(f64),
}

fn parse_xmin(s: &str) -> Result<Xmin, String> {
    if s == "auto" {
        return Ok(Xmin::Auto);
    }
    let v: f64 = s
        .parse()
        .map_err(|_| format!("expected `auto` or a number, got `{s}`"))?;
    if v.is_finite() && v > 0.0 {
        Ok(Xmin::Value(v))
    } else {
        Err(format!("xmin must be positive, got {s}"))
    }
}

fn parse_positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v > 0.0 => Ok(v),
        _ => Err(format!("expected a positive number, got `{s}`")),
    }
}

#[derive(Debug, Args)]
struct FitArgs {
    /// Snapshot CSV with header `rank,symbol,value_usd,as_of`.
    #[arg(long)]
    input: PathBuf,
    /// Lower cutoff of the tail fit.
    #[arg(long, default_value = "auto", value_parser = parse_xmin)]
    xmin: Xmin,
    /// Bootstrap resamples for the exponent error.
    #[arg(long)]
    bootstrap: Option<usize>,
    /// Fit each `as_of` separately and pool the exponents.
    #[arg(long)]
    by_period: bool,
    /// Seed for the bootstrap.
    #[arg(long)]
    seed: Option<u64>,
    /// Terms in the partial sum of the implied total.
    #[arg(long, default_value_t = 1_000_000)]
    terms: u64,
    /// Write `ln_rank,ln_value` rows here.
    #[arg(long)]
    plot_data: Option<PathBuf>,
    #[command(flatten)]
    format: Format,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Simulation config JSON.
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    format: Format,
}

#[derive(Debug, Args)]
struct ProbeArgs {
    /// Venue JSON.
    #[arg(long)]
    venue: PathBuf,
    /// Smallest size as a fraction of depth (pool reserve or daily volume).
    #[arg(long, value_parser = parse_positive)]
    lo: Option<f64>,
    /// Largest size as a fraction of depth.
    #[arg(long, value_parser = parse_positive)]
    hi: Option<f64>,
    #[arg(long, default_value_t = 25)]
    points: usize,
    /// Write `ln_dx,ln_impact` rows here.
    #[arg(long)]
    plot_data: Option<PathBuf>,
    #[command(flatten)]
    format: Format,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("source").required(true).args(["mu", "prices", "stats"])))]
struct KellyArgs {
    /// Expected return per year.
    #[arg(long, requires = "sigma", allow_hyphen_values = true)]
    mu: Option<f64>,
    /// Volatility per sqrt(year).
    #[arg(long, requires = "mu", value_parser = parse_positive)]
    sigma: Option<f64>,
    /// Riskless rate per year.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    r: f64,
    /// Fraction of full Kelly.
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// Price CSV (`ts,price`); repeat for several assets.
    #[arg(long)]
    prices: Vec<PathBuf>,
    /// Observations per year in the price files.
    #[arg(long, default_value_t = 365.0, value_parser = parse_positive)]
    periods_per_year: f64,
    /// Covariance JSON (`dim`, `mu_vec`, row-major `cov`, `r`).
    #[arg(long)]
    stats: Option<PathBuf>,
    #[command(flatten)]
    format: Format,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("mode").required(true).args(["sigma", "total"])))]
struct HorizonArgs {
    /// Volatility per sqrt(year), for the drift-confidence horizon.
    #[arg(long, requires = "target_se", value_parser = parse_positive)]
    sigma: Option<f64>,
    /// Wanted standard error of the drift.
    #[arg(long, value_parser = parse_positive)]
    target_se: Option<f64>,
    /// Total growth factor, for the growth horizon.
    #[arg(long, requires_all = ["multiple", "period_years"], value_parser = parse_positive)]
    total: Option<f64>,
    /// Growth multiple per period.
    #[arg(long, value_parser = parse_positive)]
    multiple: Option<f64>,
    /// Period length in years.
    #[arg(long, value_parser = parse_positive)]
    period_years: Option<f64>,
    #[command(flatten)]
    format: Format,
}

#[derive(Debug, Args)]
struct ArbArgs {
    /// JSON array of three venues forming a cycle.
    #[arg(long)]
    venues: PathBuf,
    /// Smallest trade size.
    #[arg(long, default_value_t = 1e-2, value_parser = parse_positive)]
    lo: f64,
    /// Largest trade size.
    #[arg(long, default_value_t = 1e6, value_parser = parse_positive)]
    hi: f64,
    #[arg(long, default_value_t = 200)]
    points: usize,
    /// Write `dx,profit` rows here.
    #[arg(long)]
    plot_data: Option<PathBuf>,
    #[command(flatten)]
    format: Format,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 1000.0, value_parser = parse_positive)]
    k: f64,
    #[arg(long, default_value_t = 1.644, value_parser = parse_positive)]
    alpha: f64,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// Log-scale of the multiplicative noise.
    #[arg(long, default_value_t = 0.1)]
    noise: f64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    as_of: i64,
}

/// Failure inside a command: usage errors exit 2, library errors exit 1.
enum Failure {
    Usage(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

type CmdResult = Result<(String, String), Failure>;

/// Runs one invocation; `args` includes the program name.
pub fn run<I, T>(args: I) -> CommandOutcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    CommandOutcome::ok(text, String::new())
                }
                _ => CommandOutcome {
                    exit_code: EXIT_USAGE,
                    stdout: String::new(),
                    stderr: text,
                },
            };
        }
    };
    let result = match cli.command {
        Command::Fit(a) => cmd_fit(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Probe(a) => cmd_probe(a),
        Command::Kelly(a) => cmd_kelly(a),
        Command::Horizon(a) => cmd_horizon(a),
        Command::Arb(a) => cmd_arb(a),
        Command::Synth(a) => cmd_synth(a),
    };
    match result {
        Ok((stdout, stderr)) => CommandOutcome::ok(stdout, stderr),
        Err(Failure::Usage(msg)) => CommandOutcome {
            exit_code: EXIT_USAGE,
            stdout: String::new(),
            stderr: format!("error: {msg}\n"),
        },
        Err(Failure::Lib(e)) => CommandOutcome {
            exit_code: EXIT_FAILURE,
            stdout: String::new(),
            stderr: format!("error: {e}\n"),
        },
    }
}

fn json<T: Serialize>(value: &T) -> Result<String, Failure> {
    let mut s = serde_json::to_string_pretty(value).map_err(Error::from)?;
    s.push('\n');
    Ok(s)
}

fn scalar(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Flattens nested objects into dotted keys.
fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten(&key, v, out);
            }
        }
        Value::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                flatten(&format!("{prefix}.{i}"), v, out);
            }
        }
        other => out.push((prefix.to_string(), scalar(other))),
    }
}

fn csv_text(header: &[String], rows: &[Vec<String>]) -> Result<String, Failure> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let io = |e: csv::Error| Failure::Lib(Error::Io(std::io::Error::other(e.to_string())));
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(row).map_err(io)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Failure::Lib(Error::Io(e.into_error())))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// One-row CSV with a column per (flattened) field.
fn record_csv<T: Serialize>(value: &T) -> Result<String, Failure> {
    let v = serde_json::to_value(value).map_err(Error::from)?;
    let mut cells = Vec::new();
    flatten("", &v, &mut cells);
    let (header, row): (Vec<String>, Vec<String>) = cells.into_iter().unzip();
    csv_text(&header, &[row])
}

fn table_csv<T: Serialize>(rows: &[T]) -> Result<String, Failure> {
    let mut header = Vec::new();
    let mut body = Vec::new();
    for r in rows {
        let v = serde_json::to_value(r).map_err(Error::from)?;
        let mut cells = Vec::new();
        flatten("", &v, &mut cells);
        if header.is_empty() {
            header = cells.iter().map(|c| c.0.clone()).collect();
        }
        body.push(cells.into_iter().map(|c| c.1).collect());
    }
    csv_text(&header, &body)
}

fn write_plot(
    path: &Path,
    header: &[&str],
    rows: impl Iterator<Item = Vec<f64>>,
) -> Result<(), Failure> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(BufWriter::new(File::create(path).map_err(Error::from)?));
    let io = |e: csv::Error| Failure::Lib(Error::Io(std::io::Error::other(e.to_string())));
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(row.iter().map(|v| data::fmt_real(*v)))
            .map_err(io)?;
    }
    w.flush().map_err(Error::from)?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct FitReport {
    #[serde(flatten)]
    fit: PowerLawFit,
    /// `None` when `alpha_rank <= 1`.
    dimension: Option<f64>,
    converges: bool,
    partial_sum: PartialSum,
    partial_sum_terms: u64,
    ls_alpha_rank: f64,
    ls_r_squared: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    sigma_alpha_rank: Option<f64>,
    rows: usize,
    warnings: usize,
}

fn load_warnings(report: &LoadReport) -> String {
    report
        .messages
        .iter()
        .map(|m| format!("warning: {m}\n"))
        .collect()
}

fn cmd_fit(a: FitArgs) -> CmdResult {
    let seed = a.seed.unwrap_or(powerlaw::DEFAULT_BOOTSTRAP_SEED);
    if a.by_period {
        let records = data::load_snapshot_records(File::open(&a.input).map_err(Error::from)?)?;
        let periods: Vec<(String, Vec<f64>)> = data::snapshot_periods(&records)?
            .into_iter()
            .map(|(as_of, s)| (as_of.to_string(), s.values().to_vec()))
            .collect();
        let boot = Bootstrap {
            resamples: a.bootstrap.unwrap_or(powerlaw::DEFAULT_RESAMPLES),
            seed,
        };
        let out = fit_binned_series(&periods, boot)?;
        let stderr: String = out
            .skipped
            .iter()
            .map(|s| format!("warning: period {} skipped: {}\n", s.label, s.reason))
            .collect();
        let stdout = if a.format.csv {
            table_csv(&out.period_fits)?
        } else {
            json(&out)?
        };
        return Ok((stdout, stderr));
    }

    let (sample, report) = data::load_rank_size_path(&a.input)?;
    let fit = match a.xmin {
        Xmin::Auto => fit_rank_size(&sample)?,
        Xmin::Value(v) => fit_rank_size_with_xmin(&sample, v)?,
    };
    let ls = fit_rank_size_ls(&sample)?;
    let sigma_alpha_rank = match a.bootstrap {
        Some(n) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Some(bootstrap_alpha_sigma(sample.values(), n, &mut rng)?)
        }
        None => None,
    };
    let partial_sum = total_cap_partial_sums(&fit, a.terms);
    let out = FitReport {
        dimension: dimension_from_exponent(fit.alpha_rank).ok(),
        converges: partial_sum.converges,
        partial_sum,
        partial_sum_terms: a.terms,
        ls_alpha_rank: ls.alpha_rank,
        ls_r_squared: ls.r_squared,
        sigma_alpha_rank,
        rows: report.rows,
        warnings: report.warnings,
        fit,
    };
    if let Some(path) = &a.plot_data {
        let rows = sample
            .values()
            .iter()
            .enumerate()
            .map(|(i, v)| vec![((i + 1) as f64).ln(), v.ln()]);
        write_plot(path, &["ln_rank", "ln_value"], rows)?;
    }
    let stdout = if a.format.csv {
        record_csv(&out)?
    } else {
        json(&out)?
    };
    Ok((stdout, load_warnings(&report)))
}

#[derive(Debug, Serialize)]
struct FinalPrice {
    symbol: String,
    price: f64,
}

#[derive(Debug, Serialize)]
struct SimulateReport {
    manifest: String,
    seed: u64,
    n_steps: usize,
    n_trades: usize,
    final_prices: Vec<FinalPrice>,
    #[serde(skip_serializing_if = "Option::is_none")]
    manipulation: Option<tokenscale::sim::ManipulatorComparison>,
}

fn cmd_simulate(a: SimulateArgs) -> CmdResult {
    let mut config: SimConfig = data::load_sim_config(&a.config)?;
    if let Some(seed) = a.seed {
        config.seed = seed;
    }
    let result = run_sim(&config)?;
    data::write_sim_result(&result, &config, &a.out)?;
    let manipulation = match manipulator_experiment_agent(&config) {
        Ok(_) => Some(run_manipulator_experiment(&config)?),
        Err(_) => None,
    };
    let last = config.n_steps - 1;
    let out = SimulateReport {
        manifest: a.out.join("manifest.json").display().to_string(),
        seed: config.seed,
        n_steps: config.n_steps,
        n_trades: result.trade_log.len(),
        final_prices: result
            .symbols
            .iter()
            .zip(&result.price_paths)
            .map(|(s, p)| FinalPrice {
                symbol: s.clone(),
                price: p[last],
            })
            .collect(),
        manipulation,
    };
    let stdout = if a.format.csv {
        record_csv(&out)?
    } else {
        json(&out)?
    };
    Ok((stdout, String::new()))
}

#[derive(Debug, Serialize)]
struct ProbeReport {
    #[serde(flatten)]
    probe: ProbeResult,
    venue_type: &'static str,
    dx_lo: f64,
    dx_hi: f64,
    points: usize,
}

#[derive(Debug, Serialize)]
struct ProbePoint {
    dx: f64,
    impact: f64,
}

fn cmd_probe(a: ProbeArgs) -> CmdResult {
    let venue: Venue = data::read_json(&a.venue)?;
    venue.validate()?;
    let (depth, lo, hi, kind) = match &venue.model {
        VenueModel::Cex(m) => (m.v_daily, 1e-6, 1e-3, "cex"),
        VenueModel::Dex(p) => (p.x_reserve, 1e-4, 1e-2, "dex"),
    };
    let (lo, hi) = (a.lo.unwrap_or(lo), a.hi.unwrap_or(hi));
    if hi <= lo {
        return Err(Failure::Usage(format!("--hi {hi} must exceed --lo {lo}")));
    }
    let grid = geometric_grid(lo * depth, hi * depth, a.points)?;
    let probe = impact_exponent_probe(&venue, &grid)?;
    let points: Vec<ProbePoint> = grid
        .iter()
        .map(|&dx| {
            venue
                .impact_magnitude(dx)
                .map(|impact| ProbePoint { dx, impact })
        })
        .collect::<Result<_, _>>()?;
    if let Some(path) = &a.plot_data {
        write_plot(
            path,
            &["ln_dx", "ln_impact"],
            points.iter().map(|p| vec![p.dx.ln(), p.impact.ln()]),
        )?;
    }
    let stderr = if probe.saturated {
        "warning: pool impact reaches 50% on this grid, slope reflects curvature\n".to_string()
    } else {
        String::new()
    };
    let stdout = if a.format.csv {
        table_csv(&points)?
    } else {
        json(&ProbeReport {
            probe,
            venue_type: kind,
            dx_lo: grid[0],
            dx_hi: grid[grid.len() - 1],
            points: grid.len(),
        })?
    };
    Ok((stdout, stderr))
}

#[derive(Debug, Serialize)]
struct KellyReport {
    fractions: Vec<f64>,
    lambda: f64,
    r: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    stats: Option<ReturnStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cov: Option<CovStats>,
}

fn cmd_kelly(a: KellyArgs) -> CmdResult {
    let out = if let (Some(mu), Some(sigma)) = (a.mu, a.sigma) {
        let stats = ReturnStats::new(mu, sigma, a.r)?;
        KellyReport {
            fractions: vec![kelly_single(&stats, a.lambda)?],
            lambda: a.lambda,
            r: a.r,
            stats: None,
            cov: None,
        }
    } else if let Some(path) = &a.stats {
        let stats: CovStats = data::read_json(path)?;
        KellyReport {
            fractions: kelly_multi(&stats, a.lambda)?,
            lambda: a.lambda,
            r: stats.r(),
            stats: None,
            cov: Some(stats),
        }
    } else if a.prices.len() == 1 {
        let series = data::load_price_series_path(&a.prices[0])?;
        let stats = estimate_stats(&series, a.periods_per_year)?.with_rate(a.r);
        KellyReport {
            fractions: vec![kelly_single(&stats, a.lambda)?],
            lambda: a.lambda,
            r: a.r,
            stats: Some(stats),
            cov: None,
        }
    } else {
        let series = a
            .prices
            .iter()
            .map(data::load_price_series_path)
            .collect::<Result<Vec<_>, _>>()?;
        let cov = estimate_cov(&series, a.periods_per_year)?.with_rate(a.r);
        KellyReport {
            fractions: kelly_multi(&cov, a.lambda)?,
            lambda: a.lambda,
            r: a.r,
            stats: None,
            cov: Some(cov),
        }
    };
    let stdout = if a.format.csv {
        let rows: Vec<Vec<String>> = out
            .fractions
            .iter()
            .enumerate()
            .map(|(i, f)| vec![i.to_string(), data::fmt_real(*f)])
            .collect();
        csv_text(&["asset".into(), "fraction".into()], &rows)?
    } else {
        json(&out)?
    };
    Ok((stdout, String::new()))
}

#[derive(Debug, Serialize)]
struct HorizonReport {
    years: f64,
}

fn cmd_horizon(a: HorizonArgs) -> CmdResult {
    let years = match (a.sigma, a.target_se, a.total, a.multiple, a.period_years) {
        (Some(sigma), Some(se), None, _, _) => drift_confidence_horizon(sigma, se)?,
        (None, _, Some(total), Some(m), Some(p)) => growth_horizon(total, m, p)?,
        _ => {
            return Err(Failure::Usage(
                "give either --sigma/--target-se or --total/--multiple/--period-years".into(),
            ))
        }
    };
    let out = HorizonReport { years };
    let stdout = if a.format.csv {
        record_csv(&out)?
    } else {
        json(&out)?
    };
    Ok((stdout, String::new()))
}

#[derive(Debug, Serialize)]
struct ScanPoint {
    dx: f64,
    profit: f64,
}

#[derive(Debug, Serialize)]
struct ArbReport {
    path: [String; 4],
    spot_product: f64,
    best_dx: f64,
    best_profit: f64,
    profitable: bool,
    /// Profit rises strictly to its maximum and falls strictly after it.
    unimodal: bool,
    scan: Vec<ScanPoint>,
}

/// Strictly increasing up to the peak, strictly decreasing after it.
pub fn is_unimodal(values: &[f64]) -> bool {
    let Some(peak) = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
    else {
        return false;
    };
    values[..=peak].windows(2).all(|w| w[1] > w[0])
        && values[peak..].windows(2).all(|w| w[1] < w[0])
}

fn cmd_arb(a: ArbArgs) -> CmdResult {
    let venues: Vec<Venue> = data::read_json(&a.venues)?;
    let venues: [Venue; 3] = venues.try_into().map_err(|v: Vec<Venue>| {
        Error::Topology(format!("need exactly 3 venues, found {}", v.len()))
    })?;
    for v in &venues {
        v.validate()?;
    }
    if a.hi <= a.lo {
        return Err(Failure::Usage(format!(
            "--hi {} must exceed --lo {}",
            a.hi, a.lo
        )));
    }
    let path = triangle_path(&venues)?;
    let grid = geometric_grid(a.lo, a.hi, a.points)?;
    let scan: Vec<ScanPoint> = grid
        .iter()
        .map(|&dx| {
            triangle_roundtrip(&venues, dx).map(|rt| ScanPoint {
                dx,
                profit: rt.profit,
            })
        })
        .collect::<Result<_, _>>()?;
    let best = scan
        .iter()
        .max_by(|x, y| x.profit.total_cmp(&y.profit))
        .expect("grid is non-empty");
    let profits: Vec<f64> = scan.iter().map(|p| p.profit).collect();
    if let Some(p) = &a.plot_data {
        write_plot(
            p,
            &["dx", "profit"],
            scan.iter().map(|s| vec![s.dx, s.profit]),
        )?;
    }
    let out = ArbReport {
        path,
        spot_product: cycle_spot_product(&venues)?,
        best_dx: best.dx,
        best_profit: best.profit,
        profitable: best.profit > 0.0,
        unimodal: is_unimodal(&profits),
        scan,
    };
    let stdout = if a.format.csv {
        table_csv(&out.scan)?
    } else {
        json(&out)?
    };
    Ok((stdout, String::new()))
}

fn cmd_synth(a: SynthArgs) -> CmdResult {
    if !(a.noise.is_finite() && a.noise >= 0.0) {
        return Err(Failure::Usage("--noise must be non-negative".into()));
    }
    let sample = synth::noisy_rank_size(a.k, a.alpha, a.n, a.noise, a.seed)?;
    let mut buf = Vec::new();
    data::write_rank_size_csv(&sample, a.as_of, &mut buf)?;
    Ok((
        String::from_utf8(buf).expect("csv output is utf-8"),
        String::new(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn xmin_parser() {
        assert!(matches!(parse_xmin("auto"), Ok(Xmin::Auto)));
        assert!(matches!(parse_xmin("2.5"), Ok(Xmin::Value(v)) if v == 2.5));
        for bad in ["0", "-1", "nan", "inf", "x"] {
            assert!(parse_xmin(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn unimodal_shapes() {
        assert!(is_unimodal(&[1.0, 2.0, 3.0, 2.0]));
        assert!(is_unimodal(&[3.0, 2.0, 1.0]));
        assert!(!is_unimodal(&[1.0, 3.0, 2.0, 4.0]));
        assert!(!is_unimodal(&[1.0, 1.0, 0.0]));
        assert!(!is_unimodal(&[]));
    }

    #[test]
    fn nested_values_flatten_to_dotted_keys() {
        let v = serde_json::json!({"a": 1, "b": {"c": null, "d": [2, "x"]}});
        let mut out = Vec::new();
        flatten("", &v, &mut out);
        let keys: Vec<&str> = out.iter().map(|c| c.0.as_str()).collect();
        assert_eq!(keys, ["a", "b.c", "b.d.0", "b.d.1"]);
        assert_eq!(out[1].1, "");
        assert_eq!(out[3].1, "x");
    }

    #[test]
    fn usage_errors_exit_two() {
        let out = run(["tokenscale", "fit"]);
        assert_eq!(out.exit_code, EXIT_USAGE);
        assert!(out.stdout.is_empty());
        let out = run(["tokenscale", "kelly", "--mu", "0.1"]);
        assert_eq!(out.exit_code, EXIT_USAGE);
        let out = run(["tokenscale", "--help"]);
        assert_eq!(out.exit_code, EXIT_OK);
    }
}
