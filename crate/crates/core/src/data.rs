//! File formats.
//!
//! CSV inputs are UTF-8, comma separated, with a mandatory header and
//! timestamps in UTC epoch seconds:
//!
//! * rank-size snapshots: `rank,symbol,value_usd,as_of`
//! * price series: `ts,price`
//! * TVL: `chain,provider,tvl_usd,as_of`
//!
//! Outputs use LF line endings and shortest round-trip formatting for reals.
//! A simulation result is a directory holding `prices.csv`, `caps.csv`,
//! `pnl.csv`, `trades.csv` and `manifest.json`.

use std::collections::{BTreeMap, HashSet};
use std::fs::{self, File};
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kelly::PriceSeries;
use crate::powerlaw::RankSizeSample;
use crate::sim::{rank_size_snapshot, Side, SimConfig, SimResult, Trade};

pub const RANK_SIZE_HEADER: [&str; 4] = ["rank", "symbol", "value_usd", "as_of"];
pub const PRICE_SERIES_HEADER: [&str; 2] = ["ts", "price"];
pub const TVL_HEADER: [&str; 4] = ["chain", "provider", "tvl_usd", "as_of"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotRecord {
    pub rank: u64,
    pub symbol: String,
    pub value_usd: f64,
    pub as_of: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TvlRecord {
    pub chain: String,
    pub provider: String,
    pub tvl_usd: f64,
    pub as_of: i64,
}

/// Row accounting for a load: every input row is either valid or aborts the
/// load with an error; `warnings` counts valid rows that were flagged.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadReport {
    pub rows: usize,
    pub warnings: usize,
    pub messages: Vec<String>,
}

/// Formats a real so that parsing it back yields the same bits.
pub fn fmt_real(v: f64) -> String {
    format!("{v:?}")
}

struct Rows<R: Read> {
    reader: csv::Reader<R>,
}

impl<R: Read> Rows<R> {
    fn open(input: R, header: &[&str]) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .from_reader(input);
        let found = reader.headers().map_err(|e| parse_err(1, e))?.clone();
        let found: Vec<&str> = found.iter().map(str::trim).collect();
        if found.is_empty() || (found.len() == 1 && found[0].is_empty()) {
            return Err(Error::insufficient("empty file, header missing"));
        }
        if found != header {
            return Err(Error::Parse {
                line: 1,
                msg: format!(
                    "expected header `{}`, found `{}`",
                    header.join(","),
                    found.join(",")
                ),
            });
        }
        Ok(Self { reader })
    }

    fn for_each(
        mut self,
        width: usize,
        mut f: impl FnMut(u64, &csv::StringRecord) -> Result<()>,
    ) -> Result<usize> {
        let mut count = 0;
        let mut record = csv::StringRecord::new();
        loop {
            let more = self.reader.read_record(&mut record).map_err(|e| {
                let line = e.position().map_or(0, |p| p.line());
                parse_err(line, e)
            })?;
            if !more {
                break;
            }
            let line = record.position().map_or(0, |p| p.line());
            if record.len() != width {
                return Err(Error::Parse {
                    line,
                    msg: format!("expected {width} fields, found {}", record.len()),
                });
            }
            f(line, &record)?;
            count += 1;
        }
        Ok(count)
    }
}

fn parse_err(line: u64, e: impl std::fmt::Display) -> Error {
    Error::Parse {
        line,
        msg: e.to_string(),
    }
}

fn field<T: std::str::FromStr>(
    rec: &csv::StringRecord,
    i: usize,
    name: &str,
    line: u64,
) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    let raw = rec.get(i).unwrap_or("").trim();
    raw.parse::<T>().map_err(|e| Error::Parse {
        line,
        msg: format!("{name} `{raw}`: {e}"),
    })
}

fn positive(v: f64, name: &str, line: u64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::validation(
            Some(line),
            format!("{name} must be finite and positive, got {v}"),
        ))
    }
}

fn non_empty(s: &str, name: &str, line: u64) -> Result<String> {
    let s = s.trim();
    if s.is_empty() {
        Err(Error::validation(
            Some(line),
            format!("{name} must be non-empty"),
        ))
    } else {
        Ok(s.to_string())
    }
}

/// Reads rank-size rows. Ranks must be positive and unique per `as_of`.
pub fn load_snapshot_records<R: Read>(input: R) -> Result<Vec<SnapshotRecord>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    Rows::open(input, &RANK_SIZE_HEADER)?.for_each(4, |line, rec| {
        let rank: u64 = field(rec, 0, "rank", line)?;
        if rank == 0 {
            return Err(Error::validation(
                Some(line),
                "rank must be a positive integer",
            ));
        }
        let symbol = non_empty(&rec[1], "symbol", line)?;
        let value_usd = positive(field(rec, 2, "value_usd", line)?, "value_usd", line)?;
        let as_of: i64 = field(rec, 3, "as_of", line)?;
        if !seen.insert((as_of, rank)) {
            return Err(Error::validation(
                Some(line),
                format!("duplicate rank {rank}"),
            ));
        }
        out.push(SnapshotRecord {
            rank,
            symbol,
            value_usd,
            as_of,
        });
        Ok(())
    })?;
    Ok(out)
}

/// Builds a sample from records, counting rows whose stated rank differs
/// from their position once sorted by value.
pub fn sample_from_records(records: &[SnapshotRecord]) -> Result<(RankSizeSample, LoadReport)> {
    if records.is_empty() {
        return Err(Error::insufficient("no rank-size rows"));
    }
    let sample = RankSizeSample::with_labels(
        records.iter().map(|r| r.value_usd).collect(),
        records.iter().map(|r| r.symbol.clone()).collect(),
    )?;
    let mut by_value: Vec<&SnapshotRecord> = records.iter().collect();
    by_value.sort_by(|a, b| b.value_usd.total_cmp(&a.value_usd));
    let mut stated: Vec<u64> = records.iter().map(|r| r.rank).collect();
    stated.sort_unstable();
    let mut report = LoadReport {
        rows: records.len(),
        ..LoadReport::default()
    };
    for (pos, rec) in by_value.iter().enumerate() {
        if rec.rank != stated[pos] {
            report.warnings += 1;
            report.messages.push(format!(
                "{} stated rank {} but ranks {} by value",
                rec.symbol, rec.rank, stated[pos]
            ));
        }
    }
    let as_of = records.iter().map(|r| r.as_of).max().unwrap();
    Ok((sample.with_as_of(as_of), report))
}

/// Loads a single rank-size snapshot, sorted by value.
pub fn load_rank_size_csv<R: Read>(input: R) -> Result<(RankSizeSample, LoadReport)> {
    sample_from_records(&load_snapshot_records(input)?)
}

pub fn load_rank_size_path(path: impl AsRef<Path>) -> Result<(RankSizeSample, LoadReport)> {
    load_rank_size_csv(File::open(path)?)
}

/// Groups records into one sample per `as_of`, in time order.
pub fn snapshot_periods(records: &[SnapshotRecord]) -> Result<Vec<(i64, RankSizeSample)>> {
    let mut groups: BTreeMap<i64, Vec<SnapshotRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(r.as_of).or_default().push(r.clone());
    }
    groups
        .into_iter()
        .map(|(as_of, recs)| sample_from_records(&recs).map(|(s, _)| (as_of, s)))
        .collect()
}

pub fn write_rank_size_csv<W: Write>(sample: &RankSizeSample, as_of: i64, out: W) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record(RANK_SIZE_HEADER).map_err(csv_io)?;
    for (i, v) in sample.values().iter().enumerate() {
        let symbol = sample
            .labels()
            .map_or_else(|| format!("T{}", i + 1), |l| l[i].clone());
        w.write_record([(i + 1).to_string(), symbol, fmt_real(*v), as_of.to_string()])
            .map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_price_series_csv<R: Read>(input: R) -> Result<PriceSeries> {
    let mut ts = Vec::new();
    let mut prices: Vec<f64> = Vec::new();
    Rows::open(input, &PRICE_SERIES_HEADER)?.for_each(2, |line, rec| {
        let t: i64 = field(rec, 0, "ts", line)?;
        let p = positive(field(rec, 1, "price", line)?, "price", line)?;
        if let Some(&prev) = ts.last() {
            if t <= prev {
                return Err(Error::validation(
                    Some(line),
                    format!("timestamp {t} does not increase on {prev}"),
                ));
            }
        }
        ts.push(t);
        prices.push(p);
        Ok(())
    })?;
    if prices.len() < 2 {
        return Err(Error::insufficient(format!(
            "{} price rows, need at least 2",
            prices.len()
        )));
    }
    PriceSeries::new(ts, prices)
}

pub fn load_price_series_path(path: impl AsRef<Path>) -> Result<PriceSeries> {
    load_price_series_csv(File::open(path)?)
}

pub fn write_price_series_csv<W: Write>(series: &PriceSeries, out: W) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record(PRICE_SERIES_HEADER).map_err(csv_io)?;
    for (t, p) in series.timestamps().iter().zip(series.prices()) {
        w.write_record([t.to_string(), fmt_real(*p)])
            .map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_tvl_csv<R: Read>(input: R) -> Result<Vec<TvlRecord>> {
    let mut out = Vec::new();
    Rows::open(input, &TVL_HEADER)?.for_each(4, |line, rec| {
        out.push(TvlRecord {
            chain: non_empty(&rec[0], "chain", line)?,
            provider: rec[1].trim().to_string(),
            tvl_usd: positive(field(rec, 2, "tvl_usd", line)?, "tvl_usd", line)?,
            as_of: field(rec, 3, "as_of", line)?,
        });
        Ok(())
    })?;
    Ok(out)
}

/// Total value locked per chain at the latest `as_of`, as a rank-size sample.
pub fn tvl_rank_size(records: &[TvlRecord]) -> Result<RankSizeSample> {
    let latest = records
        .iter()
        .map(|r| r.as_of)
        .max()
        .ok_or_else(|| Error::insufficient("no TVL rows"))?;
    let mut by_chain: BTreeMap<&str, f64> = BTreeMap::new();
    for r in records.iter().filter(|r| r.as_of == latest) {
        *by_chain.entry(&r.chain).or_default() += r.tvl_usd;
    }
    let (labels, values): (Vec<String>, Vec<f64>) = by_chain
        .into_iter()
        .map(|(c, v)| (c.to_string(), v))
        .unzip();
    Ok(RankSizeSample::with_labels(values, labels)?.with_as_of(latest))
}

pub fn load_sim_config(path: impl AsRef<Path>) -> Result<SimConfig> {
    let config: SimConfig = read_json(path)?;
    config.validate()?;
    Ok(config)
}

/// Writes any serializable record as pretty JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(value: &T, path: impl AsRef<Path>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

fn csv_writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out)
}

fn csv_io(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

pub const RESULT_FILES: [&str; 5] = [
    "prices.csv",
    "caps.csv",
    "pnl.csv",
    "trades.csv",
    "manifest.json",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    pub n_steps: usize,
    pub symbols: Vec<String>,
    pub agents: Vec<String>,
    pub files: Vec<String>,
    pub config: SimConfig,
}

fn write_paths(path: &Path, columns: &[String], paths: &[Vec<f64>], n_steps: usize) -> Result<()> {
    let mut w = csv_writer(BufWriter::new(File::create(path)?));
    let mut header = vec!["step".to_string()];
    header.extend(columns.iter().cloned());
    w.write_record(&header).map_err(csv_io)?;
    let mut row = Vec::with_capacity(columns.len() + 1);
    for step in 0..n_steps {
        row.clear();
        row.push(step.to_string());
        row.extend(paths.iter().map(|p| fmt_real(p[step])));
        w.write_record(&row).map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes a simulation result directory, creating it if needed.
pub fn write_sim_result(
    result: &SimResult,
    config: &SimConfig,
    dir: impl AsRef<Path>,
) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let n = result.n_steps();
    write_paths(
        &dir.join("prices.csv"),
        &result.symbols,
        &result.price_paths,
        n,
    )?;
    write_paths(&dir.join("caps.csv"), &result.symbols, &result.cap_paths, n)?;
    write_paths(
        &dir.join("pnl.csv"),
        &result.agent_labels,
        &result.agent_pnl,
        n,
    )?;

    let mut w = csv_writer(BufWriter::new(File::create(dir.join("trades.csv"))?));
    w.write_record(["step", "agent", "token", "side", "size", "fill_price"])
        .map_err(csv_io)?;
    for t in &result.trade_log {
        w.write_record([
            t.step.to_string(),
            result.agent_labels[t.agent].clone(),
            result.symbols[t.token].clone(),
            t.side.as_str().to_string(),
            fmt_real(t.size),
            fmt_real(t.fill_price),
        ])
        .map_err(csv_io)?;
    }
    w.flush()?;

    let manifest = Manifest {
        seed: config.seed,
        n_steps: n,
        symbols: result.symbols.clone(),
        agents: result.agent_labels.clone(),
        files: RESULT_FILES.iter().map(|s| s.to_string()).collect(),
        config: config.clone(),
    };
    write_json(&manifest, dir.join("manifest.json"))
}

fn read_paths(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut reader = csv::Reader::from_reader(File::open(path)?);
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| parse_err(1, e))?
        .iter()
        .skip(1)
        .map(String::from)
        .collect();
    let mut paths = vec![Vec::new(); header.len()];
    for rec in reader.records() {
        let rec = rec.map_err(|e| parse_err(e.position().map_or(0, |p| p.line()), e))?;
        let line = rec.position().map_or(0, |p| p.line());
        for (i, path) in paths.iter_mut().enumerate() {
            path.push(field(&rec, i + 1, "value", line)?);
        }
    }
    Ok((header, paths))
}

/// Reads back a directory written by [`write_sim_result`].
pub fn read_sim_result(dir: impl AsRef<Path>) -> Result<SimResult> {
    let dir = dir.as_ref();
    let (symbols, price_paths) = read_paths(&dir.join("prices.csv"))?;
    let (_, cap_paths) = read_paths(&dir.join("caps.csv"))?;
    let (agent_labels, agent_pnl) = read_paths(&dir.join("pnl.csv"))?;
    let mut trade_log = Vec::new();
    let mut reader = csv::Reader::from_reader(File::open(dir.join("trades.csv"))?);
    for rec in reader.records() {
        let rec = rec.map_err(|e| parse_err(e.position().map_or(0, |p| p.line()), e))?;
        let line = rec.position().map_or(0, |p| p.line());
        let lookup = |names: &[String], v: &str| {
            names
                .iter()
                .position(|n| n == v)
                .ok_or_else(|| Error::Parse {
                    line,
                    msg: format!("unknown name {v}"),
                })
        };
        let side = match &rec[3] {
            "buy" => Side::Buy,
            "sell" => Side::Sell,
            other => {
                return Err(Error::Parse {
                    line,
                    msg: format!("unknown side {other}"),
                })
            }
        };
        trade_log.push(Trade {
            step: field(&rec, 0, "step", line)?,
            agent: lookup(&agent_labels, &rec[1])?,
            token: lookup(&symbols, &rec[2])?,
            side,
            size: field(&rec, 4, "size", line)?,
            fill_price: field(&rec, 5, "fill_price", line)?,
        });
    }
    let mut result = SimResult {
        symbols,
        agent_labels,
        price_paths,
        cap_paths,
        agent_pnl,
        trade_log,
        final_snapshot: RankSizeSample::new(vec![1.0])?,
    };
    let last = result
        .n_steps()
        .checked_sub(1)
        .ok_or_else(|| Error::insufficient("result has no steps"))?;
    result.final_snapshot = rank_size_snapshot(&result, last)?;
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loads_three_row_snapshot() {
        let csv = "rank,symbol,value_usd,as_of\n1,BTC,1000,1700000000\n2,ETH,500,1700000000\n3,SOL,100,1700000000\n";
        let (s, report) = load_rank_size_csv(csv.as_bytes()).unwrap();
        assert_eq!(s.values(), &[1000.0, 500.0, 100.0]);
        assert_eq!(report.rows, 3);
        assert_eq!(report.warnings, 0);
        assert_eq!(s.as_of(), Some(1_700_000_000));
    }

    #[test]
    fn negative_value_is_a_validation_error_at_its_line() {
        let csv = "rank,symbol,value_usd,as_of\n1,BTC,1000,0\n2,ETH,-5,0\n";
        match load_rank_size_csv(csv.as_bytes()) {
            Err(Error::Validation { line: Some(3), .. }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn nan_and_inf_rejected() {
        for bad in ["NaN", "inf", "0"] {
            let csv = format!("rank,symbol,value_usd,as_of\n1,BTC,{bad},0\n");
            assert!(load_rank_size_csv(csv.as_bytes()).is_err(), "{bad}");
        }
    }

    #[test]
    fn malformed_row_reports_line() {
        let csv = "rank,symbol,value_usd,as_of\n1,BTC,1000,0\nx,ETH,10,0\n";
        match load_rank_size_csv(csv.as_bytes()) {
            Err(Error::Parse { line: 3, .. }) => {}
            other => panic!("{other:?}"),
        }
        let short = "rank,symbol,value_usd,as_of\n1,BTC,1000\n";
        assert!(matches!(
            load_rank_size_csv(short.as_bytes()),
            Err(Error::Parse { line: 2, .. })
        ));
        let header = "rank,sym,value,as_of\n1,BTC,1000,0\n";
        assert!(matches!(
            load_rank_size_csv(header.as_bytes()),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn displaced_ranks_counted_as_warnings() {
        // stated ranks put C first and A last; by value the order is A, B, C, D
        let csv = "rank,symbol,value_usd,as_of\n4,A,400,0\n2,B,300,0\n1,C,200,0\n3,D,100,0\n";
        let (s, report) = load_rank_size_csv(csv.as_bytes()).unwrap();
        assert_eq!(s.labels().unwrap(), &["A", "B", "C", "D"]);
        // A (4 vs 1), C (1 vs 3), D (3 vs 4) are displaced; B keeps rank 2
        assert_eq!(report.warnings, 3);
        assert_eq!(report.rows, 4);
    }

    #[test]
    fn duplicate_rank_rejected() {
        let csv = "rank,symbol,value_usd,as_of\n1,A,4,0\n1,B,3,0\n";
        assert!(matches!(
            load_rank_size_csv(csv.as_bytes()),
            Err(Error::Validation { .. })
        ));
    }

    #[test]
    fn periods_group_by_as_of() {
        let csv = "rank,symbol,value_usd,as_of\n1,A,4,20\n1,A,5,10\n2,B,3,10\n";
        let periods = snapshot_periods(&load_snapshot_records(csv.as_bytes()).unwrap()).unwrap();
        assert_eq!(periods.len(), 2);
        assert_eq!(periods[0].0, 10);
        assert_eq!(periods[0].1.values(), &[5.0, 3.0]);
    }

    #[test]
    fn price_series_fixtures() {
        let ok = "ts,price\n1,10\n2,11\n3,10.5\n4,12\n5,11.9\n";
        assert_eq!(load_price_series_csv(ok.as_bytes()).unwrap().len(), 5);
        let dup = "ts,price\n1,10\n2,11\n2,10.5\n";
        assert!(matches!(
            load_price_series_csv(dup.as_bytes()),
            Err(Error::Validation { line: Some(4), .. })
        ));
        let neg = "ts,price\n1,10\n2,-1\n";
        assert!(matches!(
            load_price_series_csv(neg.as_bytes()),
            Err(Error::Validation { .. })
        ));
        assert!(matches!(
            load_price_series_csv("".as_bytes()),
            Err(Error::InsufficientData(_))
        ));
        assert!(matches!(
            load_price_series_csv("ts,price\n".as_bytes()),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn tvl_aggregates_latest_by_chain() {
        let csv = "chain,provider,tvl_usd,as_of\nEthereum,a,100,5\nEthereum,b,50,5\nSolana,a,30,5\nEthereum,a,1,4\n";
        let recs = load_tvl_csv(csv.as_bytes()).unwrap();
        assert_eq!(recs.len(), 4);
        let s = tvl_rank_size(&recs).unwrap();
        assert_eq!(s.values(), &[150.0, 30.0]);
        assert_eq!(s.labels().unwrap(), &["Ethereum", "Solana"]);
        let bad = "chain,provider,tvl_usd,as_of\n,a,100,5\n";
        assert!(load_tvl_csv(bad.as_bytes()).is_err());
    }

    #[test]
    fn rank_size_csv_round_trip() {
        let s = RankSizeSample::with_labels(
            vec![0.1 + 0.2, 1e-300, 12345.678901234567],
            vec!["a".into(), "b,c".into(), "d".into()],
        )
        .unwrap();
        let mut buf = Vec::new();
        write_rank_size_csv(&s, 7, &mut buf).unwrap();
        let (back, report) = load_rank_size_csv(buf.as_slice()).unwrap();
        assert_eq!(report.warnings, 0);
        assert_eq!(back.values(), s.values());
        assert_eq!(back.labels(), s.labels());
    }

    #[test]
    fn unwritable_path_is_io_error() {
        let fit = crate::powerlaw::PowerLawFit {
            alpha_rank: 1.0,
            k_scale: 1.0,
            alpha_tail: 2.0,
            xmin: 1.0,
            n_tail: 2,
            ks_stat: 0.1,
            stderr_tail: 0.1,
        };
        let err = write_json(&fit, "/nonexistent-dir/for/sure/fit.json").unwrap_err();
        assert!(matches!(err, Error::Io(_)));
    }
}
