//! Option-chain, rate and close files; the VIX component filter; synthetic
//! panels from simulated Heston paths.
//!
//! File formats (ISO dates, decimal numbers, `#` comment lines ignored):
//!
//! ```text
//! chains: trade_date,expiry_date,flag,strike,bid,ask     flag ∈ {C, P}
//! rates:  date,maturity_days,rate                        continuously compounded
//! closes: date,close,dividend_yield
//! ```
//!
//! Parsers take text and never panic. Records failing validation are
//! returned as rejections with their line numbers; only a wrong header is a
//! hard error.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use chrono::NaiveDate;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::calibration::{DayChain, OptionQuote};
use crate::error::{Error, Result};
use crate::frft::{FrftConfig, GridPricer};
use crate::params::{MarketState, ModelParams, OptionKind, OptionSpec, DAYS_PER_YEAR};

pub const CHAINS_HEADER: [&str; 6] = ["trade_date", "expiry_date", "flag", "strike", "bid", "ask"];
pub const RATES_HEADER: [&str; 3] = ["date", "maturity_days", "rate"];
pub const CLOSES_HEADER: [&str; 3] = ["date", "close", "dividend_yield"];

/// A record that failed validation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rejection {
    pub line: usize,
    pub message: String,
}

/// Accepted records plus line diagnostics for the rest.
#[derive(Debug, Clone, PartialEq)]
pub struct Parsed<T> {
    pub records: Vec<T>,
    pub rejected: Vec<Rejection>,
}

impl<T> Parsed<T> {
    /// Number of data records read.
    pub fn total(&self) -> usize {
        self.records.len() + self.rejected.len()
    }

    /// Fails on the first rejection.
    pub fn strict(self, file: &str) -> Result<Vec<T>> {
        match self.rejected.into_iter().next() {
            Some(r) => Err(Error::Schema {
                file: file.to_string(),
                line: r.line,
                message: r.message,
            }),
            None => Ok(self.records),
        }
    }
}

/// One row of the chains file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawQuoteRecord {
    pub line: usize,
    pub trade_date: NaiveDate,
    pub expiry_date: NaiveDate,
    pub kind: OptionKind,
    pub strike: f64,
    pub bid: f64,
    pub ask: f64,
}

impl RawQuoteRecord {
    pub fn days_to_expiry(&self) -> i64 {
        (self.expiry_date - self.trade_date).num_days()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePoint {
    pub date: NaiveDate,
    pub maturity_days: i64,
    pub rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CloseRecord {
    pub date: NaiveDate,
    pub close: f64,
    pub dividend_yield: f64,
}

fn parse_table<T>(
    text: &str,
    file: &str,
    header: &[&str],
    mut row: impl FnMut(&csv::StringRecord) -> std::result::Result<T, String>,
) -> Result<Parsed<T>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let schema = |line: usize, message: String| Error::Schema {
        file: file.to_string(),
        line,
        message,
    };
    let found = reader.headers().map_err(|e| schema(1, e.to_string()))?.clone();
    if found.iter().ne(header.iter().copied()) {
        let line = found.position().map_or(1, |p| p.line() as usize);
        return Err(schema(line, format!("expected header `{}`, found `{}`", header.join(","), found.iter().collect::<Vec<_>>().join(","))));
    }
    let mut out = Parsed {
        records: Vec::new(),
        rejected: Vec::new(),
    };
    let mut record = csv::StringRecord::new();
    loop {
        let line = reader.position().line() as usize;
        match reader.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {
                let line = record.position().map_or(line, |p| p.line() as usize);
                if record.len() != header.len() {
                    out.rejected.push(Rejection {
                        line,
                        message: format!("expected {} fields, found {}", header.len(), record.len()),
                    });
                    continue;
                }
                match row(&record) {
                    Ok(r) => out.records.push(r),
                    Err(message) => out.rejected.push(Rejection { line, message }),
                }
            }
            Err(e) => {
                let line = e.position().map_or(line, |p| p.line() as usize);
                out.rejected.push(Rejection {
                    line,
                    message: e.to_string(),
                });
                // an I/O-level error does not advance the reader
                if !matches!(e.kind(), csv::ErrorKind::UnequalLengths { .. } | csv::ErrorKind::Utf8 { .. }) {
                    break;
                }
            }
        }
    }
    Ok(out)
}

fn date(field: &str, name: &str) -> std::result::Result<NaiveDate, String> {
    NaiveDate::parse_from_str(field, "%Y-%m-%d").map_err(|e| format!("{name} `{field}`: {e}"))
}

fn number(field: &str, name: &str) -> std::result::Result<f64, String> {
    match field.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        Ok(x) => Err(format!("{name} must be finite, got {x}")),
        Err(e) => Err(format!("{name} `{field}`: {e}")),
    }
}

pub fn parse_chains(text: &str) -> Result<Parsed<RawQuoteRecord>> {
    let mut seen = std::collections::HashSet::new();
    parse_table(text, "chains", &CHAINS_HEADER, |r| {
        let line = r.position().map_or(0, |p| p.line() as usize);
        let trade_date = date(&r[0], "trade_date")?;
        let expiry_date = date(&r[1], "expiry_date")?;
        if expiry_date <= trade_date {
            return Err(format!("expiry {expiry_date} not after trade date {trade_date}"));
        }
        let kind = match &r[2] {
            "C" | "c" => OptionKind::Call,
            "P" | "p" => OptionKind::Put,
            f => return Err(format!("flag must be C or P, got `{f}`")),
        };
        let strike = number(&r[3], "strike")?;
        if strike <= 0.0 {
            return Err(format!("strike must be > 0, got {strike}"));
        }
        let bid = number(&r[4], "bid")?;
        let ask = number(&r[5], "ask")?;
        if bid < 0.0 {
            return Err(format!("bid must be >= 0, got {bid}"));
        }
        if ask < bid {
            return Err(format!("ask {ask} below bid {bid}"));
        }
        if !seen.insert((trade_date, expiry_date, strike.to_bits(), kind)) {
            return Err(format!("duplicate quote ({trade_date}, {expiry_date}, {strike}, {kind:?})"));
        }
        Ok(RawQuoteRecord {
            line,
            trade_date,
            expiry_date,
            kind,
            strike,
            bid,
            ask,
        })
    })
}

pub fn parse_rates(text: &str) -> Result<Parsed<RatePoint>> {
    let mut seen = std::collections::HashSet::new();
    parse_table(text, "rates", &RATES_HEADER, |r| {
        let date = date(&r[0], "date")?;
        let maturity_days: i64 = r[1]
            .parse()
            .map_err(|e| format!("maturity_days `{}`: {e}", &r[1]))?;
        if maturity_days <= 0 {
            return Err(format!("maturity_days must be > 0, got {maturity_days}"));
        }
        let rate = number(&r[2], "rate")?;
        if !seen.insert((date, maturity_days)) {
            return Err(format!("duplicate rate ({date}, {maturity_days})"));
        }
        Ok(RatePoint {
            date,
            maturity_days,
            rate,
        })
    })
}

pub fn parse_closes(text: &str) -> Result<Parsed<CloseRecord>> {
    let mut seen = std::collections::HashSet::new();
    parse_table(text, "closes", &CLOSES_HEADER, |r| {
        let date = date(&r[0], "date")?;
        let close = number(&r[1], "close")?;
        if close <= 0.0 {
            return Err(format!("close must be > 0, got {close}"));
        }
        let dividend_yield = number(&r[2], "dividend_yield")?;
        if !seen.insert(date) {
            return Err(format!("duplicate close for {date}"));
        }
        Ok(CloseRecord {
            date,
            close,
            dividend_yield,
        })
    })
}

/// Per-day zero curves, linearly interpolated in maturity.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RateCurves {
    curves: BTreeMap<NaiveDate, Vec<(i64, f64)>>,
}

impl RateCurves {
    pub fn new(points: &[RatePoint]) -> Self {
        let mut curves: BTreeMap<NaiveDate, Vec<(i64, f64)>> = BTreeMap::new();
        for p in points {
            curves.entry(p.date).or_default().push((p.maturity_days, p.rate));
        }
        for c in curves.values_mut() {
            c.sort_by_key(|x| x.0);
        }
        RateCurves { curves }
    }

    /// Rate at `days`; a one-point curve is flat, otherwise `days` must lie
    /// within the curve's knots.
    pub fn rate(&self, date: NaiveDate, days: i64) -> Result<f64> {
        let missing = Error::MissingRate { date, days };
        let curve = self.curves.get(&date).ok_or(missing.clone())?;
        if let [(_, r)] = curve.as_slice() {
            return Ok(*r);
        }
        let i = curve.partition_point(|(d, _)| *d < days);
        match curve.get(i) {
            Some((d, r)) if *d == days => Ok(*r),
            Some((d1, r1)) if i > 0 => {
                let (d0, r0) = curve[i - 1];
                let w = (days - d0) as f64 / (d1 - d0) as f64;
                Ok(r0 + w * (r1 - r0))
            }
            _ => Err(missing),
        }
    }
}

/// Parsed panel with every rejected record.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelReport {
    pub days: Vec<DayChain>,
    /// `(file, rejection)`
    pub rejected: Vec<(String, Rejection)>,
    pub accepted_quotes: usize,
}

/// One chain per trade date, with spot and dividend yield from the closes
/// file and each quote's rate interpolated at its maturity. Quotes whose
/// close or rate is missing are rejected with their line number.
pub fn parse_panel(chains: &str, rates: &str, closes: &str) -> Result<PanelReport> {
    let chains = parse_chains(chains)?;
    let rates = parse_rates(rates)?;
    let closes = parse_closes(closes)?;
    let mut rejected: Vec<(String, Rejection)> = Vec::new();
    rejected.extend(chains.rejected.iter().cloned().map(|r| ("chains".to_string(), r)));
    rejected.extend(rates.rejected.iter().cloned().map(|r| ("rates".to_string(), r)));
    rejected.extend(closes.rejected.iter().cloned().map(|r| ("closes".to_string(), r)));

    let curves = RateCurves::new(&rates.records);
    let closes: BTreeMap<NaiveDate, CloseRecord> = closes.records.iter().map(|c| (c.date, *c)).collect();
    let mut by_day: BTreeMap<NaiveDate, Vec<OptionQuote>> = BTreeMap::new();
    let mut states: BTreeMap<NaiveDate, MarketState> = BTreeMap::new();
    let mut accepted = 0;
    for rec in &chains.records {
        let reject = |message: String| ("chains".to_string(), Rejection { line: rec.line, message });
        let Some(close) = closes.get(&rec.trade_date) else {
            rejected.push(reject(format!("no close for {}", rec.trade_date)));
            continue;
        };
        let days = rec.days_to_expiry();
        let quote = curves.rate(rec.trade_date, days).and_then(|rate| {
            let spec = OptionSpec::new(rec.kind, rec.strike, days as f64 / DAYS_PER_YEAR)?;
            OptionQuote::new(spec, rec.bid, rec.ask, rate)
        });
        let state = MarketState::new(rec.trade_date, close.close, 0.0, close.dividend_yield);
        match (quote, state) {
            (Ok(q), Ok(s)) => {
                states.entry(rec.trade_date).or_insert(s);
                by_day.entry(rec.trade_date).or_default().push(q);
                accepted += 1;
            }
            (Err(e), _) | (_, Err(e)) => rejected.push(reject(e.to_string())),
        }
    }
    let days = by_day
        .into_iter()
        .map(|(d, quotes)| DayChain {
            state: states[&d],
            quotes,
        })
        .collect();
    Ok(PanelReport {
        days,
        rejected,
        accepted_quotes: accepted,
    })
}

/// Calendar days to expiry of a quote.
pub fn days_to_expiry(spec: &OptionSpec) -> i64 {
    (spec.maturity * DAYS_PER_YEAR).round() as i64
}

/// The three panel files as text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PanelFiles {
    pub chains: String,
    pub rates: String,
    pub closes: String,
}

/// Serializes a panel; numbers use the shortest round-trip representation.
pub fn write_panel(panel: &[DayChain]) -> PanelFiles {
    let mut chains = CHAINS_HEADER.join(",") + "\n";
    let mut rates = RATES_HEADER.join(",") + "\n";
    let mut closes = CLOSES_HEADER.join(",") + "\n";
    for day in panel {
        let d = day.date();
        let _ = writeln!(closes, "{d},{},{}", day.state.spot, day.state.dividend_yield);
        let mut points: BTreeMap<i64, f64> = BTreeMap::new();
        for q in &day.quotes {
            let days = days_to_expiry(&q.spec);
            points.entry(days).or_insert(q.rate);
            let expiry = d + chrono::Days::new(days as u64);
            let flag = match q.spec.kind {
                OptionKind::Call => "C",
                OptionKind::Put => "P",
            };
            let _ = writeln!(chains, "{d},{expiry},{flag},{},{},{}", q.spec.strike, q.bid, q.ask);
        }
        for (days, rate) in points {
            let _ = writeln!(rates, "{d},{days},{rate}");
        }
    }
    PanelFiles { chains, rates, closes }
}

/// Keeps quotes with `23 < days < 37` and a positive bid, restricted to the
/// two nearest surviving expiries.
pub fn vix_component_filter(chain: &DayChain) -> DayChain {
    let window: Vec<OptionQuote> = chain
        .quotes
        .iter()
        .copied()
        .filter(|q| {
            let d = days_to_expiry(&q.spec);
            d > 23 && d < 37 && q.bid > 0.0
        })
        .collect();
    let mut expiries: Vec<i64> = window.iter().map(|q| days_to_expiry(&q.spec)).collect();
    expiries.sort_unstable();
    expiries.dedup();
    expiries.truncate(2);
    DayChain {
        state: chain.state,
        quotes: window
            .into_iter()
            .filter(|q| expiries.contains(&days_to_expiry(&q.spec)))
            .collect(),
    }
}

/// Source of the daily variance in a synthetic panel.
#[derive(Debug, Clone, PartialEq)]
pub enum VariancePath {
    /// Full-truncation Euler CIR path started at `v0`.
    Simulate { v0: f64 },
    /// Given daily variances.
    Prescribed(Vec<f64>),
}

/// Recipe for a synthetic panel of noisy call quotes.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticPanelSpec {
    pub params: ModelParams,
    pub variance: VariancePath,
    pub days: usize,
    pub start: NaiveDate,
    pub spot: f64,
    pub rate: f64,
    pub dividend_yield: f64,
    /// One strike ladder is quoted at each maturity.
    pub maturity_days: Vec<u32>,
    /// Strike ladder as offsets from the at-the-money FRFT grid index.
    pub strike_offsets: Vec<isize>,
    pub noise_sd: f64,
    /// Quotes are `observed ∓ half_spread`, bids floored at zero.
    pub half_spread: f64,
    pub substeps: usize,
    pub seed: u64,
    pub frft: FrftConfig,
}

impl Default for SyntheticPanelSpec {
    fn default() -> Self {
        let reference = MarketState::sp500_reference();
        SyntheticPanelSpec {
            params: ModelParams::sp500(),
            variance: VariancePath::Simulate { v0: 0.0108 },
            days: 20,
            start: reference.date,
            spot: reference.spot,
            rate: reference.rate,
            dividend_yield: reference.dividend_yield,
            // near- and next-term, as kept by the VIX filter
            maturity_days: vec![25, 32],
            // log-moneyness about -0.146 to +0.037 in steps of 10 grid points
            strike_offsets: (-400..=100).step_by(10).collect(),
            noise_sd: 0.0,
            half_spread: 0.0,
            substeps: 10,
            seed: 0,
            frft: FrftConfig::default(),
        }
    }
}

impl SyntheticPanelSpec {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.frft.validate()?;
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.days == 0 {
            return bad("synthetic panel needs at least one day".into());
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return bad(format!("noise_sd must be >= 0, got {}", self.noise_sd));
        }
        if !(self.half_spread >= 0.0 && self.half_spread.is_finite()) {
            return bad(format!("half_spread must be >= 0, got {}", self.half_spread));
        }
        if self.maturity_days.is_empty() || self.maturity_days.contains(&0) || self.substeps == 0 || self.strike_offsets.is_empty() {
            return bad("maturity, substeps and strike ladder must be non-empty".into());
        }
        let half = (self.frft.n_points / 2) as isize;
        if self.strike_offsets.iter().any(|o| o.abs() >= half) {
            return bad("strike offset outside the FRFT grid".into());
        }
        match &self.variance {
            VariancePath::Simulate { v0 } if !(*v0 >= 0.0 && v0.is_finite()) => bad(format!("v0 must be >= 0, got {v0}")),
            VariancePath::Prescribed(p) if p.len() != self.days => {
                bad(format!("prescribed path has {} days, panel has {}", p.len(), self.days))
            }
            VariancePath::Prescribed(p) if p.iter().any(|v| !(*v >= 0.0 && v.is_finite())) => {
                bad("prescribed variances must be >= 0".into())
            }
            _ => Ok(()),
        }
    }
}

/// Simulated panel with its ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticPanel {
    pub true_variances: Vec<f64>,
    /// Noise-free model prices, aligned with each day's quotes.
    pub model_prices: Vec<Vec<f64>>,
    pub chains: Vec<DayChain>,
}

/// One full-truncation Euler step of `(log S, v)` with correlated shocks.
fn euler_step(x: &mut f64, v: &mut f64, dt: f64, drift: f64, p: &ModelParams, z1: f64, z2: f64) {
    let vp = v.max(0.0);
    let sq = (vp * dt).sqrt();
    *x += (drift - 0.5 * vp) * dt + sq * z1;
    *v += p.kappa * (p.theta - vp) * dt + p.sigma * sq * (p.rho * z1 + (1.0 - p.rho * p.rho).sqrt() * z2);
}

/// Terminal variances of `n_paths` independent CIR paths over `t` years.
/// Path `i` draws from its own stream of the seeded generator.
pub fn simulate_cir_terminal(v0: f64, t: f64, params: &ModelParams, n_paths: usize, steps: usize, seed: u64) -> Vec<f64> {
    let dt = t / steps as f64;
    (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let (mut x, mut v) = (0.0, v0);
            for _ in 0..steps {
                let z1: f64 = StandardNormal.sample(&mut rng);
                let z2: f64 = StandardNormal.sample(&mut rng);
                euler_step(&mut x, &mut v, dt, 0.0, params, z1, z2);
            }
            v.max(0.0)
        })
        .collect()
}

/// Daily `(S_t, v_t)` by full-truncation Euler, calls on the strike ladder
/// priced on each day's FRFT grid, and i.i.d. Gaussian quote noise.
/// The path and the noise use separate streams of the seeded generator.
pub fn simulate_heston_panel(spec: &SyntheticPanelSpec) -> Result<SyntheticPanel> {
    spec.validate()?;
    let p = &spec.params;
    let mut path_rng = ChaCha8Rng::seed_from_u64(spec.seed);
    path_rng.set_stream(0);
    let mut noise_rng = ChaCha8Rng::seed_from_u64(spec.seed);
    noise_rng.set_stream(1);

    let dt = 1.0 / DAYS_PER_YEAR / spec.substeps as f64;
    let drift = spec.rate - spec.dividend_yield;
    let mut x = spec.spot.ln();
    let mut v = match &spec.variance {
        VariancePath::Simulate { v0 } => *v0,
        VariancePath::Prescribed(path) => path[0],
    };
    let mut days = Vec::with_capacity(spec.days);
    for t in 0..spec.days {
        if t > 0 {
            for _ in 0..spec.substeps {
                let z1: f64 = StandardNormal.sample(&mut path_rng);
                let z2: f64 = StandardNormal.sample(&mut path_rng);
                if let VariancePath::Prescribed(path) = &spec.variance {
                    v = path[t - 1];
                }
                euler_step(&mut x, &mut v, dt, drift, p, z1, z2);
            }
        }
        let day_v = match &spec.variance {
            VariancePath::Simulate { .. } => v.max(0.0),
            VariancePath::Prescribed(path) => path[t],
        };
        let date = spec.start + chrono::Days::new(t as u64);
        days.push((MarketState::new(date, x.exp(), spec.rate, spec.dividend_yield)?, day_v));
    }

    let mid = (spec.frft.n_points / 2) as isize;
    // (strike, maturity, model price) per day, ladders in maturity order
    let priced: Vec<Vec<(f64, f64, f64)>> = days
        .par_iter()
        .map(|(state, v)| {
            let mut out = Vec::new();
            for d in &spec.maturity_days {
                let tau = *d as f64 / DAYS_PER_YEAR;
                let pricer = GridPricer::new(1.0, state, tau, p, &spec.frft)?;
                let prices = pricer.prices(*v)?;
                for o in &spec.strike_offsets {
                    let u = (mid + o) as usize;
                    out.push((pricer.grid().strikes[u], tau, prices[u]));
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let mut chains = Vec::with_capacity(spec.days);
    let mut model_prices = Vec::with_capacity(spec.days);
    for ((state, _), ladder) in days.iter().zip(priced) {
        let mut quotes = Vec::with_capacity(ladder.len());
        for (k, tau, m) in &ladder {
            let z: f64 = StandardNormal.sample(&mut noise_rng);
            let observed = m + spec.noise_sd * z;
            let bid = (observed - spec.half_spread).max(0.0);
            let ask = (observed + spec.half_spread).max(bid);
            let spec_k = OptionSpec::call(*k, *tau)?;
            quotes.push(OptionQuote::new(spec_k, bid, ask, spec.rate)?.with_observed(observed));
        }
        chains.push(DayChain { state: *state, quotes });
        model_prices.push(ladder.iter().map(|x| x.2).collect());
    }
    Ok(SyntheticPanel {
        true_variances: days.iter().map(|d| d.1).collect(),
        model_prices,
        chains,
    })
}

/// `date,variance,volatility` for the true path of a synthetic panel.
pub fn write_truth(panel: &SyntheticPanel) -> String {
    let mut out = String::from("date,variance,volatility\n");
    for (c, v) in panel.chains.iter().zip(&panel.true_variances) {
        let _ = writeln!(out, "{},{},{}", c.date(), v, v.sqrt());
    }
    out
}
