//! Subcommand implementations.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use clap::Args;
use heston_fisher::calibration::{day_gradients, fit_panel, DayChain, FitConfig};
use heston_fisher::config::RunConfig;
use heston_fisher::fisher::{
    assemble_block_fisher, credibility_bands, dense_diagonal_inverse, invert_block_diagonal_entries,
    max_relative_deviation, DayGradients, DiagonalInverse,
};
use heston_fisher::frft::GridPricer;
use heston_fisher::greeks::{greek_direct, Parameter};
use heston_fisher::heston::{price_direct, put_from_call};
use heston_fisher::market_data::{
    parse_panel, simulate_heston_panel, vix_component_filter, write_panel, write_truth, SyntheticPanelSpec,
    VariancePath,
};
use heston_fisher::params::DAYS_PER_YEAR;
use heston_fisher::variance_swap::{swap_bands, SwapParams};
use heston_fisher::{MarketState, OptionKind, OptionSpec};

use crate::output::{config_hash, emit, read_file, write_file, Failure, Table};
use crate::{Common, Method};

fn state(cfg: &RunConfig) -> Result<MarketState, Failure> {
    let date = MarketState::sp500_reference().date;
    Ok(MarketState::new(date, cfg.spot, cfg.rate, cfg.dividend_yield)?)
}

fn fit_config(cfg: &RunConfig) -> FitConfig {
    FitConfig {
        frft: cfg.frft,
        quad: cfg.quad,
        ..FitConfig::default()
    }
}

fn num(x: f64) -> String {
    x.to_string()
}

/// Cubic Lagrange interpolation in log-strike between grid nodes.
fn interpolate(log_strikes: &[f64], values: &[f64], k: f64) -> Option<f64> {
    let lambda = log_strikes[1] - log_strikes[0];
    let pos = ((k - log_strikes[0]) / lambda).floor() as isize;
    if pos < 1 || pos + 2 >= log_strikes.len() as isize {
        return None;
    }
    let idx = [pos - 1, pos, pos + 1, pos + 2].map(|i| i as usize);
    let mut sum = 0.0;
    for &i in &idx {
        let mut w = 1.0;
        for &j in &idx {
            if i != j {
                w *= (k - log_strikes[j]) / (log_strikes[i] - log_strikes[j]);
            }
        }
        sum += w * values[i];
    }
    Some(sum)
}

#[derive(Args, Debug)]
pub struct PriceArgs {
    #[command(flatten)]
    common: Common,
    /// Strike; defaults to spot.
    #[arg(long)]
    strike: Option<f64>,
    /// Maturity in calendar days.
    #[arg(long, default_value_t = 30.0)]
    maturity: f64,
    #[arg(long, default_value_t = 0.0108)]
    variance: f64,
    #[arg(long)]
    put: bool,
    #[arg(long, value_enum, default_value_t = Method::Frft)]
    method: Method,
    /// Also price with the other method and report the difference on stderr.
    #[arg(long)]
    check: bool,
    /// Emit the whole FRFT strike grid instead of one price.
    #[arg(long)]
    grid: bool,
}

pub fn price(a: &PriceArgs) -> Result<(), Failure> {
    let cfg = a.common.config()?;
    let s = state(&cfg)?;
    let kind = if a.put { OptionKind::Put } else { OptionKind::Call };
    let tau = a.maturity / DAYS_PER_YEAR;
    let strike = a.strike.unwrap_or(cfg.spot);
    let spec = OptionSpec::new(kind, strike, tau)?;
    let hash = config_hash(
        &cfg.canonical(),
        &format!("price strike={strike} maturity={} variance={} kind={kind:?} method={:?} grid={}", a.maturity, a.variance, a.method, a.grid),
    );
    if a.grid {
        let gp = GridPricer::new(1.0, &s, tau, &cfg.model, &cfg.frft)?;
        let prices = gp.prices(a.variance)?;
        let mut t = Table::new(&hash, &[], &["k", "K", "price"]);
        for ((k, big_k), c) in gp.grid().log_strikes.iter().zip(&gp.grid().strikes).zip(&prices) {
            let p = match kind {
                OptionKind::Call => *c,
                OptionKind::Put => put_from_call(*c, &OptionSpec::new(kind, *big_k, tau)?, &s),
            };
            t.row(&[num(*k), num(*big_k), num(p)]);
        }
        return emit(&t.into_string(), a.common.out.as_deref());
    }
    // Puts come from the call grid by parity: the put grid sum carries a
    // much larger aliasing error at practical η.
    let by_frft = || -> Result<f64, Failure> {
        let gp = GridPricer::new(1.0, &s, tau, &cfg.model, &cfg.frft)?;
        let prices = gp.prices(a.variance)?;
        let grid = gp.grid();
        let call = match grid.locate(spec.log_strike, 1e-9) {
            Some(u) => prices[u],
            None => interpolate(&grid.log_strikes, &prices, spec.log_strike)
                .ok_or_else(|| Failure::config(format!("strike {strike} lies outside the FRFT grid")))?,
        };
        Ok(match kind {
            OptionKind::Call => call,
            OptionKind::Put => put_from_call(call, &spec, &s),
        })
    };
    let by_direct = || -> Result<f64, Failure> { Ok(price_direct(&spec, &s, a.variance, &cfg.model, cfg.frft.alpha, &cfg.quad)?) };
    let value = match a.method {
        Method::Frft => by_frft()?,
        Method::Direct => by_direct()?,
    };
    if a.check {
        let other = match a.method {
            Method::Frft => by_direct()?,
            Method::Direct => by_frft()?,
        };
        eprintln!(
            "check: {:?}={value} other={other} abs_diff={:e} rel_diff={:e}",
            a.method,
            (value - other).abs(),
            (value - other).abs() / other.abs()
        );
    }
    let mut t = Table::new(&hash, &[], &["kind", "strike", "maturity_days", "variance", "method", "price"]);
    let method = match a.method {
        Method::Frft => "frft",
        Method::Direct => "direct",
    };
    let kind_label = if a.put { "put" } else { "call" };
    t.row(&[kind_label.into(), num(strike), num(a.maturity), num(a.variance), method.into(), num(value)]);
    emit(&t.into_string(), a.common.out.as_deref())
}

#[derive(Args, Debug)]
pub struct SurfaceArgs {
    #[command(flatten)]
    common: Common,
    /// sigma0 (vega), kappa, sqrt_theta, sigma or rho.
    #[arg(long, default_value = "sigma0")]
    greek: String,
    /// Maturities in calendar days (default 7,14,..,91; 23,30,37 with --vega-drop).
    #[arg(long, value_delimiter = ',')]
    maturities: Option<Vec<u32>>,
    #[arg(long, default_value_t = 0.0108)]
    variance: f64,
    #[arg(long, default_value_t = 0.8)]
    min_moneyness: f64,
    #[arg(long, default_value_t = 1.2)]
    max_moneyness: f64,
    /// Every `stride`-th grid strike, counted from the at-the-money node.
    #[arg(long, default_value_t = 10)]
    stride: usize,
    /// At-the-money Vega against variance instead of a strike surface.
    #[arg(long)]
    vega_drop: bool,
    /// Variance ladder of --vega-drop (default 0.0005,0.001,..,0.05).
    #[arg(long, value_delimiter = ',')]
    variances: Option<Vec<f64>>,
}

pub fn surface(a: &SurfaceArgs) -> Result<(), Failure> {
    let cfg = a.common.config()?;
    let s = state(&cfg)?;
    let param = Parameter::parse(&a.greek).ok_or_else(|| Failure::config(format!("unknown greek `{}`", a.greek)))?;
    if a.stride == 0 || !(a.min_moneyness > 0.0 && a.min_moneyness < a.max_moneyness) {
        return Err(Failure::config("need stride > 0 and 0 < min_moneyness < max_moneyness"));
    }
    let default_maturities: Vec<u32> = if a.vega_drop { vec![23, 30, 37] } else { (1..=13).map(|w| 7 * w).collect() };
    let maturities = a.maturities.clone().unwrap_or(default_maturities);
    if maturities.is_empty() || maturities.contains(&0) {
        return Err(Failure::config("maturities must be positive"));
    }
    if a.vega_drop {
        let variances = a.variances.clone().unwrap_or_else(|| (1..=100).map(|i| 0.0005 * i as f64).collect());
        let hash = config_hash(&cfg.canonical(), &format!("surface vega_drop maturities={maturities:?} variances={variances:?}"));
        let mut t = Table::new(&hash, &[], &["variance", "maturity_days", "vega"]);
        for &d in &maturities {
            let spec = OptionSpec::call(cfg.spot, d as f64 / DAYS_PER_YEAR)?;
            for &v in &variances {
                let vega = greek_direct(Parameter::Sigma0, &spec, &s, v, &cfg.model, cfg.frft.alpha, &cfg.quad)?;
                t.row(&[num(v), d.to_string(), num(vega)]);
            }
        }
        return emit(&t.into_string(), a.common.out.as_deref());
    }
    let hash = config_hash(
        &cfg.canonical(),
        &format!(
            "surface greek={param} maturities={maturities:?} variance={} moneyness=[{},{}] stride={}",
            a.variance, a.min_moneyness, a.max_moneyness, a.stride
        ),
    );
    let mut t = Table::new(&hash, &[("greek", param.label().into())], &["strike", "maturity_days", "value"]);
    let centre = cfg.frft.n_points / 2;
    for &d in &maturities {
        let gp = GridPricer::new(1.0, &s, d as f64 / DAYS_PER_YEAR, &cfg.model, &cfg.frft)?;
        let values = gp.greeks(param, a.variance)?;
        for (u, (k, v)) in gp.grid().strikes.iter().zip(&values).enumerate() {
            let m = k / cfg.spot;
            if u.abs_diff(centre) % a.stride == 0 && m >= a.min_moneyness && m <= a.max_moneyness {
                t.row(&[num(*k), d.to_string(), num(*v)]);
            }
        }
    }
    emit(&t.into_string(), a.common.out.as_deref())
}

/// The three panel files of a directory, as written by `synth`.
struct PanelInput {
    days: Vec<DayChain>,
    digest: String,
}

fn load_panel(dir: &Path, all_quotes: bool) -> Result<PanelInput, Failure> {
    let chains = read_file(&dir.join("chains.csv"))?;
    let rates = read_file(&dir.join("rates.csv"))?;
    let closes = read_file(&dir.join("closes.csv"))?;
    let digest = config_hash(&chains, &format!("{rates}\n{closes}"));
    let report = parse_panel(&chains, &rates, &closes)?;
    for (file, r) in &report.rejected {
        eprintln!("rejected {file}:{}: {}", r.line, r.message);
    }
    let days: Vec<DayChain> = report
        .days
        .iter()
        .map(|d| if all_quotes { d.clone() } else { vix_component_filter(d) })
        .filter(|d| d.calls().any(|q| q.admitted_to_fit()))
        .collect();
    if days.is_empty() {
        return Err(Failure::empty(format!("no day in {} has a call quote with a positive bid", dir.display())));
    }
    Ok(PanelInput { days, digest })
}

#[derive(Args, Debug)]
pub struct FitArgs {
    #[command(flatten)]
    common: Common,
    /// Directory holding chains.csv, rates.csv and closes.csv.
    #[arg(long)]
    panel: PathBuf,
    /// Fit every quote instead of the 23–37 day window.
    #[arg(long)]
    all_quotes: bool,
}

pub fn fit(a: &FitArgs) -> Result<(), Failure> {
    let cfg = a.common.config()?;
    let input = load_panel(&a.panel, a.all_quotes)?;
    let res = fit_panel(&input.days, &cfg.model, &fit_config(&cfg))?;
    for (date, e) in &res.failures {
        eprintln!("fit failed on {date}: {e}");
    }
    let hash = config_hash(&cfg.canonical(), &format!("fit all_quotes={} panel={}", a.all_quotes, input.digest));
    let meta = [
        ("noise_variance", num(res.noise_variance)),
        ("days", res.fits.len().to_string()),
        ("failed", res.failures.len().to_string()),
    ];
    let mut t = Table::new(&hash, &meta, &["date", "variance", "volatility", "objective", "n_quotes", "multimodal"]);
    for f in &res.fits {
        t.row(&[
            f.date.to_string(),
            num(f.variance),
            num(f.volatility()),
            num(f.objective),
            f.n_quotes.to_string(),
            f.multimodal.to_string(),
        ]);
    }
    eprintln!("noise variance {}", res.noise_variance);
    emit(&t.into_string(), a.common.out.as_deref())
}

/// Fitted variances by date and the pooled noise variance of a `fit` output.
fn read_fit(path: &Path) -> Result<(BTreeMap<NaiveDate, f64>, f64), Failure> {
    let text = read_file(path)?;
    let bad = |line: usize, m: &str| Failure::config(format!("{}:{line}: {m}", path.display()));
    let mut noise = None;
    let mut variances = BTreeMap::new();
    let mut header_seen = false;
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if let Some(meta) = line.strip_prefix('#') {
            if let Some(v) = meta.trim().strip_prefix("noise_variance=") {
                noise = Some(v.parse::<f64>().map_err(|_| bad(line_no, "bad noise_variance"))?);
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        if !header_seen {
            if !line.starts_with("date,variance") {
                return Err(bad(line_no, "expected a fit output header"));
            }
            header_seen = true;
            continue;
        }
        let mut fields = line.split(',');
        let date = fields
            .next()
            .and_then(|d| d.parse::<NaiveDate>().ok())
            .ok_or_else(|| bad(line_no, "bad date"))?;
        let v = fields
            .next()
            .and_then(|v| v.parse::<f64>().ok())
            .filter(|v| *v >= 0.0)
            .ok_or_else(|| bad(line_no, "bad variance"))?;
        variances.insert(date, v);
    }
    let noise = noise.ok_or_else(|| bad(0, "missing # noise_variance line"))?;
    Ok((variances, noise))
}

#[derive(Args, Debug)]
pub struct FisherArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    panel: PathBuf,
    /// Output of `fit` on the same panel.
    #[arg(long)]
    fit: PathBuf,
    #[arg(long)]
    all_quotes: bool,
    /// Bands on the variance-swap strike instead of the volatility.
    #[arg(long)]
    swap: bool,
    /// Report the deviation of the block inverse from a dense inverse on stderr.
    #[arg(long)]
    dense_check: bool,
}

fn shared_meta(inv: &DiagonalInverse) -> Vec<(&'static str, String)> {
    let mut meta = vec![
        ("status", format!("{:?}", inv.status)),
        ("schur_condition", num(inv.schur_condition)),
        ("shared_reliable", inv.shared_reliable.to_string()),
    ];
    for (p, e) in Parameter::SHARED.iter().zip(&inv.shared) {
        let key = match p {
            Parameter::Kappa => "se_kappa",
            Parameter::SqrtTheta => "se_sqrt_theta",
            Parameter::Sigma => "se_sigma",
            _ => "se_rho",
        };
        meta.push((key, num(e.max(0.0).sqrt())));
    }
    meta
}

pub fn fisher(a: &FisherArgs) -> Result<(), Failure> {
    let cfg = a.common.config()?;
    let input = load_panel(&a.panel, a.all_quotes)?;
    let (fitted, noise) = read_fit(&a.fit)?;
    let days: Vec<(&DayChain, f64)> = input
        .days
        .iter()
        .filter_map(|d| fitted.get(&d.date()).map(|v| (d, *v)))
        .collect();
    if days.is_empty() {
        return Err(Failure::empty("no fitted day matches the panel"));
    }
    let fc = fit_config(&cfg);
    let grads = days
        .iter()
        .map(|(d, v)| day_gradients(d, *v, &cfg.model, &fc))
        .collect::<Result<Vec<DayGradients>, _>>()?;
    let bf = assemble_block_fisher(&grads, noise, cfg.fisher_mode)?;
    let inv = invert_block_diagonal_entries(&bf)?;
    if a.dense_check {
        let dense = dense_diagonal_inverse(&bf)?;
        eprintln!("dense check: max relative deviation {:e}", max_relative_deviation(&inv.all(), &dense));
    }
    let variances: Vec<f64> = days.iter().map(|(_, v)| *v).collect();
    let hash = config_hash(
        &cfg.canonical(),
        &format!("fisher swap={} all_quotes={} panel={} fit={fitted:?} noise={noise}", a.swap, a.all_quotes, input.digest),
    );
    let text = if a.swap {
        let swap = SwapParams::new(cfg.swap_days as f64 / DAYS_PER_YEAR, cfg.model)?;
        let series = swap_bands(&bf, &variances, &swap)?;
        let mut meta = vec![("swap_days", cfg.swap_days.to_string())];
        meta.extend(shared_meta(&series.inverse));
        let mut t = Table::new(&hash, &meta, &["date", "kvar", "beta", "relative"]);
        for i in 0..series.dates.len() {
            t.row(&[series.dates[i].to_string(), num(series.kvar[i]), num(series.beta[i]), num(series.relative[i])]);
        }
        t.into_string()
    } else {
        let sigmas: Vec<f64> = variances.iter().map(|v| v.sqrt()).collect();
        let band = credibility_bands(&inv, &sigmas)?;
        let mut t = Table::new(&hash, &shared_meta(&inv), &["date", "sigma", "beta", "relative"]);
        for (i, d) in bf.dates.iter().enumerate() {
            t.row(&[d.to_string(), num(sigmas[i]), num(band.beta[i]), num(band.relative[i])]);
        }
        t.into_string()
    };
    emit(&text, a.common.out.as_deref())
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 20)]
    days: usize,
    /// Start of the simulated variance path.
    #[arg(long, default_value_t = 0.0108)]
    v0: f64,
    /// Daily variances cycled over the panel instead of a simulated path.
    #[arg(long, value_delimiter = ',')]
    levels: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0.3)]
    noise_sd: f64,
    #[arg(long, default_value_t = 0.0)]
    half_spread: f64,
}

pub fn synth(a: &SynthArgs) -> Result<(), Failure> {
    let cfg = a.common.config()?;
    let dir = a.common.out.as_deref().ok_or_else(|| Failure::config("synth needs --out <directory>"))?;
    let variance = match &a.levels {
        Some(l) if l.is_empty() => return Err(Failure::config("--levels is empty")),
        Some(l) => VariancePath::Prescribed((0..a.days).map(|i| l[i % l.len()]).collect()),
        None => VariancePath::Simulate { v0: a.v0 },
    };
    let spec = SyntheticPanelSpec {
        params: cfg.model,
        variance,
        days: a.days,
        spot: cfg.spot,
        rate: cfg.rate,
        dividend_yield: cfg.dividend_yield,
        noise_sd: a.noise_sd,
        half_spread: a.half_spread,
        seed: cfg.seed,
        frft: cfg.frft,
        ..SyntheticPanelSpec::default()
    };
    let panel = simulate_heston_panel(&spec)?;
    let hash = config_hash(
        &cfg.canonical(),
        &format!("synth days={} v0={} levels={:?} noise_sd={} half_spread={}", a.days, a.v0, a.levels, a.noise_sd, a.half_spread),
    );
    std::fs::create_dir_all(dir).map_err(|e| Failure::config(format!("{}: {e}", dir.display())))?;
    let files = write_panel(&panel.chains);
    let stamp = |body: &str| format!("# config_hash={hash}\n{body}");
    write_file(&dir.join("chains.csv"), &stamp(&files.chains))?;
    write_file(&dir.join("rates.csv"), &stamp(&files.rates))?;
    write_file(&dir.join("closes.csv"), &stamp(&files.closes))?;
    write_file(&dir.join("truth.csv"), &stamp(&write_truth(&panel)))?;
    Ok(())
}
