//! Daily variance fits by least squares on call quotes, the pooled noise
//! variance, and the option gradients that feed the panel information.

use chrono::NaiveDate;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fisher::DayGradients;
use crate::frft::{FrftConfig, GridPricer};
use crate::greeks::{greek_direct, GreekVector, Parameter};
use crate::heston::price_direct;
use crate::params::{MarketState, ModelParams, OptionKind, OptionSpec};
use crate::quadrature::QuadratureConfig;

/// One quoted option with the discount rate matched to its maturity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptionQuote {
    pub spec: OptionSpec,
    pub bid: f64,
    pub ask: f64,
    pub mid: f64,
    /// Price used for fitting; the mid unless overridden.
    pub observed: f64,
    pub rate: f64,
}

impl OptionQuote {
    pub fn new(spec: OptionSpec, bid: f64, ask: f64, rate: f64) -> Result<Self> {
        if !(bid.is_finite() && bid >= 0.0) {
            return Err(Error::InvalidParameter(format!("bid must be >= 0, got {bid}")));
        }
        if !(ask.is_finite() && ask >= bid) {
            return Err(Error::InvalidParameter(format!("ask {ask} below bid {bid}")));
        }
        if !rate.is_finite() {
            return Err(Error::InvalidParameter(format!("rate must be finite, got {rate}")));
        }
        let mid = 0.5 * (bid + ask);
        Ok(OptionQuote {
            spec,
            bid,
            ask,
            mid,
            observed: mid,
            rate,
        })
    }

    pub fn with_observed(mut self, observed: f64) -> Self {
        self.observed = observed;
        self
    }

    /// Calls with a non-vanishing bid and a positive price enter the fit.
    pub fn admitted_to_fit(&self) -> bool {
        self.spec.kind == OptionKind::Call && self.bid > 0.0 && self.observed > 0.0
    }
}

/// All quotes of one trading day.
#[derive(Debug, Clone, PartialEq)]
pub struct DayChain {
    pub state: MarketState,
    pub quotes: Vec<OptionQuote>,
}

impl DayChain {
    pub fn date(&self) -> NaiveDate {
        self.state.date
    }

    pub fn calls(&self) -> impl Iterator<Item = &OptionQuote> {
        self.quotes.iter().filter(|q| q.spec.kind == OptionKind::Call)
    }
}

/// Optimizer and pricing settings of the daily fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitConfig {
    pub frft: FrftConfig,
    pub quad: QuadratureConfig,
    pub bounds: (f64, f64),
    pub scan_points: usize,
    pub scan_range: (f64, f64),
    pub xtol: f64,
    /// Largest log-strike distance at which a quote is priced from the grid.
    pub strike_match_tol: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            frft: FrftConfig::default(),
            quad: QuadratureConfig::default(),
            bounds: (1e-6, 4.0),
            scan_points: 64,
            scan_range: (1e-5, 1.0),
            xtol: 1e-10,
            strike_match_tol: 1e-9,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        self.frft.validate()?;
        let (lo, hi) = self.bounds;
        if !(lo >= 0.0 && lo < hi && hi.is_finite()) {
            return Err(Error::InvalidParameter(format!("variance bounds must satisfy 0 <= lo < hi, got [{lo}, {hi}]")));
        }
        let (a, b) = self.scan_range;
        if !(a > 0.0 && a < b && a >= lo && b <= hi) || self.scan_points < 3 {
            return Err(Error::InvalidParameter(format!(
                "scan range [{a}, {b}] with {} points must lie inside the bounds",
                self.scan_points
            )));
        }
        if !(self.xtol > 0.0) {
            return Err(Error::InvalidParameter(format!("xtol must be > 0, got {}", self.xtol)));
        }
        Ok(())
    }

    fn scan_grid(&self) -> Vec<f64> {
        let (a, b) = self.scan_range;
        let n = self.scan_points;
        (0..n)
            .map(|i| (a.ln() + (b.ln() - a.ln()) * i as f64 / (n - 1) as f64).exp())
            .collect()
    }
}

/// Result of one daily fit.
#[derive(Debug, Clone, PartialEq)]
pub struct DayFit {
    pub date: NaiveDate,
    pub variance: f64,
    pub objective: f64,
    /// `e − E` for every admitted call, in quote order.
    pub residuals: Vec<f64>,
    pub n_quotes: usize,
    /// More than one local minimum was seen on the scan grid.
    pub multimodal: bool,
}

impl DayFit {
    pub fn volatility(&self) -> f64 {
        self.variance.sqrt()
    }
}

/// Where a quote's model price comes from.
#[derive(Debug, Clone, Copy)]
enum Source {
    Grid { group: usize, index: usize },
    Direct,
}

/// Pricing state of one day's fitted quotes. Model prices at the scan
/// points are cached, so repeated fits of the same quotes with different
/// observed prices (noise studies) only pay for the refinement.
#[derive(Debug, Clone)]
pub struct DayFitter {
    date: NaiveDate,
    state: MarketState,
    params: ModelParams,
    config: FitConfig,
    quotes: Vec<OptionQuote>,
    pricers: Vec<GridPricer>,
    sources: Vec<Source>,
    scan: Vec<f64>,
    scan_prices: Vec<Vec<f64>>,
}

/// Grid pricers grouped by `(maturity, rate)`; returns the pricer index
/// and grid index for each quote.
fn group_quotes(
    quotes: &[OptionQuote],
    state: &MarketState,
    params: &ModelParams,
    config: &FitConfig,
) -> Result<(Vec<GridPricer>, Vec<Source>)> {
    let mut keys: Vec<(f64, f64)> = Vec::new();
    let mut pricers = Vec::new();
    let mut sources = Vec::with_capacity(quotes.len());
    for q in quotes {
        let key = (q.spec.maturity, q.rate);
        let group = match keys.iter().position(|k| *k == key) {
            Some(g) => g,
            None => {
                keys.push(key);
                pricers.push(GridPricer::new(1.0, &state.with_rate(q.rate), q.spec.maturity, params, &config.frft)?);
                keys.len() - 1
            }
        };
        sources.push(match pricers[group].grid().locate(q.spec.log_strike, config.strike_match_tol) {
            Some(index) => Source::Grid { group, index },
            None => Source::Direct,
        });
    }
    Ok((pricers, sources))
}

impl DayFitter {
    pub fn new(chain: &DayChain, params: &ModelParams, config: &FitConfig) -> Result<Self> {
        config.validate()?;
        params.validate()?;
        let quotes: Vec<OptionQuote> = chain.quotes.iter().copied().filter(|q| q.admitted_to_fit()).collect();
        if quotes.is_empty() {
            return Err(Error::NoCalls(chain.date()));
        }
        let (pricers, sources) = group_quotes(&quotes, &chain.state, params, config)?;
        let mut fitter = DayFitter {
            date: chain.date(),
            state: chain.state,
            params: *params,
            config: *config,
            quotes,
            pricers,
            sources,
            scan: config.scan_grid(),
            scan_prices: Vec::new(),
        };
        fitter.scan_prices = fitter.scan.iter().map(|v| fitter.model_prices(*v)).collect::<Result<_>>()?;
        Ok(fitter)
    }

    pub fn quotes(&self) -> &[OptionQuote] {
        &self.quotes
    }

    /// Model prices of the admitted calls at variance `v`.
    pub fn model_prices(&self, v: f64) -> Result<Vec<f64>> {
        let grids: Vec<Vec<f64>> = self.pricers.iter().map(|p| p.prices(v)).collect::<Result<_>>()?;
        self.quotes
            .iter()
            .zip(&self.sources)
            .map(|(q, s)| match *s {
                Source::Grid { group, index } => Ok(grids[group][index]),
                Source::Direct => price_direct(
                    &q.spec,
                    &self.state.with_rate(q.rate),
                    v,
                    &self.params,
                    self.config.frft.alpha,
                    &self.config.quad,
                ),
            })
            .collect()
    }

    fn sse(observed: &[f64], model: &[f64]) -> f64 {
        observed.iter().zip(model).map(|(e, m)| (e - m) * (e - m)).sum()
    }

    /// Sum of squared call residuals at `v` against the quotes' observed prices.
    pub fn objective(&self, v: f64) -> Result<f64> {
        let observed: Vec<f64> = self.quotes.iter().map(|q| q.observed).collect();
        self.objective_for(&observed, v)
    }

    pub fn objective_for(&self, observed: &[f64], v: f64) -> Result<f64> {
        Ok(Self::sse(observed, &self.model_prices(v)?))
    }

    pub fn fit(&self) -> Result<DayFit> {
        let observed: Vec<f64> = self.quotes.iter().map(|q| q.observed).collect();
        self.fit_observed(&observed)
    }

    /// Fits the same quotes against replacement observed prices.
    pub fn fit_observed(&self, observed: &[f64]) -> Result<DayFit> {
        if observed.len() != self.quotes.len() {
            return Err(Error::Dimension(format!(
                "{} observed prices for {} quotes",
                observed.len(),
                self.quotes.len()
            )));
        }
        let values: Vec<f64> = self.scan_prices.iter().map(|m| Self::sse(observed, m)).collect();
        let best = values
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .expect("scan grid is non-empty");
        let multimodal = (1..values.len() - 1)
            .filter(|&i| values[i] < values[i - 1] && values[i] < values[i + 1])
            .count()
            > 1;
        let (lo, hi) = self.config.bounds;
        let a = if best == 0 { lo } else { self.scan[best - 1] };
        let b = if best + 1 == self.scan.len() { hi } else { self.scan[best + 1] };
        let mut failure = None;
        let f = |v: f64| match self.objective_for(observed, v) {
            Ok(x) => x,
            Err(e) => {
                failure.get_or_insert(e);
                f64::INFINITY
            }
        };
        let (variance, objective) = brent_minimize(f, a, b, self.config.xtol);
        if let Some(e) = failure {
            return Err(e);
        }
        let model = self.model_prices(variance)?;
        Ok(DayFit {
            date: self.date,
            variance,
            objective,
            residuals: observed.iter().zip(&model).map(|(e, m)| e - m).collect(),
            n_quotes: self.quotes.len(),
            multimodal,
        })
    }
}

/// Bounded Brent minimization (golden section with parabolic steps) on
/// `[a, b]`, stopping when the bracket is narrower than `2·xtol`.
pub fn brent_minimize<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, xtol: f64) -> (f64, f64) {
    let golden = 0.5 * (3.0 - 5f64.sqrt());
    let (mut a, mut b) = (a.min(b), a.max(b));
    let mut x = a + golden * (b - a);
    let (mut w, mut v) = (x, x);
    let mut fx = f(x);
    let (mut fw, mut fv) = (fx, fx);
    let (mut d, mut e) = (0.0f64, 0.0f64);
    for _ in 0..500 {
        let m = 0.5 * (a + b);
        let tol1 = 1e-15 * x.abs() + xtol / 3.0;
        let tol2 = 2.0 * tol1;
        if (x - m).abs() <= tol2 - 0.5 * (b - a) {
            break;
        }
        let mut golden_step = true;
        if e.abs() > tol1 {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            if p.abs() < (0.5 * q * e).abs() && p > q * (a - x) && p < q * (b - x) {
                e = d;
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = if m >= x { tol1 } else { -tol1 };
                }
                golden_step = false;
            }
        }
        if golden_step {
            e = if x >= m { a - x } else { b - x };
            d = golden * e;
        }
        let u = if d.abs() >= tol1 { x + d } else { x + tol1.copysign(d) };
        let fu = f(u);
        if fu <= fx {
            if u >= x {
                a = x;
            } else {
                b = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    (x, fx)
}

pub fn fit_day_variance(chain: &DayChain, params: &ModelParams, config: &FitConfig) -> Result<DayFit> {
    DayFitter::new(chain, params, config)?.fit()
}

/// `v̂ = (1/N) Σ_t Σ_c (c_t − C)²` over every fitted call.
pub fn estimate_noise_variance(fits: &[DayFit]) -> Result<f64> {
    let n: usize = fits.iter().map(|f| f.residuals.len()).sum();
    if n == 0 {
        return Err(Error::NoQuotes);
    }
    let ss: f64 = fits.iter().flat_map(|f| &f.residuals).map(|r| r * r).sum();
    Ok(ss / n as f64)
}

/// Fits of a whole panel. Failed days are listed, not fatal.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationResult {
    pub fits: Vec<DayFit>,
    pub failures: Vec<(NaiveDate, Error)>,
    pub noise_variance: f64,
}

impl CalibrationResult {
    pub fn variances(&self) -> Vec<f64> {
        self.fits.iter().map(|f| f.variance).collect()
    }

    pub fn dates(&self) -> Vec<NaiveDate> {
        self.fits.iter().map(|f| f.date).collect()
    }
}

/// Fits every day in parallel, then pools the residuals into `v̂`.
pub fn fit_panel(panel: &[DayChain], params: &ModelParams, config: &FitConfig) -> Result<CalibrationResult> {
    if panel.is_empty() {
        return Err(Error::EmptyPanel);
    }
    let outcomes: Vec<Result<DayFit>> = panel.par_iter().map(|c| fit_day_variance(c, params, config)).collect();
    let mut fits = Vec::new();
    let mut failures = Vec::new();
    for (chain, o) in panel.iter().zip(outcomes) {
        match o {
            Ok(f) => fits.push(f),
            Err(e) => failures.push((chain.date(), e)),
        }
    }
    let noise_variance = estimate_noise_variance(&fits)?;
    Ok(CalibrationResult {
        fits,
        failures,
        noise_variance,
    })
}

/// Price gradients of every quote with a positive bid at variance `v`.
/// Put gradients equal call gradients at the same strike and maturity, so
/// both are read from the call grid.
pub fn day_gradients(chain: &DayChain, variance: f64, params: &ModelParams, config: &FitConfig) -> Result<DayGradients> {
    let quotes: Vec<OptionQuote> = chain.quotes.iter().copied().filter(|q| q.bid > 0.0).collect();
    if quotes.is_empty() {
        return Err(Error::EmptyDay(chain.date()));
    }
    let (pricers, sources) = group_quotes(&quotes, &chain.state, params, config)?;
    let grids: Vec<Vec<Vec<f64>>> = pricers
        .iter()
        .map(|p| Parameter::ALL.iter().map(|g| p.greeks(*g, variance)).collect::<Result<_>>())
        .collect::<Result<_>>()?;
    let gradients = quotes
        .iter()
        .zip(&sources)
        .map(|(q, s)| match *s {
            Source::Grid { group, index } => Ok(GreekVector::from_array(std::array::from_fn(|k| grids[group][k][index]))),
            Source::Direct => {
                let spec = q.spec.with_kind(OptionKind::Call);
                let state = chain.state.with_rate(q.rate);
                let mut out = [0.0; 5];
                for p in Parameter::ALL {
                    out[p.index()] = greek_direct(p, &spec, &state, variance, params, config.frft.alpha, &config.quad)?;
                }
                Ok(GreekVector::from_array(out))
            }
        })
        .collect::<Result<_>>()?;
    Ok(DayGradients {
        date: chain.date(),
        gradients,
    })
}
