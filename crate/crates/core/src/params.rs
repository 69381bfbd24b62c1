//! Domain types shared by the pricing, Greek and Fisher layers.

use chrono::NaiveDate;

use crate::error::{Error, Result};

/// Heston variance-process parameters.
///
/// The instantaneous variance `v` is not part of this struct: it is the
/// per-day hidden state and is passed separately to every pricing call.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub kappa: f64,
    pub theta: f64,
    pub sigma: f64,
    pub rho: f64,
}

impl ModelParams {
    pub fn new(kappa: f64, theta: f64, sigma: f64, rho: f64) -> Result<Self> {
        let p = ModelParams {
            kappa,
            theta,
            sigma,
            rho,
        };
        p.validate()?;
        Ok(p)
    }

    /// S&P 500 parameter set used throughout the reference study.
    pub fn sp500() -> Self {
        ModelParams {
            kappa: 5.07,
            theta: 0.0457,
            sigma: 0.48,
            rho: -0.767,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa.is_finite() && self.kappa > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "kappa must be > 0, got {}",
                self.kappa
            )));
        }
        if !(self.theta.is_finite() && self.theta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "theta must be > 0, got {}",
                self.theta
            )));
        }
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sigma must be > 0, got {}",
                self.sigma
            )));
        }
        if !(self.rho.is_finite() && (-1.0..=1.0).contains(&self.rho)) {
            return Err(Error::InvalidParameter(format!(
                "rho must lie in [-1, 1], got {}",
                self.rho
            )));
        }
        Ok(())
    }

    /// Diagnostic only; pricing does not require it.
    pub fn feller_satisfied(&self) -> bool {
        2.0 * self.kappa * self.theta >= self.sigma * self.sigma
    }

    pub fn sqrt_theta(&self) -> f64 {
        self.theta.sqrt()
    }
}

/// Per-day observables of the underlying.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketState {
    pub date: NaiveDate,
    pub spot: f64,
    pub log_price: f64,
    pub rate: f64,
    pub dividend_yield: f64,
}

impl MarketState {
    pub fn new(date: NaiveDate, spot: f64, rate: f64, dividend_yield: f64) -> Result<Self> {
        if !(spot.is_finite() && spot > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "spot must be > 0, got {spot}"
            )));
        }
        if !rate.is_finite() || !dividend_yield.is_finite() {
            return Err(Error::InvalidParameter(
                "rate and dividend yield must be finite".into(),
            ));
        }
        Ok(MarketState {
            date,
            spot,
            log_price: spot.ln(),
            rate,
            dividend_yield,
        })
    }

    /// Same day and spot, different discount rate (rates are matched per maturity).
    pub fn with_rate(&self, rate: f64) -> Self {
        MarketState { rate, ..*self }
    }

    /// Spot, rates and date of the reference study (S&P 500, 3 March 2014).
    pub fn sp500_reference() -> Self {
        let date = NaiveDate::from_ymd_opt(2014, 3, 3).expect("valid date");
        MarketState::new(date, 1845.73, 0.00167, 0.01894).expect("valid state")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OptionKind {
    Call,
    Put,
}

impl OptionKind {
    /// The selector ε: +1 for calls, −1 for puts.
    pub fn epsilon(self) -> f64 {
        match self {
            OptionKind::Call => 1.0,
            OptionKind::Put => -1.0,
        }
    }

    pub fn from_epsilon(eps: i32) -> Result<Self> {
        match eps {
            1 => Ok(OptionKind::Call),
            -1 => Ok(OptionKind::Put),
            other => Err(Error::InvalidParameter(format!(
                "epsilon must be +1 or -1, got {other}"
            ))),
        }
    }
}

/// European contract: kind, strike and maturity in years.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptionSpec {
    pub kind: OptionKind,
    pub strike: f64,
    pub log_strike: f64,
    pub maturity: f64,
}

impl OptionSpec {
    pub fn new(kind: OptionKind, strike: f64, maturity: f64) -> Result<Self> {
        if !(strike.is_finite() && strike > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "strike must be > 0, got {strike}"
            )));
        }
        if !(maturity.is_finite() && maturity > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "maturity must be > 0, got {maturity}"
            )));
        }
        Ok(OptionSpec {
            kind,
            strike,
            log_strike: strike.ln(),
            maturity,
        })
    }

    pub fn call(strike: f64, maturity: f64) -> Result<Self> {
        Self::new(OptionKind::Call, strike, maturity)
    }

    pub fn put(strike: f64, maturity: f64) -> Result<Self> {
        Self::new(OptionKind::Put, strike, maturity)
    }

    pub fn with_kind(&self, kind: OptionKind) -> Self {
        OptionSpec { kind, ..*self }
    }

    pub fn epsilon(&self) -> f64 {
        self.kind.epsilon()
    }
}

/// Damping factor and instantaneous variance entering the damped integrand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DampedIntegrandParams {
    pub alpha: f64,
    pub variance: f64,
}

impl DampedIntegrandParams {
    pub fn new(alpha: f64, variance: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha must be > 0, got {alpha}"
            )));
        }
        check_variance(variance)?;
        Ok(DampedIntegrandParams { alpha, variance })
    }

    pub fn volatility(&self) -> f64 {
        self.variance.sqrt()
    }
}

pub(crate) fn check_variance(v: f64) -> Result<()> {
    if !(v.is_finite() && v >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "variance must be >= 0, got {v}"
        )));
    }
    Ok(())
}

/// Damping factor used throughout the reference study.
pub const DEFAULT_ALPHA: f64 = 1.5;

/// Calendar-day convention for maturities.
pub const DAYS_PER_YEAR: f64 = 365.0;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_domain_params() {
        assert!(ModelParams::new(0.0, 0.04, 0.5, 0.0).is_err());
        assert!(ModelParams::new(1.0, -0.04, 0.5, 0.0).is_err());
        assert!(ModelParams::new(1.0, 0.04, 0.0, 0.0).is_err());
        assert!(ModelParams::new(1.0, 0.04, 0.5, 1.5).is_err());
        assert!(ModelParams::new(1.0, 0.04, 0.5, -1.0).is_ok());
        assert!(ModelParams::new(f64::NAN, 0.04, 0.5, 0.0).is_err());
    }

    #[test]
    fn feller_flag() {
        // 2 * 5.07 * 0.0457 = 0.463 > 0.2304
        assert!(ModelParams::sp500().feller_satisfied());
        assert!(!ModelParams::new(1.0, 0.01, 1.0, 0.0).unwrap().feller_satisfied());
    }

    #[test]
    fn log_price_matches_spot() {
        let s = MarketState::sp500_reference();
        assert_eq!(s.log_price, s.spot.ln());
        assert!(MarketState::new(s.date, 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn option_spec_validation() {
        assert!(OptionSpec::call(-1.0, 0.1).is_err());
        assert!(OptionSpec::call(100.0, 0.0).is_err());
        let o = OptionSpec::put(100.0, 0.5).unwrap();
        assert_eq!(o.epsilon(), -1.0);
        assert_eq!(o.log_strike, 100f64.ln());
        assert!(OptionKind::from_epsilon(0).is_err());
        assert_eq!(OptionKind::from_epsilon(1).unwrap(), OptionKind::Call);
    }
}
