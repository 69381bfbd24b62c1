//! Run configuration: defaults, a flat `key = value` file format, and a
//! canonical rendering used to fingerprint outputs.
//!
//! ```text
//! # model
//! kappa = 5.07
//! rho = -0.767
//! n = 2048
//! ```

use crate::error::{Error, Result};
use crate::fisher::FisherMode;
use crate::frft::{FrftConfig, NodeWeights};
use crate::params::ModelParams;
use crate::quadrature::QuadratureConfig;

/// Every tunable of a run. Defaults reproduce the reference study.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: ModelParams,
    pub frft: FrftConfig,
    pub quad: QuadratureConfig,
    pub fisher_mode: FisherMode,
    pub seed: u64,
    /// Horizon of the variance swap in calendar days.
    pub swap_days: u32,
    pub spot: f64,
    pub rate: f64,
    pub dividend_yield: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let reference = crate::params::MarketState::sp500_reference();
        RunConfig {
            model: ModelParams::sp500(),
            frft: FrftConfig::default(),
            quad: QuadratureConfig::default(),
            fisher_mode: FisherMode::PerOption,
            seed: 0,
            swap_days: 30,
            spot: reference.spot,
            rate: reference.rate,
            dividend_yield: reference.dividend_yield,
        }
    }
}

/// Keys accepted in a config file.
pub const KEYS: [&str; 17] = [
    "kappa",
    "theta",
    "sigma",
    "rho",
    "alpha",
    "n",
    "eta",
    "lambda",
    "weights",
    "tol",
    "phi_max",
    "fisher_mode",
    "seed",
    "swap_days",
    "spot",
    "rate",
    "dividend_yield",
];

/// `(line, key, value)` entries of a key=value text. Blank lines and `#`
/// comments are skipped; keys must be unique.
pub fn parse_key_values(text: &str) -> Result<Vec<(usize, String, String)>> {
    let mut out: Vec<(usize, String, String)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let err = |message: String| Error::Schema {
            file: "config".into(),
            line,
            message,
        };
        let (k, v) = content
            .split_once('=')
            .ok_or_else(|| err(format!("expected key = value, got `{content}`")))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() || v.is_empty() {
            return Err(err(format!("empty key or value in `{content}`")));
        }
        if out.iter().any(|(_, key, _)| key == k) {
            return Err(err(format!("duplicate key `{k}`")));
        }
        out.push((line, k.to_string(), v.to_string()));
    }
    Ok(out)
}

fn parse_f64(key: &str, value: &str) -> Result<f64> {
    value
        .parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| Error::InvalidParameter(format!("{key}: expected a finite number, got `{value}`")))
}

fn parse_int<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse::<T>()
        .map_err(|_| Error::InvalidParameter(format!("{key}: expected a non-negative integer, got `{value}`")))
}

impl RunConfig {
    /// Sets one key. Values are range-checked by [`RunConfig::validate`].
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "kappa" => self.model.kappa = parse_f64(key, value)?,
            "theta" => self.model.theta = parse_f64(key, value)?,
            "sigma" => self.model.sigma = parse_f64(key, value)?,
            "rho" => self.model.rho = parse_f64(key, value)?,
            "alpha" => self.frft.alpha = parse_f64(key, value)?,
            "n" => self.frft.n_points = parse_int(key, value)?,
            "eta" => self.frft.eta = parse_f64(key, value)?,
            "lambda" => self.frft.lambda = parse_f64(key, value)?,
            "weights" => {
                self.frft.weights = match value {
                    "simpson" => NodeWeights::Simpson,
                    "trapezoid" => NodeWeights::Trapezoid,
                    _ => return Err(Error::InvalidParameter(format!("weights: expected simpson or trapezoid, got `{value}`"))),
                }
            }
            "tol" => self.quad.tol_rel_spot = parse_f64(key, value)?,
            "phi_max" => self.quad.phi_max = parse_f64(key, value)?,
            "fisher_mode" => {
                self.fisher_mode = match value {
                    "per_option" => FisherMode::PerOption,
                    "summed_price" => FisherMode::SummedPrice,
                    _ => {
                        return Err(Error::InvalidParameter(format!(
                            "fisher_mode: expected per_option or summed_price, got `{value}`"
                        )))
                    }
                }
            }
            "seed" => self.seed = parse_int(key, value)?,
            "swap_days" => self.swap_days = parse_int(key, value)?,
            "spot" => self.spot = parse_f64(key, value)?,
            "rate" => self.rate = parse_f64(key, value)?,
            "dividend_yield" => self.dividend_yield = parse_f64(key, value)?,
            _ => return Err(Error::InvalidParameter(format!("unknown config key `{key}`"))),
        }
        Ok(())
    }

    /// Applies a config file on top of `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (line, key, value) in parse_key_values(text)? {
            self.set(&key, &value).map_err(|e| Error::Schema {
                file: "config".into(),
                line,
                message: e.to_string(),
            })?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut c = RunConfig::default();
        c.apply_text(text)?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.frft.validate()?;
        if !(self.quad.tol_rel_spot > 0.0 && self.quad.phi_max > 0.0) {
            return Err(Error::InvalidParameter("tol and phi_max must be > 0".into()));
        }
        if self.swap_days == 0 {
            return Err(Error::InvalidParameter("swap_days must be > 0".into()));
        }
        if !(self.spot > 0.0) {
            return Err(Error::InvalidParameter(format!("spot must be > 0, got {}", self.spot)));
        }
        Ok(())
    }

    /// Every key with its current value, one per line in [`KEYS`] order.
    /// Parsing the result reproduces the configuration.
    pub fn canonical(&self) -> String {
        let weights = match self.frft.weights {
            NodeWeights::Simpson => "simpson",
            NodeWeights::Trapezoid => "trapezoid",
        };
        let mode = match self.fisher_mode {
            FisherMode::PerOption => "per_option",
            FisherMode::SummedPrice => "summed_price",
        };
        let values = [
            self.model.kappa.to_string(),
            self.model.theta.to_string(),
            self.model.sigma.to_string(),
            self.model.rho.to_string(),
            self.frft.alpha.to_string(),
            self.frft.n_points.to_string(),
            self.frft.eta.to_string(),
            self.frft.lambda.to_string(),
            weights.to_string(),
            self.quad.tol_rel_spot.to_string(),
            self.quad.phi_max.to_string(),
            mode.to_string(),
            self.seed.to_string(),
            self.swap_days.to_string(),
            self.spot.to_string(),
            self.rate.to_string(),
            self.dividend_yield.to_string(),
        ];
        KEYS.iter().zip(values).map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}
