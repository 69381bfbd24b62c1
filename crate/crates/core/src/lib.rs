//! Heston option pricing by fractional FFT, analytic Heston Greeks, and
//! Fisher-information bounds on the volatility inferred from option prices.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod config;
pub mod error;
pub mod fft;
pub mod fisher;
pub mod frft;
pub mod greeks;
pub mod heston;
pub mod market_data;
pub mod params;
pub mod quadrature;
pub mod variance_swap;

pub use error::{Error, Result};
pub use params::{DampedIntegrandParams, MarketState, ModelParams, OptionKind, OptionSpec};
pub use quadrature::QuadratureConfig;
