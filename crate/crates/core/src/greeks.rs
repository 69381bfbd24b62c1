//! Analytic first-order sensitivities of the Heston price to the five hidden
//! parameters `(σ₀, κ, √θ, σ, ρ)`.
//!
//! Since the damped integrand is proportional to the characteristic
//! function, `∂ê/∂γ = 𝔣_γ ê` with `𝔣_γ = ∂ log f / ∂γ` evaluated at the
//! shifted frequency. `𝔣_γ = ∂C/∂γ + v ∂D/∂γ`, with the partials of the
//! little-trap coefficients obtained by differentiating through
//! `Q, d, c, e^{−dτ}` (see [`cd_partials`]).

use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::heston::{cd_terms, integrate_damped, CdTerms};
use crate::params::{check_variance, MarketState, ModelParams, OptionSpec};
use crate::quadrature::QuadratureConfig;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// A hidden parameter of the model, in canonical Fisher order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Parameter {
    /// Instantaneous volatility σ₀ = √v.
    Sigma0,
    Kappa,
    SqrtTheta,
    Sigma,
    Rho,
}

impl Parameter {
    pub const ALL: [Parameter; 5] = [
        Parameter::Sigma0,
        Parameter::Kappa,
        Parameter::SqrtTheta,
        Parameter::Sigma,
        Parameter::Rho,
    ];

    /// The four parameters shared across days.
    pub const SHARED: [Parameter; 4] = [
        Parameter::Kappa,
        Parameter::SqrtTheta,
        Parameter::Sigma,
        Parameter::Rho,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            Parameter::Sigma0 => "sigma0",
            Parameter::Kappa => "kappa",
            Parameter::SqrtTheta => "sqrt_theta",
            Parameter::Sigma => "sigma",
            Parameter::Rho => "rho",
        }
    }

    pub fn parse(s: &str) -> Option<Parameter> {
        Parameter::ALL.into_iter().find(|p| p.label() == s).or(match s {
            "vega" | "sigma_0" => Some(Parameter::Sigma0),
            "sqrttheta" => Some(Parameter::SqrtTheta),
            _ => None,
        })
    }

    /// Current value of this parameter given the variance and model.
    pub fn value(self, variance: f64, params: &ModelParams) -> f64 {
        match self {
            Parameter::Sigma0 => variance.sqrt(),
            Parameter::Kappa => params.kappa,
            Parameter::SqrtTheta => params.theta.sqrt(),
            Parameter::Sigma => params.sigma,
            Parameter::Rho => params.rho,
        }
    }

    /// Returns `(variance, params)` with this parameter replaced by `value`.
    pub fn with_value(self, value: f64, variance: f64, params: &ModelParams) -> (f64, ModelParams) {
        let mut p = *params;
        let mut v = variance;
        match self {
            Parameter::Sigma0 => v = value * value,
            Parameter::Kappa => p.kappa = value,
            Parameter::SqrtTheta => p.theta = value * value,
            Parameter::Sigma => p.sigma = value,
            Parameter::Rho => p.rho = value,
        }
        (v, p)
    }
}

impl fmt::Display for Parameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// `∇_Θ E` in the order `(σ₀, κ, √θ, σ, ρ)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GreekVector {
    pub d_sigma0: f64,
    pub d_kappa: f64,
    pub d_sqrt_theta: f64,
    pub d_sigma: f64,
    pub d_rho: f64,
}

impl GreekVector {
    pub fn from_array(a: [f64; 5]) -> Self {
        GreekVector {
            d_sigma0: a[0],
            d_kappa: a[1],
            d_sqrt_theta: a[2],
            d_sigma: a[3],
            d_rho: a[4],
        }
    }

    pub fn to_array(&self) -> [f64; 5] {
        [
            self.d_sigma0,
            self.d_kappa,
            self.d_sqrt_theta,
            self.d_sigma,
            self.d_rho,
        ]
    }

    pub fn get(&self, p: Parameter) -> f64 {
        self.to_array()[p.index()]
    }

    /// `(∂κ, ∂√θ, ∂σ, ∂ρ)`.
    pub fn shared(&self) -> [f64; 4] {
        [self.d_kappa, self.d_sqrt_theta, self.d_sigma, self.d_rho]
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|x| x.is_finite())
    }
}

impl std::ops::Add for GreekVector {
    type Output = GreekVector;
    fn add(self, o: GreekVector) -> GreekVector {
        let (a, b) = (self.to_array(), o.to_array());
        GreekVector::from_array(std::array::from_fn(|i| a[i] + b[i]))
    }
}

impl std::iter::Sum for GreekVector {
    fn sum<It: Iterator<Item = GreekVector>>(iter: It) -> Self {
        iter.fold(GreekVector::default(), |a, b| a + b)
    }
}

/// Raw model coordinates the coefficients are differentiated in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Raw {
    Kappa,
    Theta,
    Sigma,
    Rho,
}

/// `(∂C/∂γ, ∂D/∂γ)` for a raw coordinate γ.
pub(crate) fn cd_partials(t: &CdTerms, raw: Raw, tau: f64, params: &ModelParams) -> Result<(Complex64, Complex64)> {
    let ModelParams {
        kappa,
        theta,
        sigma,
        rho,
    } = *params;
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let (dq, dsig) = match raw {
        Raw::Kappa => (one, 0.0),
        Raw::Theta => (zero, 0.0),
        Raw::Sigma => (-I * rho * t.u, 1.0),
        Raw::Rho => (-I * sigma * t.u, 0.0),
    };
    let dkt = match raw {
        Raw::Kappa => theta,
        Raw::Theta => kappa,
        _ => 0.0,
    };
    if raw == Raw::Theta {
        // θ enters only through the κθ prefactor of C
        return Ok((kappa * t.h, zero));
    }
    if t.d.norm() == 0.0 {
        return Err(Error::DomainEvaluation {
            phi: format!("{}", t.u),
            reason: "d vanishes; derivative undefined".into(),
        });
    }
    let dd = (t.q * dq + sigma * dsig * t.p) / t.d;
    let da = dq + dd;
    let dg = t.p * da / (t.a * t.a);
    let dc = t.c * (2.0 * dsig / sigma - 2.0 * da / t.a);
    let de = -tau * dd * t.e;
    let d_one_minus_e = -de;
    let d_one_minus_ce = -(dc * t.e + t.c * de);
    let ratio = t.one_minus_e / t.one_minus_ce;
    let d_ratio = (d_one_minus_e * t.one_minus_ce - t.one_minus_e * d_one_minus_ce)
        / (t.one_minus_ce * t.one_minus_ce);
    let d_big_d = dg * ratio + t.g * d_ratio;
    let d_log = d_one_minus_ce / t.one_minus_ce + dc / (one - t.c);
    let s2 = sigma * sigma;
    let dh = dg * tau - 2.0 * d_log / s2 + 4.0 * t.log_term * dsig / (s2 * sigma);
    let d_big_c = dkt * t.h + kappa * theta * dh;
    Ok((d_big_c, d_big_d))
}

/// `𝔣_γ` from precomputed coefficient terms.
pub(crate) fn log_cf_derivative_terms(
    param: Parameter,
    t: &CdTerms,
    variance: f64,
    tau: f64,
    params: &ModelParams,
) -> Result<Complex64> {
    let raw = |r: Raw| -> Result<Complex64> {
        let (dc, dd) = cd_partials(t, r, tau, params)?;
        Ok(dc + dd * variance)
    };
    match param {
        Parameter::Sigma0 => Ok(2.0 * variance.sqrt() * t.big_d),
        Parameter::Kappa => raw(Raw::Kappa),
        Parameter::SqrtTheta => Ok(2.0 * params.theta.sqrt() * raw(Raw::Theta)?),
        Parameter::Sigma => raw(Raw::Sigma),
        Parameter::Rho => raw(Raw::Rho),
    }
}

/// `𝔣_γ(φ) = ∂ log f(φ, x, v, τ)/∂γ`. Pass the shifted frequency
/// `φ − i(εα + 1)` to obtain the Greek integrand factor.
pub fn log_cf_derivative(
    param: Parameter,
    phi: Complex64,
    state: &MarketState,
    variance: f64,
    tau: f64,
    params: &ModelParams,
) -> Result<Complex64> {
    check_variance(variance)?;
    params.validate()?;
    let t = cd_terms(phi, tau, params, state.rate, state.dividend_yield)?;
    log_cf_derivative_terms(param, &t, variance, tau, params)
}

/// `∂E/∂γ` by adaptive quadrature of the Greek integrand.
pub fn greek_direct(
    param: Parameter,
    spec: &OptionSpec,
    state: &MarketState,
    variance: f64,
    params: &ModelParams,
    alpha: f64,
    quad: &QuadratureConfig,
) -> Result<f64> {
    let tau = spec.maturity;
    integrate_damped(spec, state, variance, params, alpha, quad, |t| {
        log_cf_derivative_terms(param, t, variance, tau, params)
    })
}

/// All five Greeks in canonical order.
pub fn greek_vector(
    spec: &OptionSpec,
    state: &MarketState,
    variance: f64,
    params: &ModelParams,
    alpha: f64,
    quad: &QuadratureConfig,
) -> Result<GreekVector> {
    let mut out = [0.0; 5];
    for p in Parameter::ALL {
        out[p.index()] = greek_direct(p, spec, state, variance, params, alpha, quad)?;
    }
    Ok(GreekVector::from_array(out))
}
