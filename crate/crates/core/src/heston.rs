//! Heston characteristic function in the little-trap form and the
//! Carr–Madan damped integrand, plus a direct-quadrature reference pricer.
//!
//! With `u` the (complex) frequency,
//!
//! ```text
//! Q = κ − iρσu,   d = √(Q² + σ²(iu + u²)),   c = (Q − d)/(Q + d)
//! C = i(r − q)uτ + (κθ/σ²)[(Q − d)τ − 2 log((1 − c e^{−dτ})/(1 − c))]
//! D = ((Q − d)/σ²)(1 − e^{−dτ})/(1 − c e^{−dτ})
//! ```
//!
//! `d` takes the principal square root; in this form the principal branch
//! of the logarithm stays continuous in τ. `Q − d` is evaluated as
//! `−σ²(iu + u²)/(Q + d)`, which is the same quantity without the
//! cancellation that appears as σ → 0.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::params::{check_variance, MarketState, ModelParams, OptionSpec};
use crate::quadrature::{integrate_half_line, QuadratureConfig};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// e^z − 1 without cancellation for small |z|.
pub(crate) fn expm1c(z: Complex64) -> Complex64 {
    let (a, b) = (z.re, z.im);
    let s = (0.5 * b).sin();
    Complex64::new(a.exp_m1() * b.cos() - 2.0 * s * s, a.exp() * b.sin())
}

/// Principal log(1 + w) without cancellation for small |w|.
pub(crate) fn log1pc(w: Complex64) -> Complex64 {
    let (a, b) = (w.re, w.im);
    let re = 0.5 * (2.0 * a + a * a + b * b).ln_1p();
    Complex64::new(re, b.atan2(1.0 + a))
}

/// Intermediate quantities of the little-trap coefficients; the Greek
/// module differentiates through these.
#[derive(Debug, Clone, Copy)]
pub(crate) struct CdTerms {
    pub u: Complex64,
    /// iu + u²
    pub p: Complex64,
    pub q: Complex64,
    pub d: Complex64,
    /// Q + d
    pub a: Complex64,
    /// (Q − d)/σ²
    pub g: Complex64,
    pub c: Complex64,
    /// e^{−dτ}
    pub e: Complex64,
    /// 1 − e^{−dτ}
    pub one_minus_e: Complex64,
    /// 1 − c e^{−dτ}
    pub one_minus_ce: Complex64,
    /// log((1 − c e^{−dτ})/(1 − c))
    pub log_term: Complex64,
    /// (Q − d)τ/σ² − 2 log(...)/σ², so that C = i(r−q)uτ + κθ·h
    pub h: Complex64,
    pub big_c: Complex64,
    pub big_d: Complex64,
}

fn domain_error(u: Complex64, reason: &str) -> Error {
    Error::DomainEvaluation {
        phi: format!("{u}"),
        reason: reason.to_string(),
    }
}

fn finite(z: Complex64) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

pub(crate) fn cd_terms(
    u: Complex64,
    tau: f64,
    params: &ModelParams,
    rate: f64,
    dividend: f64,
) -> Result<CdTerms> {
    let ModelParams {
        kappa,
        theta,
        sigma,
        rho,
    } = *params;
    let s2 = sigma * sigma;
    let p = I * u + u * u;
    let q = kappa - I * rho * sigma * u;
    let d = (q * q + s2 * p).sqrt();
    let a = q + d;
    if a.norm() == 0.0 {
        return Err(domain_error(u, "Q + d vanishes"));
    }
    let g = -p / a;
    let c = g * s2 / a;
    let one_minus_e = -expm1c(-d * tau);
    let e = Complex64::new(1.0, 0.0) - one_minus_e;
    let one_minus_ce = Complex64::new(1.0, 0.0) - c * e;
    let one_minus_c = Complex64::new(1.0, 0.0) - c;
    if one_minus_ce.norm() == 0.0 || one_minus_c.norm() == 0.0 {
        return Err(domain_error(u, "1 - c e^{-dτ} vanishes"));
    }
    let log_term = log1pc(c * one_minus_e / one_minus_c);
    let h = g * tau - 2.0 * log_term / s2;
    let big_c = I * (rate - dividend) * u * tau + kappa * theta * h;
    let big_d = g * one_minus_e / one_minus_ce;
    if !(finite(big_c) && finite(big_d)) {
        return Err(domain_error(u, "non-finite C or D (overflow in e^{-dτ})"));
    }
    Ok(CdTerms {
        u,
        p,
        q,
        d,
        a,
        g,
        c,
        e,
        one_minus_e,
        one_minus_ce,
        log_term,
        h,
        big_c,
        big_d,
    })
}

/// Little-trap coefficients `(C(φ, τ), D(φ, τ))`.
pub fn cd_coefficients(
    phi: Complex64,
    tau: f64,
    params: &ModelParams,
    rate: f64,
    dividend: f64,
) -> Result<(Complex64, Complex64)> {
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "maturity must be >= 0, got {tau}"
        )));
    }
    params.validate()?;
    let t = cd_terms(phi, tau, params, rate, dividend)?;
    Ok((t.big_c, t.big_d))
}

/// `f(φ, x, v, τ) = exp(C + D v + iφx)`.
pub fn char_fn(
    phi: Complex64,
    state: &MarketState,
    variance: f64,
    tau: f64,
    params: &ModelParams,
) -> Result<Complex64> {
    check_variance(variance)?;
    let (c, d) = cd_coefficients(phi, tau, params, state.rate, state.dividend_yield)?;
    let z = (c + d * variance + I * phi * state.log_price).exp();
    if !finite(z) {
        return Err(domain_error(phi, "characteristic function overflow"));
    }
    Ok(z)
}

/// Denominator `(εα)² + εα − φ² + iφ(2εα + 1)` of the damped integrand.
pub fn damped_denominator(epsilon: f64, alpha: f64, phi: f64) -> Complex64 {
    let ea = epsilon * alpha;
    Complex64::new(ea * ea + ea - phi * phi, phi * (2.0 * ea + 1.0))
}

pub(crate) fn check_denominator(epsilon: f64, alpha: f64, phi: f64) -> Result<Complex64> {
    let den = damped_denominator(epsilon, alpha, phi);
    if den.norm() < 1e-12 {
        return Err(Error::ZeroDenominator { phi });
    }
    Ok(den)
}

/// The shifted argument `φ − i(εα + 1)`.
pub fn shifted_frequency(epsilon: f64, alpha: f64, phi: f64) -> Complex64 {
    Complex64::new(phi, -(epsilon * alpha + 1.0))
}

/// `ê(ε, φ, x, v, τ) = e^{−rτ} f(φ − i(εα+1)) / ((εα)² + εα − φ² + iφ(2εα+1))`.
#[allow(clippy::too_many_arguments)]
pub fn damped_integrand(
    epsilon: f64,
    phi: f64,
    state: &MarketState,
    variance: f64,
    tau: f64,
    params: &ModelParams,
    alpha: f64,
) -> Result<Complex64> {
    let den = check_denominator(epsilon, alpha, phi)?;
    let f = char_fn(
        shifted_frequency(epsilon, alpha, phi),
        state,
        variance,
        tau,
        params,
    )?;
    Ok((-state.rate * tau).exp() * f / den)
}

/// Price of a European option by adaptive quadrature of the damped
/// Fourier integral. Serves as the oracle for the FRFT grid.
pub fn price_direct(
    spec: &OptionSpec,
    state: &MarketState,
    variance: f64,
    params: &ModelParams,
    alpha: f64,
    quad: &QuadratureConfig,
) -> Result<f64> {
    integrate_damped(spec, state, variance, params, alpha, quad, |_| {
        Ok(Complex64::new(1.0, 0.0))
    })
}

/// Shared driver for prices and Greeks: integrates
/// `Re[e^{−ikφ} weight(u) ê(φ)]` where `u` is the shifted frequency.
pub(crate) fn integrate_damped<W>(
    spec: &OptionSpec,
    state: &MarketState,
    variance: f64,
    params: &ModelParams,
    alpha: f64,
    quad: &QuadratureConfig,
    weight: W,
) -> Result<f64>
where
    W: Fn(&CdTerms) -> Result<Complex64>,
{
    check_variance(variance)?;
    params.validate()?;
    if !(alpha > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha must be > 0, got {alpha}"
        )));
    }
    let eps = spec.epsilon();
    let k = spec.log_strike;
    let tau = spec.maturity;
    let x = state.log_price;
    let disc = (-state.rate * tau).exp();
    // e^{−ikφ} e^{iux} with u = φ − i(εα+1): the x-dependent growth
    // e^{(εα+1)x} is folded into the prefactor below.
    let level = (eps * alpha + 1.0) * x - eps * alpha * k;
    let drift = x - k + (state.rate - state.dividend_yield) * tau;
    let integrand = |phi: f64| -> Result<f64> {
        let den = check_denominator(eps, alpha, phi)?;
        let u = shifted_frequency(eps, alpha, phi);
        let t = cd_terms(u, tau, params, state.rate, state.dividend_yield)?;
        let w = weight(&t)?;
        let core = (t.big_c + t.big_d * variance + I * phi * (x - k) + level).exp();
        Ok((w * core * disc / den).re)
    };
    let scale = PI;
    let abs_tol = quad.tol_rel_spot * state.spot * scale;
    let integral = integrate_half_line(integrand, drift.abs(), abs_tol, quad)?;
    let value = integral / scale;
    if !value.is_finite() {
        return Err(Error::Integration { partial: value });
    }
    Ok(value)
}

/// Put price from the matching call: `P = C + e^k e^{−rτ} − e^x e^{−qτ}`.
pub fn put_from_call(call_price: f64, spec: &OptionSpec, state: &MarketState) -> f64 {
    let tau = spec.maturity;
    call_price + spec.log_strike.exp() * (-state.rate * tau).exp()
        - state.log_price.exp() * (-state.dividend_yield * tau).exp()
}
