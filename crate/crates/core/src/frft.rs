//! Simpson-weighted Carr–Madan sums evaluated on a whole log-strike grid
//! with the fractional FFT.
//!
//! The frequency grid is `φ_j = jη`, the log-strike grid
//! `k_u = −b + uλ + x` with `b = Nλ/2`, and `β = λη` is free (the plain
//! FFT forces `β = 2π/N`). With
//! `x_j = w_j e^{i(b−x)φ_j} 𝔣_γ(φ_j − i(εα+1)) ê(ε, φ_j)`,
//!
//! ```text
//! E(k_u) ≈ (e^{−εα k_u} η / π) Re Σ_j e^{−iβuj} x_j
//! ```
//!
//! and the sum is one FRFT of length N computed through three FFTs of
//! length 2N. The real part is taken after the transform.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::Radix2;
use crate::greeks::{log_cf_derivative_terms, Parameter};
use crate::heston::{cd_terms, check_denominator, shifted_frequency, CdTerms};
use crate::params::{check_variance, MarketState, ModelParams, DEFAULT_ALPHA};

/// Composite Simpson weights `w_0 = w_{N−1} = 1/3`, `4/3` at odd `j`,
/// `2/3` at even `j`.
pub fn simpson_weights(n_points: usize) -> Vec<f64> {
    (0..n_points)
        .map(|j| {
            if j == 0 || j + 1 == n_points {
                1.0 / 3.0
            } else if j % 2 == 1 {
                4.0 / 3.0
            } else {
                2.0 / 3.0
            }
        })
        .collect()
}

/// Trapezoid weights `w_0 = w_{N−1} = 1/2`, `1` elsewhere.
pub fn trapezoid_weights(n_points: usize) -> Vec<f64> {
    (0..n_points)
        .map(|j| if j == 0 || j + 1 == n_points { 0.5 } else { 1.0 })
        .collect()
}

/// Node weights of the frequency-axis quadrature.
///
/// Simpson's alternating 4/3, 2/3 pattern contains a sub-rule of step 2η,
/// which aliases the damped price with period π/η in log-strike instead of
/// 2π/η. For calls the resulting offset is about `S e^{−απ/η}/3`
/// (≈ 4.7e−3 at η = 0.4, α = 1.5); the trapezoid rule pushes it to
/// `S e^{−2απ/η}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NodeWeights {
    #[default]
    Simpson,
    Trapezoid,
}

impl NodeWeights {
    pub fn weights(self, n_points: usize) -> Vec<f64> {
        match self {
            NodeWeights::Simpson => simpson_weights(n_points),
            NodeWeights::Trapezoid => trapezoid_weights(n_points),
        }
    }
}

/// Grid sizes of the fractional FFT.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrftConfig {
    pub n_points: usize,
    pub eta: f64,
    pub lambda: f64,
    pub alpha: f64,
    pub weights: NodeWeights,
}

impl Default for FrftConfig {
    /// `N = 2¹¹, η = 0.4, λ = 3.6549e−4, α = 1.5`.
    fn default() -> Self {
        FrftConfig {
            n_points: 1 << 11,
            eta: 0.4,
            lambda: 3.6549e-4,
            alpha: DEFAULT_ALPHA,
            weights: NodeWeights::Simpson,
        }
    }
}

impl FrftConfig {
    pub fn new(n_points: usize, eta: f64, lambda: f64, alpha: f64) -> Result<Self> {
        let c = FrftConfig {
            n_points,
            eta,
            lambda,
            alpha,
            weights: NodeWeights::Simpson,
        };
        c.validate()?;
        Ok(c)
    }

    /// Configuration with `λη = 2π/N`, where the FRFT reduces to a plain FFT.
    pub fn fft_compatible(n_points: usize, eta: f64, alpha: f64) -> Result<Self> {
        Self::new(
            n_points,
            eta,
            2.0 * std::f64::consts::PI / (n_points as f64 * eta),
            alpha,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_points < 4 || !self.n_points.is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "grid size must be a power of two >= 4, got {}",
                self.n_points
            )));
        }
        for (name, v) in [("eta", self.eta), ("lambda", self.lambda), ("alpha", self.alpha)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be > 0, got {v}")));
            }
        }
        Ok(())
    }

    pub fn with_weights(mut self, weights: NodeWeights) -> Self {
        self.weights = weights;
        self
    }

    pub fn beta(&self) -> f64 {
        self.lambda * self.eta
    }

    /// Half-width `b = Nλ/2` of the log-strike grid.
    pub fn half_width(&self) -> f64 {
        self.n_points as f64 * self.lambda / 2.0
    }

    pub fn frequencies(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_points).map(move |j| j as f64 * self.eta)
    }
}

/// Log-strikes `k_u = −b + uλ + x` and strikes `e^{k_u}`.
#[derive(Debug, Clone, PartialEq)]
pub struct StrikeGrid {
    pub log_strikes: Vec<f64>,
    pub strikes: Vec<f64>,
    pub lambda: f64,
}

impl StrikeGrid {
    pub fn new(config: &FrftConfig, log_price: f64) -> Self {
        let b = config.half_width();
        let log_strikes: Vec<f64> = (0..config.n_points)
            .map(|u| -b + u as f64 * config.lambda + log_price)
            .collect();
        let strikes = log_strikes.iter().map(|k| k.exp()).collect();
        StrikeGrid {
            log_strikes,
            strikes,
            lambda: config.lambda,
        }
    }

    pub fn len(&self) -> usize {
        self.log_strikes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_strikes.is_empty()
    }

    /// Index of the grid point within `tol` of `log_strike`, if any.
    pub fn locate(&self, log_strike: f64, tol: f64) -> Option<usize> {
        let first = *self.log_strikes.first()?;
        let pos = ((log_strike - first) / self.lambda).round();
        if pos < 0.0 || pos >= self.len() as f64 {
            return None;
        }
        let u = pos as usize;
        ((self.log_strikes[u] - log_strike).abs() <= tol).then_some(u)
    }
}

/// Reusable fractional FFT of fixed length and `β`:
/// `out_u = Σ_j e^{iβuj} in_j`.
///
/// Uses `uj = (u² + j² − (u − j)²)/2`: the input is pre-multiplied by the
/// chirp `e^{iβj²/2}`, circularly convolved (length 2N) with
/// `e^{−iβm²/2}` over lags `m ∈ (−N, N)`, and post-multiplied by
/// `e^{iβu²/2}`.
#[derive(Debug, Clone)]
pub struct FrftPlan {
    n: usize,
    beta: f64,
    chirp: Vec<Complex64>,
    kernel_hat: Vec<Complex64>,
    fft: Radix2,
}

impl FrftPlan {
    pub fn new(n: usize, beta: f64) -> Self {
        assert!(n.is_power_of_two(), "FRFT length must be a power of two, got {n}");
        let fft = Radix2::new(2 * n);
        let chirp: Vec<Complex64> = (0..n)
            .map(|j| Complex64::from_polar(1.0, 0.5 * beta * (j as f64) * (j as f64)))
            .collect();
        let mut kernel = vec![Complex64::new(0.0, 0.0); 2 * n];
        for j in 0..n {
            kernel[j] = chirp[j].conj();
        }
        for j in 1..n {
            // lag −j lives at index 2N − j
            kernel[2 * n - j] = chirp[j].conj();
        }
        fft.forward(&mut kernel);
        FrftPlan {
            n,
            beta,
            chirp,
            kernel_hat: kernel,
            fft,
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn execute(&self, input: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(input.len(), self.n, "FRFT input length");
        let n = self.n;
        let mut y = vec![Complex64::new(0.0, 0.0); 2 * n];
        for j in 0..n {
            y[j] = input[j] * self.chirp[j];
        }
        self.fft.forward(&mut y);
        for (a, b) in y.iter_mut().zip(&self.kernel_hat) {
            *a *= b;
        }
        self.fft.inverse(&mut y);
        y.truncate(n);
        for (u, z) in y.iter_mut().enumerate() {
            *z *= self.chirp[u];
        }
        y
    }
}

/// `out_u = Σ_j e^{iβuj} x_j` for `u = 0..N−1`; `N` must be a power of two.
pub fn frft(x: &[Complex64], beta: f64) -> Vec<Complex64> {
    FrftPlan::new(x.len(), beta).execute(x)
}

/// Precomputed v-independent parts of the Carr–Madan grid sum for one
/// `(ε, day, τ, model, grid)`. Re-pricing at a new variance costs one
/// complex exponential per node and one FRFT.
#[derive(Debug, Clone)]
pub struct GridPricer {
    epsilon: f64,
    config: FrftConfig,
    tau: f64,
    params: ModelParams,
    grid: StrikeGrid,
    /// `w_j e^{−rτ} e^{ibφ_j} e^{C_j} / den_j`
    base: Vec<Complex64>,
    big_d: Vec<Complex64>,
    terms: Vec<CdTerms>,
    /// `e^{(εα+1)x − εα k_u} η/π`
    scale: Vec<f64>,
    plan: FrftPlan,
}

impl GridPricer {
    pub fn new(
        epsilon: f64,
        state: &MarketState,
        tau: f64,
        params: &ModelParams,
        config: &FrftConfig,
    ) -> Result<Self> {
        config.validate()?;
        params.validate()?;
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::InvalidParameter(format!("maturity must be > 0, got {tau}")));
        }
        let n = config.n_points;
        let alpha = config.alpha;
        let b = config.half_width();
        let weights = config.weights.weights(n);
        let disc = (-state.rate * tau).exp();
        let mut base = Vec::with_capacity(n);
        let mut big_d = Vec::with_capacity(n);
        let mut terms = Vec::with_capacity(n);
        for (j, phi) in config.frequencies().enumerate() {
            let den = check_denominator(epsilon, alpha, phi)?;
            let u = shifted_frequency(epsilon, alpha, phi);
            let t = cd_terms(u, tau, params, state.rate, state.dividend_yield)?;
            let phase = Complex64::from_polar(1.0, b * phi);
            base.push(weights[j] * disc * phase * t.big_c.exp() / den);
            big_d.push(t.big_d);
            terms.push(t);
        }
        let grid = StrikeGrid::new(config, state.log_price);
        let lead = (epsilon * alpha + 1.0) * state.log_price;
        let scale = grid
            .log_strikes
            .iter()
            .map(|k| (lead - epsilon * alpha * k).exp() * config.eta / std::f64::consts::PI)
            .collect();
        Ok(GridPricer {
            epsilon,
            config: *config,
            tau,
            params: *params,
            grid,
            base,
            big_d,
            terms,
            scale,
            plan: FrftPlan::new(n, -config.beta()),
        })
    }

    pub fn grid(&self) -> &StrikeGrid {
        &self.grid
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn maturity(&self) -> f64 {
        self.tau
    }

    fn nodes(&self, variance: f64) -> Vec<Complex64> {
        self.base
            .iter()
            .zip(&self.big_d)
            .map(|(b, d)| b * (d * variance).exp())
            .collect()
    }

    fn transform(&self, x: &[Complex64]) -> Result<Vec<f64>> {
        let out = self.plan.execute(x);
        let v: Vec<f64> = out.iter().zip(&self.scale).map(|(z, s)| s * z.re).collect();
        if v.iter().any(|p| !p.is_finite()) {
            return Err(Error::DomainEvaluation {
                phi: "grid".into(),
                reason: "non-finite grid value".into(),
            });
        }
        Ok(v)
    }

    /// Prices at every grid strike.
    pub fn prices(&self, variance: f64) -> Result<Vec<f64>> {
        check_variance(variance)?;
        self.transform(&self.nodes(variance))
    }

    /// `∂E/∂γ` at every grid strike.
    pub fn greeks(&self, param: Parameter, variance: f64) -> Result<Vec<f64>> {
        check_variance(variance)?;
        let mut x = self.nodes(variance);
        for (xj, t) in x.iter_mut().zip(&self.terms) {
            *xj *= log_cf_derivative_terms(param, t, variance, self.tau, &self.params)?;
        }
        self.transform(&x)
    }

    /// The grid sum evaluated with a plain length-N FFT. Only valid when
    /// `λη = 2π/N`.
    pub fn prices_fft(&self, variance: f64) -> Result<Vec<f64>> {
        let n = self.config.n_points as f64;
        let target = 2.0 * std::f64::consts::PI / n;
        if ((self.config.beta() - target) / target).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "plain FFT needs lambda*eta = 2pi/N, got {}",
                self.config.beta()
            )));
        }
        let mut x = self.nodes(variance);
        Radix2::new(self.config.n_points).forward(&mut x);
        let v = x.iter().zip(&self.scale).map(|(z, s)| s * z.re).collect();
        Ok(v)
    }
}

/// Prices on the whole strike grid.
pub fn price_grid(
    epsilon: f64,
    state: &MarketState,
    variance: f64,
    tau: f64,
    params: &ModelParams,
    config: &FrftConfig,
) -> Result<(StrikeGrid, Vec<f64>)> {
    let pricer = GridPricer::new(epsilon, state, tau, params, config)?;
    let prices = pricer.prices(variance)?;
    Ok((pricer.grid, prices))
}

/// `∂E/∂γ` on the whole strike grid.
pub fn greek_grid(
    param: Parameter,
    epsilon: f64,
    state: &MarketState,
    variance: f64,
    tau: f64,
    params: &ModelParams,
    config: &FrftConfig,
) -> Result<(StrikeGrid, Vec<f64>)> {
    let pricer = GridPricer::new(epsilon, state, tau, params, config)?;
    let values = pricer.greeks(param, variance)?;
    Ok((pricer.grid, values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heston::price_direct;
    use crate::params::OptionSpec;
    use crate::quadrature::QuadratureConfig;

    fn naive(x: &[Complex64], beta: f64) -> Vec<Complex64> {
        (0..x.len())
            .map(|u| {
                x.iter()
                    .enumerate()
                    .map(|(j, &v)| v * Complex64::from_polar(1.0, beta * (u * j) as f64))
                    .sum()
            })
            .collect()
    }

    #[test]
    fn weights_follow_simpson_rule() {
        let third = 1.0 / 3.0;
        assert_eq!(simpson_weights(6), vec![third, 4.0 * third, 2.0 * third, 4.0 * third, 2.0 * third, third]);
        assert_eq!(simpson_weights(4), vec![third, 4.0 * third, 2.0 * third, third]);
        let n = 1 << 11;
        let eta = 0.4;
        let len = (n - 1) as f64 * eta;
        let total: f64 = simpson_weights(n).iter().sum::<f64>() * eta;
        assert!((total - len).abs() <= eta, "{total} vs {len}");
    }

    #[test]
    fn impulse_maps_to_ones() {
        let mut x = vec![Complex64::new(0.0, 0.0); 32];
        x[0] = Complex64::new(1.0, 0.0);
        for beta in [0.01, 0.7, -2.3] {
            for z in frft(&x, beta) {
                assert!((z - Complex64::new(1.0, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn matches_naive_sum() {
        let x: Vec<Complex64> = (0..64)
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let got = frft(&x, 0.01);
        let want = naive(&x, 0.01);
        let scale = want.iter().map(|z| z.norm()).fold(0.0, f64::max);
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).norm() <= 1e-10 * scale);
        }
    }

    #[test]
    fn reduces_to_inverse_dft() {
        let n = 64;
        let x: Vec<Complex64> = (0..n).map(|i| Complex64::new(i as f64, -(i as f64) * 0.5)).collect();
        let got = frft(&x, 2.0 * std::f64::consts::PI / n as f64);
        let mut want = x.clone();
        Radix2::new(n).inverse_unnormalized(&mut want);
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).norm() <= 1e-10 * b.norm().max(1.0));
        }
    }

    #[test]
    fn reference_grid_geometry() {
        let cfg = FrftConfig::default();
        let s = MarketState::sp500_reference();
        let g = StrikeGrid::new(&cfg, s.log_price);
        assert_eq!(g.log_strikes[cfg.n_points / 2], s.log_price);
        let mid = cfg.n_points / 2;
        let inc = g.strikes[mid + 1] - g.strikes[mid];
        assert!((inc - 0.68).abs() < 0.01, "{inc}");
        assert!((g.strikes[0] - 1269.5).abs() < 0.5, "{}", g.strikes[0]);
        assert!((g.strikes[cfg.n_points - 1] - 2683.5).abs() < 1.5, "{}", g.strikes[cfg.n_points - 1]);
        assert_eq!(g.locate(s.log_price, 1e-12), Some(mid));
        assert_eq!(g.locate(s.log_price + 0.4 * cfg.lambda, 1e-9), None);
    }

    #[test]
    fn simpson_grid_carries_the_half_period_alias() {
        let cfg = FrftConfig::default();
        let s = MarketState::sp500_reference();
        let m = ModelParams::sp500();
        let tau = 30.0 / 365.0;
        let (grid, prices) = price_grid(1.0, &s, 0.0108, tau, &m, &cfg).unwrap();
        let mid = cfg.n_points / 2;
        let spec = OptionSpec::call(grid.strikes[mid], tau).unwrap();
        let d = price_direct(&spec, &s, 0.0108, &m, cfg.alpha, &QuadratureConfig::default()).unwrap();
        let predicted = s.spot * (-s.dividend_yield * tau).exp() * (-cfg.alpha * std::f64::consts::PI / cfg.eta).exp() / 3.0;
        assert!(((d - prices[mid]) - predicted).abs() < 1e-2 * predicted, "{} vs {predicted}", d - prices[mid]);
    }

    #[test]
    fn grid_matches_direct_near_the_money() {
        let cfg = FrftConfig::default().with_weights(NodeWeights::Trapezoid);
        let s = MarketState::sp500_reference();
        let m = ModelParams::sp500();
        let tau = 30.0 / 365.0;
        let (grid, prices) = price_grid(1.0, &s, 0.0108, tau, &m, &cfg).unwrap();
        let mid = cfg.n_points / 2;
        let quad = QuadratureConfig::default();
        for u in [mid - 100, mid - 7, mid, mid + 33, mid + 99] {
            let spec = OptionSpec::call(grid.strikes[u], tau).unwrap();
            let d = price_direct(&spec, &s, 0.0108, &m, cfg.alpha, &quad).unwrap();
            assert!(((prices[u] - d) / d).abs() < 1e-6, "u={u}: grid {} direct {d}", prices[u]);
        }
    }

    #[test]
    fn fft_path_agrees_with_frft_at_restricted_beta() {
        let cfg = FrftConfig::fft_compatible(1 << 10, 0.25, 1.5).unwrap();
        let s = MarketState::sp500_reference();
        let m = ModelParams::sp500();
        let pricer = GridPricer::new(1.0, &s, 0.25, &m, &cfg).unwrap();
        let a = pricer.prices(0.03).unwrap();
        let b = pricer.prices_fft(0.03).unwrap();
        // compare within one unit of log-moneyness; the damping factor
        // e^{-αk} amplifies roundoff by e^{αb} at the far grid ends
        for (u, (x, y)) in a.iter().zip(&b).enumerate() {
            if (pricer.grid().log_strikes[u] - s.log_price).abs() < 1.0 {
                assert!((x - y).abs() <= 1e-10 * s.spot, "u={u}: {x} vs {y}");
            }
        }
        let bad = GridPricer::new(1.0, &s, 0.25, &m, &FrftConfig::default()).unwrap();
        assert!(bad.prices_fft(0.03).is_err());
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(FrftConfig::new(12, 0.4, 1e-3, 1.5).is_err());
        assert!(FrftConfig::new(2, 0.4, 1e-3, 1.5).is_err());
        assert!(FrftConfig::new(16, -0.4, 1e-3, 1.5).is_err());
        let s = MarketState::sp500_reference();
        let pole = FrftConfig::new(16, 0.4, 1e-3, 1.0).unwrap();
        assert!(matches!(
            price_grid(-1.0, &s, 0.01, 0.1, &ModelParams::sp500(), &pole),
            Err(Error::ZeroDenominator { .. })
        ));
    }
}
