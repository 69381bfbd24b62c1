//! Conditional variance moments of the CIR factor and the variance-swap
//! strike `K_var² = (v₀ − θ)(1 − e^{−κT})/(κT) + θ`, read as a model VIX.
//!
//! Reporting in `K_var` is a reparametrization `Λ = (K_var,t) ⊕ (κ, √θ, σ, ρ)`
//! of the panel parameters. With `D = ∂Θ/∂Λ` the information transforms as
//! `J(Λ) = Dᵀ J(Θ) D`; since `D` has a diagonal day block, zero lower-left
//! block and identity shared block, `J(Λ)` keeps the arrow shape.

use chrono::NaiveDate;
use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fisher::{credibility_bands, invert_block_diagonal_entries, BlockFisher, DiagonalInverse};
use crate::params::{ModelParams, DAYS_PER_YEAR};

/// `E[v_t | v_0] = (v₀ − θ)e^{−κt} + θ`.
pub fn expected_variance(v0: f64, t: f64, params: &ModelParams) -> f64 {
    (v0 - params.theta) * (-params.kappa * t).exp() + params.theta
}

/// `ŵ_t = ∫_0^t E[v_s] ds = (v₀ − θ)(1 − e^{−κt})/κ + θt`.
pub fn integrated_variance(v0: f64, t: f64, params: &ModelParams) -> f64 {
    (v0 - params.theta) * one_minus_exp(params.kappa * t) / params.kappa + params.theta * t
}

/// `1 − e^{−x}` without cancellation.
fn one_minus_exp(x: f64) -> f64 {
    -(-x).exp_m1()
}

/// `(1 − e^{−κT})/(κT)`, in (0, 1) for κT > 0.
pub fn averaging_weight(kappa: f64, horizon: f64) -> f64 {
    let x = kappa * horizon;
    if x == 0.0 {
        1.0
    } else {
        one_minus_exp(x) / x
    }
}

/// Horizon and model behind a variance-swap series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwapParams {
    pub horizon: f64,
    pub params: ModelParams,
}

impl SwapParams {
    pub fn new(horizon: f64, params: ModelParams) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::InvalidParameter(format!("swap horizon must be > 0, got {horizon}")));
        }
        params.validate()?;
        Ok(SwapParams { horizon, params })
    }

    /// The 30-day horizon of the VIX.
    pub fn vix(params: ModelParams) -> Self {
        SwapParams {
            horizon: 30.0 / DAYS_PER_YEAR,
            params,
        }
    }

    pub fn kvar(&self, v0: f64) -> Result<f64> {
        kvar(v0, &self.params, self.horizon)
    }
}

/// Strike volatility `K_var = √(w v₀ + (1 − w)θ)` with `w` the averaging weight.
pub fn kvar(v0: f64, params: &ModelParams, horizon: f64) -> Result<f64> {
    let w = averaging_weight(params.kappa, horizon);
    let k2 = (v0 - params.theta) * w + params.theta;
    if !(k2 >= 0.0 && k2.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "negative variance-swap radicand {k2:e} (v0 = {v0})"
        )));
    }
    Ok(k2.sqrt())
}

/// Inverse map `v = (K_var² − θ)κT/(1 − e^{−κT}) + θ`.
pub fn variance_from_kvar(kvar: f64, params: &ModelParams, horizon: f64) -> f64 {
    (kvar * kvar - params.theta) / averaging_weight(params.kappa, horizon) + params.theta
}

/// `D = ∂Θ/∂Λ`: diagonal day block `∂σ_t/∂K_var,t`, coupling block of
/// `∂σ_t/∂(κ, √θ, σ, ρ)` (the last two columns are zero), identity shared
/// block and zero lower-left block.
#[derive(Debug, Clone, PartialEq)]
pub struct SwapJacobian {
    pub diag: Vec<f64>,
    /// `m × p`
    pub a12: DMatrix<f64>,
    /// Days with `σ_t = 0`, where the map from `K_var` is not differentiable.
    pub singular: Vec<bool>,
}

impl SwapJacobian {
    pub fn identity(days: usize, shared: usize) -> Self {
        SwapJacobian {
            diag: vec![1.0; days],
            a12: DMatrix::zeros(days, shared),
            singular: vec![false; days],
        }
    }

    pub fn days(&self) -> usize {
        self.diag.len()
    }

    pub fn dense(&self) -> DMatrix<f64> {
        let m = self.days();
        let p = self.a12.ncols();
        let mut d = DMatrix::identity(m + p, m + p);
        for (i, x) in self.diag.iter().enumerate() {
            d[(i, i)] = *x;
        }
        d.view_mut((0, m), (m, p)).copy_from(&self.a12);
        d
    }
}

/// Jacobian of `σ_t` with respect to `K_var,t`, `κ` and `√θ` at fitted
/// variances `v_t`.
pub fn kvar_jacobian(variances: &[f64], params: &ModelParams, horizon: f64) -> Result<SwapJacobian> {
    let (kappa, theta) = (params.kappa, params.theta);
    let sqrt_theta = params.sqrt_theta();
    let x = kappa * horizon;
    let one_minus_e = one_minus_exp(x);
    let e = (-x).exp();
    let m = variances.len();
    let mut diag = vec![0.0; m];
    let mut a12 = DMatrix::zeros(m, 4);
    let mut singular = vec![false; m];
    for (i, &v) in variances.iter().enumerate() {
        let k = kvar(v, params, horizon)?;
        let sigma = v.sqrt();
        if sigma <= 0.0 {
            singular[i] = true;
            continue;
        }
        diag[i] = k * x / (one_minus_e * sigma);
        a12[(i, 0)] = (k * k - theta) * horizon / (2.0 * sigma) * (1.0 - (1.0 + x) * e) / (one_minus_e * one_minus_e);
        a12[(i, 1)] = sqrt_theta / sigma * (1.0 - x / one_minus_e);
    }
    Ok(SwapJacobian { diag, a12, singular })
}

/// `Dᵀ J D`, computed blockwise so the result stays arrow-shaped.
pub fn transform_fisher(bf: &BlockFisher, d: &SwapJacobian) -> Result<BlockFisher> {
    let m = bf.days();
    let p = bf.shared_dim();
    if d.days() != m || d.a12.ncols() != p {
        return Err(Error::Dimension(format!(
            "jacobian {}x{} vs information {}x{}",
            d.days(),
            d.a12.ncols(),
            m,
            p
        )));
    }
    let mut a11 = Vec::with_capacity(m);
    let mut a12 = DMatrix::zeros(m, p);
    let mut a22 = bf.a22.clone();
    for i in 0..m {
        let a = bf.a11_diag[i];
        let di = d.diag[i];
        let b = bf.a12.row(i);
        let c = d.a12.row(i);
        a11.push(di * di * a);
        a12.row_mut(i).copy_from(&((c * a + b) * di));
        a22 += c.transpose() * c * a + c.transpose() * b + b.transpose() * c;
    }
    let a22 = (&a22 + a22.transpose()) * 0.5;
    BlockFisher::new(bf.dates.clone(), a11, a12, a22, bf.noise_variance)
}

/// Daily strike volatilities with their two-standard-error bands.
#[derive(Debug, Clone, PartialEq)]
pub struct VarSwapSeries {
    pub dates: Vec<NaiveDate>,
    pub kvar: Vec<f64>,
    pub beta: Vec<f64>,
    /// `β_t / K_var,t`
    pub relative: Vec<f64>,
    pub inverse: DiagonalInverse,
}

/// Bands on `K_var,t` from the panel information at fitted variances.
pub fn swap_bands(bf: &BlockFisher, variances: &[f64], swap: &SwapParams) -> Result<VarSwapSeries> {
    let d = kvar_jacobian(variances, &swap.params, swap.horizon)?;
    let transformed = transform_fisher(bf, &d)?;
    let mut inverse = invert_block_diagonal_entries(&transformed)?;
    for (x, s) in inverse.days.iter_mut().zip(&d.singular) {
        if *s {
            *x = f64::INFINITY;
        }
    }
    let kvar = variances.iter().map(|v| swap.kvar(*v)).collect::<Result<Vec<f64>>>()?;
    let band = credibility_bands(&inverse, &kvar)?;
    Ok(VarSwapSeries {
        dates: bf.dates.clone(),
        kvar,
        beta: band.beta,
        relative: band.relative,
        inverse,
    })
}
