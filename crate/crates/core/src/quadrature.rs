//! Adaptive Simpson integration over a semi-infinite frequency axis.

use crate::error::{Error, Result};

/// Truncation and tolerance settings for the reference (non-FFT) pricer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    /// Initial truncation bound Φ_max; doubled until the tail is negligible.
    pub phi_max: f64,
    /// Absolute price tolerance as a multiple of spot.
    pub tol_rel_spot: f64,
    /// A doubling stops once the new interval adds less than this fraction
    /// of the accumulated integral.
    pub tail_fraction: f64,
    pub max_doublings: u32,
    pub max_depth: u32,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            phi_max: 200.0,
            tol_rel_spot: 1e-10,
            tail_fraction: 1e-12,
            max_doublings: 6,
            max_depth: 40,
        }
    }
}

impl QuadratureConfig {
    pub fn with_tolerance(mut self, tol_rel_spot: f64) -> Self {
        self.tol_rel_spot = tol_rel_spot;
        self
    }
}

/// ∫_0^∞ f with truncation doubling. `oscillation` bounds the angular
/// frequency of the integrand and sets the initial panel width.
pub(crate) fn integrate_half_line<F>(
    f: F,
    oscillation: f64,
    abs_tol: f64,
    cfg: &QuadratureConfig,
) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let panel_width = (std::f64::consts::PI / (oscillation.abs() + 1.0)).min(2.0);
    let mut lo = 0.0;
    let mut hi = cfg.phi_max;
    // tolerance budget per unit length, fixed by the initial range
    let density = abs_tol / cfg.phi_max;
    let mut total = integrate_panels(&f, lo, hi, panel_width, density, cfg.max_depth)?;
    for _ in 0..cfg.max_doublings {
        lo = hi;
        hi *= 2.0;
        let piece = integrate_panels(&f, lo, hi, panel_width, density * 1e-2, cfg.max_depth)?;
        total += piece;
        if piece.abs() < (cfg.tail_fraction * total.abs()).max(abs_tol * 1e-3) {
            return Ok(total);
        }
    }
    Err(Error::Integration { partial: total })
}

fn integrate_panels<F>(
    f: &F,
    a: f64,
    b: f64,
    width: f64,
    tol_density: f64,
    max_depth: u32,
) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let n = ((b - a) / width).ceil().max(1.0) as usize;
    let h = (b - a) / n as f64;
    let mut sum = 0.0;
    for i in 0..n {
        let x0 = a + i as f64 * h;
        let x1 = if i + 1 == n { b } else { x0 + h };
        sum += adaptive_simpson(f, x0, x1, tol_density * (x1 - x0), max_depth)?;
    }
    Ok(sum)
}

/// Adaptive Simpson with Richardson correction on [a, b].
pub fn adaptive_simpson<F>(f: &F, a: f64, b: f64, tol: f64, max_depth: u32) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let fa = f(a)?;
    let fb = f(b)?;
    let m = 0.5 * (a + b);
    let fm = f(m)?;
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let mut failed = false;
    let v = recurse(f, a, b, fa, fm, fb, whole, tol, max_depth, &mut failed)?;
    if failed {
        return Err(Error::Integration { partial: v });
    }
    Ok(v)
}

#[allow(clippy::too_many_arguments)]
fn recurse<F>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    failed: &mut bool,
) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm)?;
    let frm = f(rm)?;
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol || (b - a) < 1e-12 {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        *failed = true;
        return Ok(left + right + delta / 15.0);
    }
    let l = recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, failed)?;
    let r = recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, failed)?;
    Ok(l + r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomial_exactly() {
        let v = adaptive_simpson(&|x: f64| Ok(x * x * x - 2.0 * x), 0.0, 2.0, 1e-12, 20).unwrap();
        assert!((v - 0.0).abs() < 1e-12);
    }

    #[test]
    fn half_line_damped_oscillation() {
        // ∫_0^∞ e^{-x} cos(3x) dx = 1/10
        let cfg = QuadratureConfig::default();
        let v = integrate_half_line(|x| Ok((-x).exp() * (3.0 * x).cos()), 3.0, 1e-12, &cfg).unwrap();
        assert!((v - 0.1).abs() < 1e-11, "{v}");
    }

    #[test]
    fn gaussian_half_line() {
        let cfg = QuadratureConfig::default();
        let v = integrate_half_line(|x| Ok((-x * x).exp()), 0.0, 1e-12, &cfg).unwrap();
        assert!((v - std::f64::consts::PI.sqrt() / 2.0).abs() < 1e-11);
    }

    #[test]
    fn reports_partial_on_failure() {
        let cfg = QuadratureConfig {
            max_doublings: 1,
            ..Default::default()
        };
        // 1/(1+x) has a non-integrable tail
        match integrate_half_line(|x| Ok(1.0 / (1.0 + x)), 0.0, 1e-10, &cfg) {
            Err(Error::Integration { partial }) => assert!(partial > 5.0),
            other => panic!("expected integration failure, got {other:?}"),
        }
    }
}
