#![allow(dead_code)]

use heston_fisher::calibration::{DayChain, DayFitter, FitConfig, OptionQuote};
use heston_fisher::market_data::{simulate_heston_panel, SyntheticPanel, SyntheticPanelSpec, VariancePath};
use heston_fisher::params::ModelParams;
use statrs::distribution::{ContinuousCDF, Normal};

pub const LEVELS: [f64; 5] = [0.004, 0.0108, 0.02, 0.04, 0.09];

/// Panel whose variance cycles through [`LEVELS`].
pub fn cycling_panel(days: usize, noise_sd: f64, seed: u64) -> (SyntheticPanelSpec, SyntheticPanel) {
    let spec = SyntheticPanelSpec {
        days,
        variance: VariancePath::Prescribed((0..days).map(|i| LEVELS[i % LEVELS.len()]).collect()),
        noise_sd,
        seed,
        ..Default::default()
    };
    let panel = simulate_heston_panel(&spec).unwrap();
    (spec, panel)
}

/// The chain with every quote set to its noise-free model price.
pub fn noise_free(chain: &DayChain, model: &[f64]) -> DayChain {
    let mut c = chain.clone();
    for (q, p) in c.quotes.iter_mut().zip(model) {
        *q = OptionQuote::new(q.spec, *p, *p, q.rate).unwrap();
    }
    c
}

pub fn fitters(panel: &SyntheticPanel, params: &ModelParams, cfg: &FitConfig) -> Vec<DayFitter> {
    panel
        .chains
        .iter()
        .zip(&panel.model_prices)
        .map(|(c, m)| DayFitter::new(&noise_free(c, m), params, cfg).unwrap())
        .collect()
}

/// Black–Scholes call with continuous dividend yield.
pub fn black_scholes_call(s: f64, k: f64, tau: f64, r: f64, q: f64, vol: f64) -> f64 {
    let n = Normal::new(0.0, 1.0).unwrap();
    let sd = vol * tau.sqrt();
    let d1 = ((s / k).ln() + (r - q) * tau) / sd + 0.5 * sd;
    s * (-q * tau).exp() * n.cdf(d1) - k * (-r * tau).exp() * n.cdf(d1 - sd)
}
