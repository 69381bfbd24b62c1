mod common;

use heston_fisher::frft::{price_grid, FrftConfig, NodeWeights};
use heston_fisher::greeks::{greek_direct, Parameter};
use heston_fisher::heston::{price_direct, put_from_call};
use heston_fisher::{MarketState, ModelParams, OptionSpec, QuadratureConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn vanishing_vol_of_vol_is_black_scholes() {
    let s = MarketState::sp500_reference();
    let m = ModelParams::new(5.07, 0.0457, 1e-6, -0.767).unwrap();
    let quad = QuadratureConfig::default();
    for tau in [30.0 / 365.0, 0.5] {
        for i in 0..=8 {
            let k = s.spot * (0.8 + 0.05 * i as f64);
            let spec = OptionSpec::call(k, tau).unwrap();
            let h = price_direct(&spec, &s, m.theta, &m, 1.5, &quad).unwrap();
            let bs = common::black_scholes_call(s.spot, k, tau, s.rate, s.dividend_yield, m.theta.sqrt());
            assert!((h - bs).abs() <= 1e-4 * bs, "K={k} tau={tau}: {h} vs {bs}");
        }
    }
}

#[test]
fn quadrature_put_satisfies_parity() {
    let s = MarketState::sp500_reference();
    let m = ModelParams::sp500();
    let quad = QuadratureConfig::default();
    for k in [1500.0, 1845.73, 2100.0] {
        let call = OptionSpec::call(k, 0.25).unwrap();
        let c = price_direct(&call, &s, 0.0108, &m, 1.5, &quad).unwrap();
        let p = price_direct(&OptionSpec::put(k, 0.25).unwrap(), &s, 0.0108, &m, 1.5, &quad).unwrap();
        assert!((p - put_from_call(c, &call, &s)).abs() < 1e-8 * s.spot);
    }
}

#[test]
fn trapezoid_grid_matches_quadrature_on_central_strikes() {
    let s = MarketState::sp500_reference();
    let m = ModelParams::sp500();
    let tau = 30.0 / 365.0;
    let cfg = FrftConfig::default().with_weights(NodeWeights::Trapezoid);
    let (grid, prices) = price_grid(1.0, &s, 0.0108, tau, &m, &cfg).unwrap();
    let quad = QuadratureConfig::default();
    let mid = cfg.n_points / 2;
    for u in (mid - 100..mid + 100).step_by(7) {
        let d = price_direct(&OptionSpec::call(grid.strikes[u], tau).unwrap(), &s, 0.0108, &m, 1.5, &quad).unwrap();
        assert!((prices[u] - d).abs() <= 1e-6 * d, "u={u}: {} vs {d}", prices[u]);
    }
}

#[test]
fn randomized_greeks_match_price_differences() {
    let s = MarketState::sp500_reference();
    let quad = QuadratureConfig::default().with_tolerance(1e-14);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..8 {
        let m = ModelParams::new(rng.gen_range(1.0..8.0), rng.gen_range(0.02..0.08), rng.gen_range(0.2..0.8), rng.gen_range(-0.9..-0.3)).unwrap();
        let v = rng.gen_range(0.005..0.08);
        let spec = OptionSpec::call(s.spot * rng.gen_range(0.9..1.1), rng.gen_range(0.05..0.5)).unwrap();
        for p in Parameter::ALL {
            let a = greek_direct(p, &spec, &s, v, &m, 1.5, &quad).unwrap();
            let x = p.value(v, &m);
            let h = 1e-5 * x.abs().max(1e-2);
            let price = |x: f64| {
                let (v, m) = p.with_value(x, v, &m);
                price_direct(&spec, &s, v, &m, 1.5, &quad).unwrap()
            };
            let fd = (price(x + h) - price(x - h)) / (2.0 * h);
            assert!((a - fd).abs() <= 1e-5 * a.abs() + 1e-9 * s.spot, "{p}: {a} vs {fd}");
        }
    }
}
