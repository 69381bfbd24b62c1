mod common;

use heston_fisher::calibration::{day_gradients, FitConfig};
use heston_fisher::fisher::*;
use heston_fisher::frft::{FrftConfig, GridPricer};
use heston_fisher::greeks::{greek_vector, GreekVector, Parameter};
use heston_fisher::heston::price_direct;
use heston_fisher::{MarketState, ModelParams, OptionSpec, QuadratureConfig};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

const V: f64 = 0.0108;
const TAU: f64 = 30.0 / 365.0;

/// Monte-Carlo covariance of the joint score, with each score component
/// from a two-point difference of the Gaussian log-likelihood.
fn mc_score_covariance(specs: &[OptionSpec], vhat: f64, samples: usize) -> DMatrix<f64> {
    let s = MarketState::sp500_reference();
    let m = ModelParams::sp500();
    let quad = QuadratureConfig::default().with_tolerance(1e-13);
    let price = |spec: &OptionSpec, v: f64, m: &ModelParams| price_direct(spec, &s, v, m, 1.5, &quad).unwrap();
    let base: Vec<f64> = specs.iter().map(|sp| price(sp, V, &m)).collect();
    // (E⁺, E⁻, 2h) per parameter and option
    let bumps: Vec<(Vec<f64>, Vec<f64>, f64)> = Parameter::ALL
        .iter()
        .map(|p| {
            let x = p.value(V, &m);
            let h = 1e-5 * x.abs();
            let (vu, mu) = p.with_value(x + h, V, &m);
            let (vd, md) = p.with_value(x - h, V, &m);
            (
                specs.iter().map(|sp| price(sp, vu, &mu)).collect(),
                specs.iter().map(|sp| price(sp, vd, &md)).collect(),
                2.0 * h,
            )
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut acc = DMatrix::zeros(5, 5);
    let mut score = nalgebra::DVector::zeros(5);
    let mut e = vec![0.0; specs.len()];
    for _ in 0..samples {
        for (ei, b) in e.iter_mut().zip(&base) {
            let z: f64 = StandardNormal.sample(&mut rng);
            *ei = b + vhat.sqrt() * z;
        }
        for (k, (up, dn, width)) in bumps.iter().enumerate() {
            let mut ll = 0.0;
            for ((ei, u), d) in e.iter().zip(up).zip(dn) {
                ll += (-(ei - u).powi(2) + (ei - d).powi(2)) / (2.0 * vhat);
            }
            score[k] = ll / width;
        }
        acc += &score * score.transpose();
    }
    acc / samples as f64
}

fn assert_close_scaled(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) {
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            let scale = (b[(i, i)] * b[(j, j)]).sqrt();
            assert!((a[(i, j)] - b[(i, j)]).abs() <= tol * scale, "({i},{j}): {} vs {}", a[(i, j)], b[(i, j)]);
        }
    }
}

#[test]
fn single_option_information_is_score_covariance() {
    let s = MarketState::sp500_reference();
    let m = ModelParams::sp500();
    let spec = OptionSpec::call(s.spot, TAU).unwrap();
    let g = greek_vector(&spec, &s, V, &m, 1.5, &QuadratureConfig::default().with_tolerance(1e-13)).unwrap();
    let vhat = 0.2952;
    let j = fisher_single(&g, vhat).unwrap();
    assert!((j.entries[(0, 0)] - g.d_sigma0.powi(2) / vhat).abs() < 1e-12 * j.entries[(0, 0)]);
    let mc = mc_score_covariance(&[spec], vhat, 1_000_000);
    assert_close_scaled(&mc, &j.entries, 1e-2);
}

#[test]
fn chain_information_is_joint_score_covariance() {
    let s = MarketState::sp500_reference();
    let m = ModelParams::sp500();
    let quad = QuadratureConfig::default().with_tolerance(1e-13);
    let specs: Vec<OptionSpec> = (0..10)
        .map(|i| OptionSpec::call(s.spot * (0.9 + 0.02 * i as f64), if i % 2 == 0 { TAU } else { 0.25 }).unwrap())
        .collect();
    let grads: Vec<GreekVector> = specs.iter().map(|sp| greek_vector(sp, &s, V, &m, 1.5, &quad).unwrap()).collect();
    let singles: Vec<FisherMatrix> = grads.iter().map(|g| fisher_single(g, 0.3).unwrap()).collect();
    let agg = fisher_aggregate(&singles).unwrap();
    assert!(agg.is_psd() && agg.is_symmetric());
    let mc = mc_score_covariance(&specs, 0.3, 1_000_000);
    assert_close_scaled(&mc, &agg.entries, 1e-2);
}

/// Panel prices at `(σ_t) ⊕ shared` for every day and quote.
fn panel_prices(chains: &[heston_fisher::calibration::DayChain], sigmas: &[f64], shared: [f64; 4], cfg: &FrftConfig) -> Vec<Vec<f64>> {
    let m = ModelParams::new(shared[0], shared[1] * shared[1], shared[2], shared[3]).unwrap();
    chains
        .iter()
        .zip(sigmas)
        .map(|(c, s)| {
            let mut out = vec![];
            let mut cache: Vec<(f64, GridPricer, Vec<f64>)> = vec![];
            for q in &c.quotes {
                if !cache.iter().any(|x| x.0 == q.spec.maturity) {
                    let p = GridPricer::new(1.0, &c.state.with_rate(q.rate), q.spec.maturity, &m, cfg).unwrap();
                    let prices = p.prices(s * s).unwrap();
                    cache.push((q.spec.maturity, p, prices));
                }
                let (_, p, prices) = cache.iter().find(|x| x.0 == q.spec.maturity).unwrap();
                out.push(prices[p.grid().locate(q.spec.log_strike, 1e-9).unwrap()]);
            }
            out
        })
        .collect()
}

#[test]
fn panel_information_is_expected_likelihood_hessian() {
    let (spec, panel) = common::cycling_panel(5, 0.0, 3);
    let m = spec.params;
    let cfg = FitConfig::default();
    let vhat = 0.09;
    let grads: Vec<DayGradients> = panel
        .chains
        .iter()
        .zip(&panel.true_variances)
        .map(|(c, v)| day_gradients(c, *v, &m, &cfg).unwrap())
        .collect();
    let bf = assemble_block_fisher(&grads, vhat, FisherMode::PerOption).unwrap();
    let j = bf.full_matrix();
    assert!(is_psd(&j) && is_symmetric(&j));

    let theta0: Vec<f64> = panel
        .true_variances
        .iter()
        .map(|v| v.sqrt())
        .chain([m.kappa, m.sqrt_theta(), m.sigma, m.rho])
        .collect();
    let n = theta0.len();
    let base = panel_prices(&panel.chains, &theta0[..5], [m.kappa, m.sqrt_theta(), m.sigma, m.rho], &cfg.frft);
    // expected negative log-likelihood up to a constant
    let nll = |x: &[f64]| {
        let p = panel_prices(&panel.chains, &x[..5], [x[5], x[6], x[7], x[8]], &cfg.frft);
        p.iter().flatten().zip(base.iter().flatten()).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / (2.0 * vhat)
    };
    let h: Vec<f64> = theta0.iter().map(|x| 1e-4 * x.abs()).collect();
    let at = |di: (usize, f64), dj: (usize, f64)| {
        let mut x = theta0.clone();
        x[di.0] += di.1 * h[di.0];
        x[dj.0] += dj.1 * h[dj.0];
        nll(&x)
    };
    let mut hess = DMatrix::zeros(n, n);
    for i in 0..n {
        for k in i..n {
            let v = (at((i, 1.0), (k, 1.0)) - at((i, 1.0), (k, -1.0)) - at((i, -1.0), (k, 1.0)) + at((i, -1.0), (k, -1.0)))
                / (4.0 * h[i] * h[k]);
            hess[(i, k)] = v;
            hess[(k, i)] = v;
        }
    }
    assert_close_scaled(&hess, &j, 1e-4);
}

#[test]
fn schur_path_matches_dense_on_synthetic_panels() {
    let cfg = FitConfig::default();
    for days in [1, 100] {
        let (spec, panel) = common::cycling_panel(days, 0.0, 4);
        let grads: Vec<DayGradients> = panel
            .chains
            .iter()
            .zip(&panel.true_variances)
            .map(|(c, v)| day_gradients(c, *v, &spec.params, &cfg).unwrap())
            .collect();
        let bf = assemble_block_fisher(&grads, 0.09, FisherMode::PerOption).unwrap();
        assert!(is_psd(&bf.full_matrix()));
        let schur = invert_block_diagonal_entries(&bf).unwrap();
        let dense = dense_diagonal_inverse(&bf).unwrap();
        let tol = if days == 1 { 1e-10 } else { 1e-8 };
        assert!(max_relative_deviation(&schur.all(), &dense) < tol);

        // pipeline self-check of the single-parameter bound
        let band = credibility_bands(&schur, &panel.true_variances.iter().map(|v| v.sqrt()).collect::<Vec<_>>()).unwrap();
        for (b, a) in band.beta.iter().zip(&bf.a11_diag) {
            assert!(*b >= 2.0 * (bf.noise_variance / a).sqrt() * (1.0 - 1e-12));
        }
    }
}
