use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_heston-fisher")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Data rows of a CSV output (comments and header dropped).
fn rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn price_of(args: &[&str]) -> f64 {
    rows(&stdout(&run(args)))[0][5].parse().unwrap()
}

#[test]
fn methods_agree_at_the_money_with_trapezoid_nodes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.cfg", "weights = trapezoid\n");
    let base = ["price", "--params-file", &cfg, "--strike", "1845.73", "--maturity", "30", "--variance", "0.0108"];
    let frft = price_of(&base);
    let direct = price_of(&[&base[..], &["--method", "direct"]].concat());
    assert!((frft - direct).abs() <= 1e-6 * direct, "{frft} vs {direct}");
}

#[test]
fn off_grid_strikes_are_interpolated() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.cfg", "weights = trapezoid\n");
    let base = ["price", "--params-file", &cfg, "--strike", "1811.3", "--put"];
    let frft = price_of(&base);
    let direct = price_of(&[&base[..], &["--method", "direct"]].concat());
    assert!((frft - direct).abs() <= 1e-6 * direct, "{frft} vs {direct}");
}

#[test]
fn grid_has_one_row_per_node() {
    let out = stdout(&run(&["price", "--grid", "--n", "512"]));
    assert!(out.starts_with("# config_hash="));
    assert_eq!(rows(&out).len(), 512);
    assert_eq!(out.lines().nth(1), Some("k,K,price"));
}

#[test]
fn flags_override_the_params_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.cfg", "n = 4096\nsigma = 0.3\n");
    assert_eq!(rows(&stdout(&run(&["price", "--grid", "--params-file", &cfg]))).len(), 4096);
    assert_eq!(rows(&stdout(&run(&["price", "--grid", "--params-file", &cfg, "--n", "256"]))).len(), 256);
}

#[test]
fn config_errors_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad_rho = write(dir.path(), "rho.cfg", "rho = 1.5\n");
    let o = run(&["price", "--params-file", &bad_rho]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("rho"));
    let unknown = write(dir.path(), "key.cfg", "kapa = 1\n");
    let o = run(&["price", "--params-file", &unknown]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains(":1:"));
    assert_eq!(run(&["price", "--n", "1000"]).status.code(), Some(2));
    assert_eq!(run(&["surface", "--greek", "delta"]).status.code(), Some(2));
}

#[test]
fn config_hash_tracks_the_configuration() {
    let hash = |args: &[&str]| stdout(&run(args)).lines().next().unwrap().to_string();
    assert_eq!(hash(&["price"]), hash(&["price"]));
    assert_ne!(hash(&["price"]), hash(&["price", "--eta", "0.2"]));
    assert_ne!(hash(&["price"]), hash(&["price", "--variance", "0.02"]));
}

#[test]
fn surface_rows_span_both_ladders() {
    let out = stdout(&run(&["surface", "--maturities", "10,30,60", "--stride", "50"]));
    let r = rows(&out);
    let strikes: std::collections::BTreeSet<&str> = r.iter().map(|x| x[0].as_str()).collect();
    assert_eq!(r.len(), strikes.len() * 3);
    assert!(strikes.len() > 5);
    for greek in ["kappa", "sqrt_theta", "sigma", "rho"] {
        assert_eq!(rows(&stdout(&run(&["surface", "--greek", greek, "--maturities", "30", "--stride", "50"]))).len(), strikes.len());
    }
}

#[test]
fn vega_drop_covers_the_vix_maturities() {
    let r = rows(&stdout(&run(&["surface", "--vega-drop", "--variances", "0.001,0.01,0.025"])));
    assert_eq!(r.len(), 9);
    let mats: Vec<&str> = r.iter().map(|x| x[1].as_str()).collect();
    assert_eq!(mats, ["23", "23", "23", "30", "30", "30", "37", "37", "37"]);
    for m in r.chunks(3) {
        let v: Vec<f64> = m.iter().map(|x| x[2].parse().unwrap()).collect();
        assert!(v[0] < v[1] && v[1] < v[2]);
    }
}

#[test]
fn synth_fit_fisher_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let panel = dir.path().join("panel");
    let panel = panel.to_str().unwrap();
    stdout(&run(&["synth", "--days", "6", "--levels", "0.0108,0.04", "--noise-sd", "0", "--seed", "3", "--out", panel]));
    let chains = std::fs::read_to_string(dir.path().join("panel/chains.csv")).unwrap();
    assert!(chains.starts_with("# config_hash="));
    // noise-free quotes: bid = ask = model price
    for r in rows(&chains) {
        assert_eq!(r[4], r[5]);
    }
    let fit = dir.path().join("fit.csv");
    let fit = fit.to_str().unwrap();
    stdout(&run(&["fit", "--panel", panel, "--out", fit]));
    let text = std::fs::read_to_string(fit).unwrap();
    let truth = std::fs::read_to_string(dir.path().join("panel/truth.csv")).unwrap();
    for (f, t) in rows(&text).iter().zip(rows(&truth)) {
        assert_eq!(f[0], t[0]);
        let (a, b): (f64, f64) = (f[1].parse().unwrap(), t[1].parse().unwrap());
        assert!((a - b).abs() < 1e-6 * b, "{a} vs {b}");
    }
    // a second fit is byte-identical
    assert_eq!(stdout(&run(&["fit", "--panel", panel])), text);

    let o = run(&["fisher", "--panel", panel, "--fit", fit, "--dense-check"]);
    let bands = stdout(&o);
    let err = String::from_utf8_lossy(&o.stderr);
    let dev: f64 = err.split("deviation ").nth(1).unwrap().trim().parse().unwrap();
    assert!(dev < 1e-8, "{err}");
    assert_eq!(stdout(&run(&["fisher", "--panel", panel, "--fit", fit])), bands, "--dense-check altered the output");
    assert!(bands.contains("# se_kappa="));
    assert_eq!(rows(&bands).len(), 6);
    let swap = stdout(&run(&["fisher", "--panel", panel, "--fit", fit, "--swap"]));
    assert_eq!(rows(&swap)[0].len(), 4);
    assert!(swap.lines().any(|l| l == "date,kvar,beta,relative"));
}

#[test]
fn synth_is_reproducible_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let files = |sub: &str, seed: &str| {
        let out = dir.path().join(sub);
        stdout(&run(&["synth", "--days", "3", "--seed", seed, "--out", out.to_str().unwrap()]));
        std::fs::read_to_string(out.join("chains.csv")).unwrap()
    };
    assert_eq!(files("a", "5"), files("b", "5"));
    assert_ne!(files("a", "5"), files("c", "6"));
}

#[test]
fn empty_panel_exits_with_code_three() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "chains.csv", "trade_date,expiry_date,flag,strike,bid,ask\n2014-03-03,2014-04-02,C,1850,0,1\n");
    write(dir.path(), "rates.csv", "date,maturity_days,rate\n2014-03-03,30,0.002\n");
    write(dir.path(), "closes.csv", "date,close,dividend_yield\n2014-03-03,1845.73,0.019\n");
    let o = run(&["fit", "--panel", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn malformed_panel_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "chains.csv", "date,strike\n");
    write(dir.path(), "rates.csv", "date,maturity_days,rate\n");
    write(dir.path(), "closes.csv", "date,close,dividend_yield\n");
    assert_eq!(run(&["fit", "--panel", dir.path().to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(run(&["fit", "--panel", "/nonexistent"]).status.code(), Some(2));
}
