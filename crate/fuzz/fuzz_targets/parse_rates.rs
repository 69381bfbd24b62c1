#![no_main]

use heston_fisher::market_data::{parse_rates, RateCurves};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(parsed) = parse_rates(text) else { return };
    let curves = RateCurves::new(&parsed.records);
    for p in &parsed.records {
        let r = curves.rate(p.date, p.maturity_days).expect("knots are always covered");
        assert!(r.is_finite());
    }
});
