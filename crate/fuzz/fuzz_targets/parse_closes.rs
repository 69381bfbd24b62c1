#![no_main]

use heston_fisher::market_data::parse_closes;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(parsed) = parse_closes(text) {
        assert!(parsed.records.iter().all(|c| c.close > 0.0 && c.dividend_yield.is_finite()));
    }
});
