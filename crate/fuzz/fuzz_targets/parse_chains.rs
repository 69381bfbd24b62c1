#![no_main]

use heston_fisher::market_data::parse_chains;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(parsed) = parse_chains(text) else { return };
    for r in &parsed.records {
        assert!(r.strike > 0.0 && r.strike.is_finite());
        assert!(r.bid >= 0.0 && r.bid <= r.ask);
        assert!(r.days_to_expiry() > 0);
    }
    // rejections are reported against a real line
    let lines = text.lines().count();
    assert!(parsed.rejected.iter().all(|r| r.line >= 1 && r.line <= lines + 1));
});
