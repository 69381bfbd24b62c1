#![no_main]

use heston_fisher::market_data::{parse_panel, write_panel};
use libfuzzer_sys::fuzz_target;

// Input: chains, rates and closes separated by form feeds.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let mut parts = text.splitn(3, '\x0c');
    let (Some(chains), Some(rates), Some(closes)) = (parts.next(), parts.next(), parts.next()) else { return };
    let Ok(report) = parse_panel(chains, rates, closes) else { return };
    assert!(report.days.iter().all(|d| !d.quotes.is_empty()));
    assert_eq!(report.days.iter().map(|d| d.quotes.len()).sum::<usize>(), report.accepted_quotes);
    // a written panel parses back to the same quotes
    let files = write_panel(&report.days);
    let again = parse_panel(&files.chains, &files.rates, &files.closes).expect("written panel parses");
    assert_eq!(again.accepted_quotes, report.accepted_quotes);
});
