#![no_main]

use heston_fisher::config::RunConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(config) = RunConfig::from_text(text) else { return };
    let again = RunConfig::from_text(&config.canonical()).expect("canonical text parses");
    assert_eq!(again, config);
    let _ = config.validate();
});
