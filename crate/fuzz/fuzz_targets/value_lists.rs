#![no_main]

use libfuzzer_sys::fuzz_target;
use scfde_blind::sim::config;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(snr) = config::parse_snr_list(text) {
        assert!(!snr.is_empty());
        assert!(snr.iter().all(|s| s.is_finite()));
    }
    if let Ok(receivers) = config::parse_receivers(text) {
        let names: Vec<&str> = receivers.iter().map(|r| r.name()).collect();
        let again = config::parse_receivers(&names.join(",")).expect("names re-parse");
        assert_eq!(again, receivers);
    }
    let _ = config::parse_len_list(text);
});
