#![no_main]

use libfuzzer_sys::fuzz_target;
use linepack::config::parse_config;
use linepack::validate_config;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(raw) = parse_config(text) {
        if let Ok(cfg) = validate_config(&raw) {
            assert!(1u64.checked_shl(cfg.k()).is_none_or(|m| cfg.threshold() < m));
            assert!(cfg.buffer_track() >= 1 && cfg.link_track() >= 1);
        }
    }
});
