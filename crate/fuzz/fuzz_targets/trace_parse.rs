#![no_main]

use libfuzzer_sys::fuzz_target;
use linepack::trace::{parse_trace, validate_trace, write_trace};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(reqs) = parse_trace(text) {
        // Whatever parses must survive a write/parse round trip.
        assert_eq!(parse_trace(&write_trace(&reqs)).unwrap(), reqs);
        let n = reqs.iter().map(|r| r.dst + 1).max().unwrap_or(2);
        let _ = validate_trace(&reqs, n);
    }
});
