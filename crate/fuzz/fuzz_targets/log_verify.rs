#![no_main]

use libfuzzer_sys::fuzz_target;
use linepack::execlog::verify_log;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(rep) = verify_log(text) {
        assert!(rep.delivered + rep.dropped <= rep.accepted);
        assert!(rep.accepted <= rep.arrivals);
    }
});
