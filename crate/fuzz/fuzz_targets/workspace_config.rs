#![no_main]

use libfuzzer_sys::fuzz_target;
use migsim::predictor::estimate_workspace;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        for layers in [0u64, 1, 7, u64::MAX] {
            // Must reject malformed or overflowing configs without panicking.
            _ = estimate_workspace(text, layers);
        }
    }
});
