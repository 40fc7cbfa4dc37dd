#![no_main]

use libfuzzer_sys::fuzz_target;
use migsim::Scenario;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        // from_json performs no file i/o, so arbitrary trace_file paths are
        // harmless here.
        _ = Scenario::from_json(text);
    }
});
