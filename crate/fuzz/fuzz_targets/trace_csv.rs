#![no_main]

use libfuzzer_sys::fuzz_target;
use migsim::trace::parse_trace_csv;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(samples) = parse_trace_csv(text) {
            // Accepted traces are well-formed: 1-based contiguous iterations
            // and reuse ratios in (0, 1].
            for (i, s) in samples.iter().enumerate() {
                assert_eq!(s.iteration as usize, i + 1);
                assert!(s.reuse_ratio > 0.0 && s.reuse_ratio <= 1.0);
            }
        }
    }
});
