#![no_main]

use libfuzzer_sys::fuzz_target;
use migsim::catalog::PlacementCatalog;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        // Parsing plus validation must never panic; a validated catalog must
        // uphold its own invariants.
        if let Ok(catalog) = PlacementCatalog::from_json(text) {
            assert!(catalog.total_memory_slots >= 1);
            for profile in &catalog.profiles {
                assert!(profile.memory_bytes
                    == profile.memory_slices as u64 * catalog.bytes_per_memory_slot);
                for &start in &profile.allowed_starts {
                    assert!(start + profile.memory_slices <= catalog.total_memory_slots);
                }
            }
            let _ = catalog.tight_fit_profile(1 << 20, 64, 108);
        }
    }
});
