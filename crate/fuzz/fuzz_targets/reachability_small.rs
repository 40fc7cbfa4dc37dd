#![no_main]

use std::sync::Arc;

use libfuzzer_sys::fuzz_target;
use migsim::catalog::PlacementCatalog;
use migsim::fsm::enumerate_states;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(catalog) = PlacementCatalog::from_json(text) else { return };
    // Keep per-exec cost bounded: small devices only, capped state count.
    if catalog.total_memory_slots > 8 || catalog.profiles.len() > 5 {
        return;
    }
    let Ok(mut table) = enumerate_states(Arc::new(catalog), 3000) else { return };
    table.precompute_reachability();
    for idx in 0..table.len() {
        let fcr = table.fcr(idx);
        assert!(fcr >= 1, "state {idx} reaches no final");
        if table.is_final(idx) {
            assert_eq!(fcr, 1);
        }
        for edge in table.alloc_edges(idx) {
            assert!(table.fcr(edge.successor) <= fcr, "fcr grew along an edge");
        }
    }
});
