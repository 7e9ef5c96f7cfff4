#![no_main]

use libfuzzer_sys::fuzz_target;
use saag_core::gaze::{fixations, heatmap, parse_log};

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(trace) = parse_log(text) {
            let hm = heatmap(&trace, 5, Some(500.0));
            assert!(hm.grid.iter().all(|v| !v.is_nan()));
            let _ = fixations(&trace, 1.0 / 3.0, 100.0);
        }
    }
});
