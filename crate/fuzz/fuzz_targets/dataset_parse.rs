#![no_main]

use libfuzzer_sys::fuzz_target;
use saag_situation::{parse_dataset, PreparedGraph};

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok((_, examples)) = parse_dataset(text) {
            for ex in &examples {
                let _ = PreparedGraph::new(ex);
            }
        }
    }
});
