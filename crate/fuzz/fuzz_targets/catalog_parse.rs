#![no_main]

use libfuzzer_sys::fuzz_target;
use saag_core::TileCatalog;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(catalog) = TileCatalog::parse(text) {
            let _ = catalog.hash();
        }
    }
});
