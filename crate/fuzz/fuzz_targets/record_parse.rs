#![no_main]

use libfuzzer_sys::fuzz_target;
use saag_core::GameRecord;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(record) = GameRecord::parse(text) {
            let again = GameRecord::parse(&record.to_text()).expect("serialized record parses");
            assert_eq!(again, record);
        }
    }
});
