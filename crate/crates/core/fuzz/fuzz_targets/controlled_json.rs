#![no_main]

use ca_choreo::io::{controlled_from_json, controlled_to_json};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cs) = controlled_from_json(text) {
        let again = controlled_from_json(&controlled_to_json(&cs)).expect("written controlled system reloads");
        assert_eq!(again, cs);
    }
});
