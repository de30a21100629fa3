#![no_main]

use ca_choreo::io::{system_from_json, system_to_json};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(sys) = system_from_json(text) {
        let again = system_from_json(&system_to_json(&sys)).expect("written system reloads");
        assert_eq!(again, sys);
    }
});
