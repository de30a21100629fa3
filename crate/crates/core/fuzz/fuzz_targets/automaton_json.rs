#![no_main]

use ca_choreo::io::{automaton_from_json, automaton_to_json};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(a) = automaton_from_json(text) {
        let again = automaton_from_json(&automaton_to_json(&a)).expect("written automaton reloads");
        assert_eq!(again, a);
    }
});
