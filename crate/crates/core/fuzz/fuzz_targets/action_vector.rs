#![no_main]

use ca_choreo::{ActionVector, Label};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(v) = text.parse::<ActionVector>() {
        assert_eq!(v.to_string().parse::<ActionVector>().as_ref(), Ok(&v));
        let _ = v.classification();
    }
    if let Ok(l) = text.parse::<Label>() {
        assert_eq!(l.to_string().parse::<Label>().as_ref(), Ok(&l));
    }
});
