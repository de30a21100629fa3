#![no_main]

use ca_choreo::cfsm::render_trace;
use ca_choreo::io::parse_trace;
use libfuzzer_sys::fuzz_target;

// first line: comma-separated participant names; rest: the trace
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let (head, trace) = text.split_once('\n').unwrap_or((text, ""));
    let names: Vec<String> = head.split(',').map(str::to_owned).collect();
    if let Ok(t) = parse_trace(trace, &names) {
        let shown = render_trace(&t, &names);
        assert_eq!(parse_trace(&shown, &names).as_ref(), Ok(&t));
    }
});
