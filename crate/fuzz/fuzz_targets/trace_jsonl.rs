#![no_main]

use libfuzzer_sys::fuzz_target;
use softsep::io::{parse_trace, render_trace};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(records) = parse_trace(text) {
        if let Ok(out) = render_trace(&records) {
            assert_eq!(parse_trace(&out).unwrap().len(), records.len());
        }
    }
});
