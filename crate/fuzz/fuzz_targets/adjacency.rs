#![no_main]

use libfuzzer_sys::fuzz_target;
use softsep::io::{parse_adjacency, render_adjacency};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(g) = parse_adjacency(text) {
        assert_eq!(parse_adjacency(&render_adjacency(&g)).unwrap(), g);
    }
});
