#![no_main]

use libfuzzer_sys::fuzz_target;
use softsep::io::{parse_weights, render_weights};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(w) = parse_weights(text) {
        let back = parse_weights(&render_weights(&w)).unwrap();
        assert_eq!(back.n_nodes(), w.n_nodes());
    }
});
