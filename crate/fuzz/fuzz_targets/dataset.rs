#![no_main]

use libfuzzer_sys::fuzz_target;
use softsep::io::{parse_dataset, render_dataset, ColumnTyping};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    for typing in [ColumnTyping::Infer, ColumnTyping::Continuous] {
        if let Ok(ds) = parse_dataset(text, typing) {
            let back = parse_dataset(&render_dataset(&ds), typing).unwrap();
            assert_eq!(back.n_samples(), ds.n_samples());
            assert_eq!(back.n_vars(), ds.n_vars());
        }
    }
});
