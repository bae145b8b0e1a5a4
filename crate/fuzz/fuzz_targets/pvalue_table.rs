#![no_main]

//! Input is `meta.json`, `order0.csv` and `order1.csv` separated by NUL bytes.

use libfuzzer_sys::fuzz_target;
use softsep::ci::{parse_table, render_table};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let mut parts = text.splitn(3, '\0');
    let (Some(meta), Some(o0), Some(o1)) = (parts.next(), parts.next(), parts.next()) else {
        return;
    };
    if let Ok((table, meta)) = parse_table(meta, o0, o1) {
        let (o0, o1, m) = render_table(&table, &meta).unwrap();
        let (back, _) = parse_table(&m, &o0, &o1).unwrap();
        assert_eq!(back.n_vars(), table.n_vars());
    }
});
