#![no_main]

use libfuzzer_sys::fuzz_target;
use softsep_cli::config::{parse_config, FileConfig, RunConfig};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(file) = parse_config(text) {
        let _ = RunConfig::resolve(&FileConfig::default(), &file);
    }
});
