#![no_main]

use libfuzzer_sys::fuzz_target;
use ytwin_core::news::parse_catalog;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = parse_catalog(text);
    }
});
