#![no_main]

use libfuzzer_sys::fuzz_target;
use ytwin_core::news::parse_feed;

fuzz_target!(|data: &[u8]| {
    let _ = parse_feed(data);
});
