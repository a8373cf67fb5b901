#![no_main]

use std::collections::HashSet;

use libfuzzer_sys::fuzz_target;
use ytwin_core::extract_annotations;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let known: HashSet<String> = ["ann".to_string(), "ben_2".to_string()].into();
    let a = extract_annotations(text, &known);
    for tag in &a.hashtags {
        assert!(!tag.is_empty());
    }
});
