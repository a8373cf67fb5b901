#![no_main]

use libfuzzer_sys::fuzz_target;
use ytwin_llm::wire::parse_completion;

fuzz_target!(|data: &[u8]| {
    let _ = parse_completion(data);
});
