#![no_main]

use libfuzzer_sys::fuzz_target;
use ytwin_core::api::{dispatch, ENDPOINTS};
use ytwin_core::Platform;

// bytes 0 and 1 pick two endpoints, the rest splits into their bodies; the
// second request runs against whatever state the first one left
fuzz_target!(|data: &[u8]| {
    let [first, second, rest @ ..] = data else {
        return;
    };
    let (a, b) = rest.split_at(rest.len() / 2);
    let mut p = Platform::in_memory();
    let _ = dispatch(&mut p, ENDPOINTS[*first as usize % ENDPOINTS.len()], a);
    let _ = dispatch(&mut p, ENDPOINTS[*second as usize % ENDPOINTS.len()], b);
    assert_eq!(p.audit().referential_violations(), 0);
});
