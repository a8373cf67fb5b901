#![no_main]

use libfuzzer_sys::fuzz_target;
use ytwin_client::Recipe;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    // an accepted recipe must also survive the derived accessors
    if let Ok(r) = Recipe::from_json(text) {
        assert_eq!(r.hourly_activity().len() as u64, r.simulation.slots);
        let _ = r.total_rounds();
        let _ = r.content_recommender();
        let _ = r.follow_recommender();
        let _ = r.settings();
    }
});
