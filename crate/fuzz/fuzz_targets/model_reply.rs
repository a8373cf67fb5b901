#![no_main]

use libfuzzer_sys::fuzz_target;
use ytwin_llm::parse::{clamp_text, parse_choice, parse_emotions, parse_verdict};
use ytwin_llm::TemplateKind;

const MENU: [&str; 8] = ["NEWS", "POST", "COMMENT", "REPLY", "SHARE", "READ", "SEARCH", "NONE"];

fuzz_target!(|data: &[u8]| {
    let Ok(reply) = std::str::from_utf8(data) else {
        return;
    };
    if let Some(choice) = parse_choice(reply, &MENU) {
        assert!(MENU.contains(&choice));
    }
    let _ = parse_verdict(reply);
    let taxonomy: Vec<String> = ["joy", "anger", "surprise"].map(String::from).to_vec();
    for e in parse_emotions(reply, &taxonomy) {
        assert!(taxonomy.contains(&e));
    }
    assert!(clamp_text(reply).chars().count() <= ytwin_llm::parse::MAX_TEXT_CHARS);
    let _ = TemplateKind::detect(reply);
});
