//! Lenient readers for model replies.
//!
//! Real models pad answers with punctuation, quotes, markdown and the odd
//! explanation. These functions pull out the one thing the handler asked for
//! and report when they could not.

/// Maximum length of any generated text, in characters.
pub const MAX_TEXT_CHARS: usize = 200;

fn tokens(reply: &str) -> impl Iterator<Item = &str> {
    reply
        .split(|c: char| !(c.is_alphanumeric() || c == '_'))
        .filter(|t| !t.is_empty())
}

/// The menu entry named in `reply`.
///
/// Matching is case-insensitive on whole words. A reply naming no entry, or
/// more than one distinct entry, is ambiguous and yields `None`.
pub fn parse_choice<'m>(reply: &str, menu: &[&'m str]) -> Option<&'m str> {
    let mut found: Option<&'m str> = None;
    for t in tokens(reply) {
        if let Some(entry) = menu.iter().find(|m| m.eq_ignore_ascii_case(t)) {
            match found {
                Some(prev) if prev != *entry => return None,
                _ => found = Some(entry),
            }
        }
    }
    found
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    Yes,
    No,
    Neutral,
}

/// First case-insensitive YES/NO/NEUTRAL word wins; `None` when there is none.
pub fn parse_verdict(reply: &str) -> Option<Verdict> {
    tokens(reply).find_map(|t| {
        if t.eq_ignore_ascii_case("yes") {
            Some(Verdict::Yes)
        } else if t.eq_ignore_ascii_case("no") {
            Some(Verdict::No)
        } else if t.eq_ignore_ascii_case("neutral") {
            Some(Verdict::Neutral)
        } else {
            None
        }
    })
}

/// Taxonomy labels found in `reply`, in reply order, without duplicates.
pub fn parse_emotions(reply: &str, taxonomy: &[String]) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for t in tokens(reply) {
        let t = t.to_lowercase();
        if taxonomy.contains(&t) && !out.contains(&t) {
            out.push(t);
        }
    }
    out
}

/// Normalizes a generated text: trims whitespace and wrapping quotes, then
/// cuts it to [`MAX_TEXT_CHARS`] at the last whitespace that fits.
pub fn clamp_text(reply: &str) -> String {
    let mut text = reply.trim();
    for (open, close) in [('"', '"'), ('\u{201c}', '\u{201d}'), ('\'', '\'')] {
        if text.len() >= 2 && text.starts_with(open) && text.ends_with(close) {
            text = text[open.len_utf8()..text.len() - close.len_utf8()].trim();
        }
    }
    if text.chars().count() <= MAX_TEXT_CHARS {
        return text.to_string();
    }
    let cut = text
        .char_indices()
        .nth(MAX_TEXT_CHARS)
        .map(|(i, _)| i)
        .unwrap_or(text.len());
    let head = &text[..cut];
    let head = match head.rfind(char::is_whitespace) {
        // the character right after the cut is whitespace: keep the full head
        _ if text[cut..].starts_with(char::is_whitespace) => head,
        Some(i) if i > 0 => &head[..i],
        _ => head,
    };
    head.trim_end().to_string()
}
