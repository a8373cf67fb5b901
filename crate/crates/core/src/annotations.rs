//! Mention and hashtag extraction from generated text.

use std::collections::HashSet;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Annotations {
    pub mentions: Vec<String>,
    pub hashtags: Vec<String>,
}

fn is_word(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Scans `text` for `@name` and `#tag` tokens.
///
/// A marker only opens a token at the start of the text or after a non-word
/// character, so `mail@host` is not a mention. Mentions are kept only when the
/// name is registered; hashtags are lowercased. Both lists keep first-seen
/// order without duplicates.
pub fn extract_annotations<S>(text: &str, known_agents: &HashSet<String, S>) -> Annotations
where
    S: std::hash::BuildHasher,
{
    let mut out = Annotations::default();
    let mut seen_mentions = HashSet::new();
    let mut seen_tags = HashSet::new();

    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut i = 0;
    while i < chars.len() {
        let (_, c) = chars[i];
        let at_boundary = i == 0 || !is_word(chars[i - 1].1);
        if (c == '@' || c == '#') && at_boundary {
            let start = i + 1;
            let mut end = start;
            while end < chars.len() && is_word(chars[end].1) {
                end += 1;
            }
            if end > start {
                let body_start = chars[start].0;
                let body_end = chars.get(end).map_or(text.len(), |(b, _)| *b);
                let body = &text[body_start..body_end];
                if c == '@' {
                    if known_agents.contains(body) && seen_mentions.insert(body.to_string()) {
                        out.mentions.push(body.to_string());
                    }
                } else {
                    let tag = body.to_lowercase();
                    if seen_tags.insert(tag.clone()) {
                        out.hashtags.push(tag);
                    }
                }
            }
            i = end.max(i + 1);
        } else {
            i += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn agents(names: &[&str]) -> HashSet<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn dedups_after_lowercasing() {
        let a = extract_annotations("I agree @kim_s on #Climate #climate", &agents(&["kim_s"]));
        assert_eq!(a.mentions, vec!["kim_s"]);
        assert_eq!(a.hashtags, vec!["climate"]);
    }

    #[test]
    fn empty_case() {
        let a = extract_annotations("no tags here", &agents(&[]));
        assert_eq!(a, Annotations::default());
    }

    #[test]
    fn dangling_mention_dropped() {
        let a = extract_annotations("@ghost says #Healthcare", &agents(&["kim_s"]));
        assert!(a.mentions.is_empty());
        assert_eq!(a.hashtags, vec!["healthcare"]);
    }

    #[test]
    fn punctuation_and_email() {
        let a = extract_annotations("(@bob), write to x@bob.com! #Tax-cuts #", &agents(&["bob", "x"]));
        assert_eq!(a.mentions, vec!["bob"]);
        assert_eq!(a.hashtags, vec!["tax"]);
    }

    #[test]
    fn multibyte_text() {
        let a = extract_annotations("città #Ambiente è @anna_b", &agents(&["anna_b"]));
        assert_eq!(a.hashtags, vec!["ambiente"]);
        assert_eq!(a.mentions, vec!["anna_b"]);
    }

    /// Independent oracle: a regex scan plus a registry membership test.
    fn oracle(text: &str, known: &HashSet<String>) -> Annotations {
        let re = regex::Regex::new(
            r"(?:^|[^\p{Alphabetic}\p{Nd}\p{Nl}\p{No}_])([@#])([\p{Alphabetic}\p{Nd}\p{Nl}\p{No}_]+)",
        )
        .unwrap();
        let mut out = Annotations::default();
        // overlapping prefixes: the boundary char can belong to the previous token,
        // so scan with an explicit cursor
        let mut pos = 0;
        while let Some(caps) = re.captures_at(text, pos) {
            let marker = caps.get(1).unwrap();
            let body = caps.get(2).unwrap();
            match marker.as_str() {
                "@" => {
                    let name = body.as_str().to_string();
                    if known.contains(&name) && !out.mentions.contains(&name) {
                        out.mentions.push(name);
                    }
                }
                _ => {
                    let tag = body.as_str().to_lowercase();
                    if !out.hashtags.contains(&tag) {
                        out.hashtags.push(tag);
                    }
                }
            }
            pos = marker.start() + 1;
        }
        out
    }

    #[test]
    fn oracle_agrees_on_fixed_cases() {
        let known = agents(&["kim_s", "a1"]);
        for text in ["@kim_s@a1 #x#y", "##double @@kim_s", "end with @a1", "#Über #über"] {
            assert_eq!(extract_annotations(text, &known), oracle(text, &known), "{text}");
        }
    }

    proptest! {
        #[test]
        fn matches_regex_oracle(text in "[a-zA-Z0-9_ @#,.!é]{0,60}") {
            let known = agents(&["a", "ab", "kim_s", "b1"]);
            prop_assert_eq!(extract_annotations(&text, &known), oracle(&text, &known));
        }

        #[test]
        fn every_hashtag_is_lowercase_and_unique(text in "\\PC{0,80}") {
            let a = extract_annotations(&text, &agents(&[]));
            let set: HashSet<_> = a.hashtags.iter().collect();
            prop_assert_eq!(set.len(), a.hashtags.len());
            for t in &a.hashtags {
                prop_assert_eq!(t.to_lowercase(), t.clone());
            }
        }
    }
}
