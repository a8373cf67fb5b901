//! Deterministic offline stand-in for a chat model.
//!
//! Every reply is a pure function of the template kind, the call context and
//! the prompt text: the same call always gets the same answer.

use rand::seq::IndexedRandom;
use rand::Rng;
use ytwin_core::seed;

use crate::parse::clamp_text;
use crate::prompts::{section, TemplateKind};
use crate::{CallContext, ChatRequest, ChatResponse, LlmError, LlmGateway};

/// Reaction odds for YES / NO; NEUTRAL takes the rest.
pub const P_YES: f64 = 0.5;
pub const P_NO: f64 = 0.2;
/// Odds of a YES to a follow/unfollow question.
pub const P_FOLLOW_YES: f64 = 0.5;

const POST_LINES: &[&str] = &[
    "Can we talk about {t} for a second?",
    "Hot take on {t}: we are all overthinking it.",
    "Spent the morning reading about {t}. Still not convinced.",
    "Nobody talks about {t} enough.",
    "{t} deserves a real debate, not slogans.",
    "Daily reminder that {t} affects everyone.",
    "Changed my mind about {t} this week.",
    "Why is {t} still so misunderstood?",
];

const COMMENT_LINES: &[&str] = &[
    "Not sure I agree, {t} is more complicated than that.",
    "Exactly this. {t} matters.",
    "Strong words, but where is the evidence?",
    "This is the kind of take on {t} we need.",
    "Hard disagree on this one.",
    "Interesting point, never thought of it that way.",
    "This thread is getting heated and I love it.",
    "Fair, but what about {t}?",
];

const NEWS_LINES: &[&str] = &[
    "Just read \"{h}\". Thoughts?",
    "\"{h}\" says a lot about where we are.",
    "Can't believe \"{h}\" is real news.",
    "\"{h}\" is worth reading, even if I disagree.",
];

#[derive(Debug, Clone, Default)]
pub struct MockLlm;

impl MockLlm {
    pub fn new() -> Self {
        Self
    }
}

/// `#tag` form of an interest: lowercase, alphanumerics only.
pub fn hashtag(interest: &str) -> String {
    let tag: String = interest
        .chars()
        .filter(|c| c.is_alphanumeric() || *c == '_')
        .flat_map(char::to_lowercase)
        .collect();
    format!("#{tag}")
}

fn interests(system: &str) -> Vec<&str> {
    let Some(start) = system.find("interested in ") else {
        return Vec::new();
    };
    let rest = &system[start + "interested in ".len()..];
    let end = rest.find(". \n").or_else(|| rest.find('\n')).unwrap_or(rest.len());
    rest[..end]
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect()
}

fn shorten(text: &str, max: usize) -> String {
    if text.chars().count() <= max {
        return text.to_string();
    }
    let head: String = text.chars().take(max).collect();
    match head.rfind(' ') {
        Some(i) if i > 0 => format!("{}...", &head[..i]),
        _ => format!("{head}..."),
    }
}

fn with_tags<R: Rng>(rng: &mut R, base: String, topics: &[&str], mention: Option<&str>) -> String {
    let mut text = String::new();
    if let Some(m) = mention {
        text.push('@');
        text.push_str(m);
        text.push(' ');
    }
    text.push_str(&base);
    let n = rng.random_range(0..=2usize).min(topics.len());
    let picked: Vec<&&str> = topics.choose_multiple(rng, n).collect();
    for t in picked {
        let tag = hashtag(t);
        if tag.len() > 1 {
            text.push(' ');
            text.push_str(&tag);
        }
    }
    clamp_text(&text)
}

fn generate<R: Rng>(rng: &mut R, kind: TemplateKind, req: &ChatRequest) -> Result<String, LlmError> {
    let topics = interests(&req.system);
    let topic = topics.choose(rng).copied().unwrap_or("this");
    Ok(match kind {
        TemplateKind::Post => {
            let line = POST_LINES.choose(rng).expect("non-empty bank");
            with_tags(rng, capitalize(&line.replace("{t}", topic)), &topics, None)
        }
        TemplateKind::Comment => {
            let conv = section(&req.user, "## START CONVERSATION\n", "## END CONVERSATION").unwrap_or("");
            let mut authors: Vec<&str> = conv
                .lines()
                .filter_map(|l| l.split_once(": ").map(|(a, _)| a.trim()))
                .filter(|a| !a.is_empty() && !a.contains(char::is_whitespace))
                .collect();
            authors.dedup();
            let mention = if !authors.is_empty() && rng.random_bool(0.5) {
                authors.choose(rng).copied()
            } else {
                None
            };
            let line = COMMENT_LINES.choose(rng).expect("non-empty bank");
            with_tags(rng, capitalize(&line.replace("{t}", topic)), &topics, mention)
        }
        TemplateKind::News => {
            let input = section(&req.user, "## START INPUT\n", "## END INPUT").unwrap_or("");
            let title = input
                .lines()
                .find_map(|l| l.strip_prefix("Title: "))
                .unwrap_or("this article");
            let line = NEWS_LINES.choose(rng).expect("non-empty bank");
            with_tags(rng, line.replace("{h}", &shorten(title.trim(), 90)), &topics, None)
        }
        _ => unreachable!("not a generation template"),
    })
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

impl LlmGateway for MockLlm {
    fn complete(&self, req: &ChatRequest, ctx: &CallContext) -> Result<ChatResponse, LlmError> {
        let kind = TemplateKind::detect(&req.user).ok_or(LlmError::UnrecognizedTemplate)?;
        let stream = seed::derive(
            ctx.agent_seed,
            &[
                "mock",
                kind.as_str(),
                &ctx.round.to_string(),
                &ctx.call_index.to_string(),
            ],
        );
        let mut rng = seed::rng(stream);
        let text = match kind {
            TemplateKind::Select => {
                let list = section(&req.user, "## START INPUT\n", "## END INPUT").unwrap_or("");
                let words: Vec<&str> = list.split_whitespace().collect();
                words
                    .choose(&mut rng)
                    .map(|w| w.to_string())
                    .ok_or(LlmError::UnrecognizedTemplate)?
            }
            TemplateKind::Read => {
                let u: f64 = rng.random();
                if u < P_YES {
                    "YES"
                } else if u < P_YES + P_NO {
                    "NO"
                } else {
                    "NEUTRAL"
                }
                .to_string()
            }
            TemplateKind::Follow => if rng.random_bool(P_FOLLOW_YES) { "YES" } else { "NO" }.to_string(),
            TemplateKind::Emotions => {
                let labels: Vec<&str> = req
                    .user
                    .split_once("Choose only from this list: ")
                    .and_then(|(_, rest)| rest.split_once(".\n"))
                    .map(|(list, _)| list.split(", ").filter(|l| !l.is_empty()).collect())
                    .unwrap_or_default();
                let n = rng.random_range(1..=3usize).min(labels.len());
                labels
                    .choose_multiple(&mut rng, n)
                    .copied()
                    .collect::<Vec<_>>()
                    .join(", ")
            }
            TemplateKind::Post | TemplateKind::Comment | TemplateKind::News => generate(&mut rng, kind, req)?,
        };
        Ok(ChatResponse {
            text,
            finish_reason: Some("stop".into()),
        })
    }
}
