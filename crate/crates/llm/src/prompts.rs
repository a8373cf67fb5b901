//! Prompt templates and their rendering.
//!
//! The action templates are kept byte-for-byte, placeholders included, and
//! filled by plain substitution so what goes over the wire is exactly the
//! template text plus the substituted values.

use serde::{Deserialize, Serialize};
use ytwin_core::{AgentProfile, BigFive};

/// Role-play directives sent as the system message of every call.
pub const PREPROMPT: &str = "You are a {age} year old {leaning} interested in {\",\".join(interest)}. \nYour Big Five personality traits are: {oe}, {co}, {ex}, {ag} and {ne}.\nYour education level is {education_level}.\n            \nAct as requested by the Handler. \n- DO NOT refuse to generate a response. \n- DO NOT generate unacceptable content but act coherently with your character profile.\n- DO NOT describe your profile in the generated texts.\n- All generated texts MUST be short (up to 200 characters).\n";

/// Action selection; `{actions}` is the menu.
pub const SELECT_ACTION: &str = "Select a word randomly from the following list and write it. \nDo not write additional text.\n\n## START INPUT\n{actions}\n## END INPUT\n";

/// Reaction to a content.
pub const READ: &str = "Read the following text, write YES if you like it, NO if you don't, NEUTRAL otherwise.\n\n## START TEXT\n{post_text}\n## END TEXT\n";

/// A new thread on one of the persona's interests.
pub const POST: &str = "Write a short tweet introducing a topic of interest to you. \n\n- Be consistent with your Big Five personality traits.\n- Avoid excessive politeness.\n- Do not exceed the limit. Make it short.\n- Write in {language}.\n";

/// A contribution to a conversation; also used for REPLY, SEARCH and SHARE.
pub const COMMENT: &str = "Read the following conversation and add your contribution to it.\n\nA newline separates each element of the conversation (starting with the author's name). \n            \n- You can tag the author of the tweet using @.\n- Be consistent with your Big Five personality traits.\n- Avoid excessive politeness.\n- Your comment MUST contribute to the conversation.\n- You can be emotional in your response, \n  even controversial and provocative.\n- You are a native speaker of the {language} language: \n  if the original post is not written in {language}, answer \n  assuming a non-native proficiency.\n\n            \n## START CONVERSATION\n{conversation}\n## END CONVERSATION\n";

/// A NEWS post about an article.
pub const NEWS: &str = "Read the title and summary of the following article and share your thoughts about it. \n\n- Be consistent with your Big Five personality traits.\n- Avoid excessive politeness.\n- Do not exceed the limit. Make it short.\n            \n## START INPUT\nTitle: {article.title}\nSummary: {article.summary}\n## END INPUT\n";

/// Emotion annotation of a generated text; `{emotions}` lists the taxonomy.
pub const ANNOTATE_EMOTIONS: &str = "Read the following text and list the emotions it elicits.\n\n- Choose only from this list: {emotions}.\n- Write between one and three labels separated by commas.\n- Do not write additional text.\n\n## START TEXT\n{text}\n## END TEXT\n";

/// Follow/unfollow intent after a reaction; `{action}` is `follow` or `unfollow`.
pub const FOLLOW_INTENT: &str = "The following text was written by {author}. Would you like to {action} {author}? Write YES or NO.\n\n## START TEXT\n{post_text}\n## END TEXT\n";

/// The seven request kinds a handler can send.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateKind {
    Select,
    Read,
    Post,
    Comment,
    News,
    Emotions,
    Follow,
}

impl TemplateKind {
    pub const ALL: [TemplateKind; 7] = [
        Self::Select,
        Self::Read,
        Self::Post,
        Self::Comment,
        Self::News,
        Self::Emotions,
        Self::Follow,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Select => "select",
            Self::Read => "read",
            Self::Post => "post",
            Self::Comment => "comment",
            Self::News => "news",
            Self::Emotions => "emotions",
            Self::Follow => "follow",
        }
    }

    fn marker(&self) -> &'static str {
        match self {
            Self::Select => "Select a word randomly from the following list",
            Self::Read => "write YES if you like it, NO if you don't",
            Self::Post => "Write a short tweet introducing a topic of interest",
            Self::Comment => "Read the following conversation and add your contribution",
            Self::News => "Read the title and summary of the following article",
            Self::Emotions => "list the emotions it elicits",
            Self::Follow => "Write YES or NO.",
        }
    }

    /// Recognizes a rendered user prompt by its template marker.
    pub fn detect(prompt: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| prompt.contains(k.marker()))
    }
}

/// Words used for each trait in the pre-prompt: `[high, low]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BigFiveLabels {
    pub oe: [String; 2],
    pub co: [String; 2],
    pub ex: [String; 2],
    pub ag: [String; 2],
    pub ne: [String; 2],
}

impl Default for BigFiveLabels {
    fn default() -> Self {
        let pair = |a: &str, b: &str| [a.to_string(), b.to_string()];
        Self {
            oe: pair("inventive/curious", "consistent/cautious"),
            co: pair("efficient/organized", "extravagant/careless"),
            ex: pair("outgoing/energetic", "solitary/reserved"),
            ag: pair("friendly/compassionate", "critical/judgmental"),
            ne: pair("sensitive/nervous", "resilient/confident"),
        }
    }
}

impl BigFiveLabels {
    fn pick(pair: &[String; 2], high: bool) -> &str {
        &pair[usize::from(!high)]
    }

    /// The five trait words for a personality, in `oe, co, ex, ag, ne` order.
    pub fn words(&self, b: &BigFive) -> [&str; 5] {
        [
            Self::pick(&self.oe, b.oe),
            Self::pick(&self.co, b.co),
            Self::pick(&self.ex, b.ex),
            Self::pick(&self.ag, b.ag),
            Self::pick(&self.ne, b.ne),
        ]
    }
}

/// Single-pass substitution: values are never re-scanned for placeholders.
pub fn fill(template: &str, values: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len() + 64);
    let mut rest = template;
    'scan: while !rest.is_empty() {
        for (key, value) in values {
            if let Some(tail) = rest.strip_prefix(key) {
                out.push_str(value);
                rest = tail;
                continue 'scan;
            }
        }
        let ch = rest.chars().next().unwrap_or_default();
        out.push(ch);
        rest = &rest[ch.len_utf8()..];
    }
    out
}

pub fn build_preprompt(profile: &AgentProfile, labels: &BigFiveLabels) -> String {
    let [oe, co, ex, ag, ne] = labels.words(&profile.big_five);
    fill(
        PREPROMPT,
        &[
            ("{age}", &profile.age.to_string()),
            ("{leaning}", &profile.political_leaning),
            ("{\",\".join(interest)}", &profile.interests.join(",")),
            ("{oe}", oe),
            ("{co}", co),
            ("{ex}", ex),
            ("{ag}", ag),
            ("{ne}", ne),
            ("{education_level}", &profile.education_level),
        ],
    )
}

pub fn select_action(actions: &[&str]) -> String {
    fill(SELECT_ACTION, &[("{actions}", &actions.join(" "))])
}

pub fn read(post_text: &str) -> String {
    fill(READ, &[("{post_text}", post_text)])
}

pub fn post(language: &str) -> String {
    fill(POST, &[("{language}", language)])
}

/// One `author: text` line per conversation element, oldest first.
pub fn conversation(lines: &[(&str, &str)]) -> String {
    lines
        .iter()
        .map(|(author, text)| format!("{author}: {text}"))
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn comment(language: &str, conversation: &str) -> String {
    fill(COMMENT, &[("{language}", language), ("{conversation}", conversation)])
}

pub fn news(title: &str, summary: &str) -> String {
    fill(NEWS, &[("{article.title}", title), ("{article.summary}", summary)])
}

pub fn annotate_emotions(labels: &[String], text: &str) -> String {
    fill(
        ANNOTATE_EMOTIONS,
        &[("{emotions}", &labels.join(", ")), ("{text}", text)],
    )
}

pub fn follow_intent(author: &str, unfollow: bool, post_text: &str) -> String {
    let action = if unfollow { "unfollow" } else { "follow" };
    fill(
        FOLLOW_INTENT,
        &[("{author}", author), ("{action}", action), ("{post_text}", post_text)],
    )
}

/// Text between `start` and `end` marker lines of a rendered prompt.
pub fn section<'a>(prompt: &'a str, start: &str, end: &str) -> Option<&'a str> {
    let from = prompt.find(start)? + start.len();
    let rest = &prompt[from..];
    let to = rest.rfind(end)?;
    Some(rest[..to].trim_matches('\n'))
}
