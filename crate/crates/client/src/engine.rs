//! Agent behavior: action selection and the action routines.
//!
//! Every routine goes through the platform API (never around it) and every
//! random choice draws from the [`Turn`]'s stream, so under the mock model a
//! run is a pure function of the recipe seed.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use ytwin_core::api::PublishRequest;
use ytwin_core::recommenders::{pick_suggestion, ContentRecommender, ContentVariant, FollowVariant};
use ytwin_core::{seed, AgentProfile, ContentKind, FollowAction, ReactionValue, TimelineItem, TimelineMode};
use ytwin_llm::parse::{clamp_text, parse_choice, parse_emotions, parse_verdict, Verdict};
use ytwin_llm::{build_preprompt, prompts, BigFiveLabels, CallContext, ChatRequest, LlmGateway, SamplingOptions};

use crate::transport::PlatformClient;
use crate::ClientError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ActionKind {
    News,
    Post,
    Comment,
    Reply,
    Share,
    Read,
    Search,
    Follow,
    None,
}

impl ActionKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::News => "NEWS",
            Self::Post => "POST",
            Self::Comment => "COMMENT",
            Self::Reply => "REPLY",
            Self::Share => "SHARE",
            Self::Read => "READ",
            Self::Search => "SEARCH",
            Self::Follow => "FOLLOW",
            Self::None => "NONE",
        }
    }
}

impl fmt::Display for ActionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The hourly menu, in the order it is offered to the model.
pub const HOURLY_MENU: [ActionKind; 8] = [
    ActionKind::News,
    ActionKind::Post,
    ActionKind::Comment,
    ActionKind::Reply,
    ActionKind::Share,
    ActionKind::Read,
    ActionKind::Search,
    ActionKind::None,
];

pub const DAILY_MENU: [ActionKind; 2] = [ActionKind::Follow, ActionKind::None];

#[derive(Debug, Clone)]
pub struct EngineConfig {
    pub labels: BigFiveLabels,
    pub emotions: Vec<String>,
    pub max_length_thread_reading: usize,
    pub sampling: SamplingOptions,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            labels: BigFiveLabels::default(),
            emotions: ytwin_core::EmotionTaxonomy::go_emotions().labels,
            max_length_thread_reading: 5,
            sampling: SamplingOptions::default(),
        }
    }
}

/// What an action did.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Published {
        kind: ContentKind,
        id: u64,
    },
    Reacted {
        content: u64,
        value: ReactionValue,
        follow: Option<FollowAction>,
    },
    NoReaction {
        content: u64,
    },
    Followed {
        followee: String,
    },
    /// Nothing to act on (empty timeline, no article, empty pool, NONE).
    Idle,
}

/// One agent acting within one round (or the daily phase).
pub struct Turn<'a> {
    pub agent: &'a AgentProfile,
    pub round: u64,
    pub rng: ChaCha8Rng,
    llm_seed: u64,
    calls: u64,
}

impl<'a> Turn<'a> {
    /// `phase` separates independent decision streams within one round.
    pub fn new(master: u64, agent: &'a AgentProfile, round: u64, phase: &str) -> Self {
        let agent_seed = seed::derive(master, &["agent", &agent.name]);
        Self {
            agent,
            round,
            rng: seed::stream(agent_seed, &["turn", phase, &round.to_string()]),
            llm_seed: seed::derive(agent_seed, &["llm", phase]),
            calls: 0,
        }
    }

    fn context(&mut self) -> CallContext {
        let ctx = CallContext {
            agent_seed: self.llm_seed,
            round: self.round,
            call_index: self.calls,
        };
        self.calls += 1;
        ctx
    }
}

/// Running totals a client reports in its manifest.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EngineStats {
    /// Times each action was chosen.
    pub selected: BTreeMap<ActionKind, u64>,
    /// Times each chosen action changed platform state.
    pub effective: BTreeMap<ActionKind, u64>,
    pub likes: u64,
    pub dislikes: u64,
    pub follows_after_read: u64,
    pub unfollows_after_read: u64,
    /// Model replies that matched nothing and fell back to a default.
    pub unparsed_replies: u64,
    /// Actions dropped because the model endpoint gave up.
    pub skipped_llm_unavailable: u64,
}

pub struct Engine {
    api: PlatformClient,
    llm: Arc<dyn LlmGateway>,
    cfg: EngineConfig,
    master: u64,
    pub stats: EngineStats,
}

impl Engine {
    pub fn new(api: PlatformClient, llm: Arc<dyn LlmGateway>, cfg: EngineConfig, master: u64) -> Self {
        Self {
            api,
            llm,
            cfg,
            master,
            stats: EngineStats::default(),
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master
    }

    pub fn api(&self) -> &PlatformClient {
        &self.api
    }

    fn ask(&self, turn: &mut Turn<'_>, system: &str, user: String) -> Result<String, ClientError> {
        let req = ChatRequest {
            model: turn.agent.llm_model.clone(),
            system: system.to_string(),
            user,
            options: self.cfg.sampling.clone(),
        };
        let ctx = turn.context();
        Ok(self.llm.complete(&req, &ctx)?.text)
    }

    fn persona(&self, agent: &AgentProfile) -> String {
        build_preprompt(agent, &self.cfg.labels)
    }

    pub fn select_action(&mut self, turn: &mut Turn<'_>, menu: &[ActionKind]) -> Result<ActionKind, ClientError> {
        let words: Vec<&str> = menu.iter().map(ActionKind::as_str).collect();
        let reply = self.ask(turn, &self.persona(turn.agent), prompts::select_action(&words))?;
        match parse_choice(&reply, &words) {
            Some(w) => Ok(menu[words.iter().position(|x| *x == w).expect("choice comes from the menu")]),
            None => {
                self.stats.unparsed_replies += 1;
                Ok(ActionKind::None)
            }
        }
    }

    /// Chooses and performs one action from `menu`.
    ///
    /// An unreachable model endpoint skips the action instead of failing the
    /// round.
    pub fn act(&mut self, turn: &mut Turn<'_>, menu: &[ActionKind]) -> Result<(ActionKind, Outcome), ClientError> {
        let result = self.select_action(turn, menu).and_then(|action| {
            *self.stats.selected.entry(action).or_default() += 1;
            let outcome = self.perform(turn, action)?;
            if outcome_changes_state(&outcome) {
                *self.stats.effective.entry(action).or_default() += 1;
            }
            Ok((action, outcome))
        });
        match result {
            Err(ClientError::Llm(ytwin_llm::LlmError::EndpointUnavailable { attempts, last })) => {
                tracing::warn!(agent = %turn.agent.name, attempts, %last, "llm unavailable, action skipped");
                self.stats.skipped_llm_unavailable += 1;
                Ok((ActionKind::None, Outcome::Idle))
            }
            other => other,
        }
    }

    pub fn perform(&mut self, turn: &mut Turn<'_>, action: ActionKind) -> Result<Outcome, ClientError> {
        match action {
            ActionKind::Read => self.do_read(turn),
            ActionKind::Post => self.do_post(turn),
            ActionKind::Comment => self.do_comment(turn, TimelineMode::Comment),
            ActionKind::Reply => self.do_comment(turn, TimelineMode::Reply),
            ActionKind::Search => self.do_comment(turn, TimelineMode::Search),
            ActionKind::News => self.do_news(turn),
            ActionKind::Share => self.do_share(turn),
            ActionKind::Follow => self.do_follow(turn),
            ActionKind::None => Ok(Outcome::Idle),
        }
    }

    /// The agent's content recommender, seeded for this call when it is random.
    fn recommender(&self, turn: &mut Turn<'_>) -> ContentRecommender {
        let rec = turn.agent.content_recommender;
        if rec.id == ContentVariant::Random {
            rec.with_seed(turn.rng.random())
        } else {
            rec
        }
    }

    fn timeline(
        &self,
        turn: &mut Turn<'_>,
        mode: TimelineMode,
        kinds: Option<Vec<ContentKind>>,
    ) -> Result<Option<TimelineItem>, ClientError> {
        let rec = self.recommender(turn);
        let items = self.api.timeline(&turn.agent.name, &rec, mode, kinds)?;
        // the server already leaves out own content; keep the guard local too
        let items: Vec<TimelineItem> = items
            .into_iter()
            .filter(|i| i.content.author != turn.agent.name)
            .collect();
        Ok(items.choose(&mut turn.rng).cloned())
    }

    fn emotions(&mut self, turn: &mut Turn<'_>, system: &str, text: &str) -> Result<Vec<String>, ClientError> {
        let reply = self.ask(turn, system, prompts::annotate_emotions(&self.cfg.emotions, text))?;
        let labels = parse_emotions(&reply, &self.cfg.emotions);
        if labels.is_empty() {
            self.stats.unparsed_replies += 1;
        }
        Ok(labels)
    }

    fn publish(
        &mut self,
        turn: &mut Turn<'_>,
        system: &str,
        kind: ContentKind,
        raw: &str,
        link: impl FnOnce(&mut PublishRequest),
    ) -> Result<Outcome, ClientError> {
        let text = clamp_text(raw);
        if text.is_empty() {
            self.stats.unparsed_replies += 1;
            return Ok(Outcome::Idle);
        }
        let emotions = self.emotions(turn, system, &text)?;
        let mut req = PublishRequest {
            author: turn.agent.name.clone(),
            text,
            parent: None,
            article: None,
            shared_from: None,
            emotions,
        };
        link(&mut req);
        let resp = self.api.publish(kind, &req)?;
        Ok(Outcome::Published { kind, id: resp.id })
    }

    pub fn do_read(&mut self, turn: &mut Turn<'_>) -> Result<Outcome, ClientError> {
        let Some(item) = self.timeline(turn, TimelineMode::Read, None)? else {
            return Ok(Outcome::Idle);
        };
        let system = self.persona(turn.agent);
        let content = item.content.id;
        let reply = self.ask(turn, &system, prompts::read(&item.content.text))?;
        let value = match parse_verdict(&reply) {
            Some(Verdict::Yes) => ReactionValue::Like,
            Some(Verdict::No) => ReactionValue::Dislike,
            Some(Verdict::Neutral) => return Ok(Outcome::NoReaction { content }),
            None => {
                self.stats.unparsed_replies += 1;
                return Ok(Outcome::NoReaction { content });
            }
        };
        self.api.react(&turn.agent.name, content, value)?;
        match value {
            ReactionValue::Like => self.stats.likes += 1,
            ReactionValue::Dislike => self.stats.dislikes += 1,
        }

        let author = &item.content.author;
        let unfollow = value == ReactionValue::Dislike;
        let reply = self.ask(
            turn,
            &system,
            prompts::follow_intent(author, unfollow, &item.content.text),
        )?;
        let follow = match (parse_verdict(&reply), value) {
            (Some(Verdict::Yes), ReactionValue::Like) if !item.followee_authored => {
                self.api.follow(&turn.agent.name, author, FollowAction::Follow)?;
                self.stats.follows_after_read += 1;
                Some(FollowAction::Follow)
            }
            (Some(Verdict::Yes), ReactionValue::Dislike) if item.followee_authored => {
                self.api.follow(&turn.agent.name, author, FollowAction::Unfollow)?;
                self.stats.unfollows_after_read += 1;
                Some(FollowAction::Unfollow)
            }
            _ => None,
        };
        Ok(Outcome::Reacted { content, value, follow })
    }

    pub fn do_post(&mut self, turn: &mut Turn<'_>) -> Result<Outcome, ClientError> {
        // the pre-prompt carries only a sample of the interests this time
        let mut persona = turn.agent.clone();
        if !persona.interests.is_empty() {
            let n = turn.rng.random_range(1..=persona.interests.len());
            persona.interests = persona.interests.choose_multiple(&mut turn.rng, n).cloned().collect();
        }
        let system = self.persona(&persona);
        let raw = self.ask(turn, &system, prompts::post(turn.agent.primary_language()))?;
        self.publish(turn, &system, ContentKind::Post, &raw, |_| {})
    }

    /// COMMENT, REPLY and SEARCH: comment on a content picked from the
    /// timeline in `mode`.
    pub fn do_comment(&mut self, turn: &mut Turn<'_>, mode: TimelineMode) -> Result<Outcome, ClientError> {
        let Some(item) = self.timeline(turn, mode, None)? else {
            return Ok(Outcome::Idle);
        };
        let parent = item.content.id;
        let conv = self.conversation_view(parent)?;
        let lines: Vec<(&str, &str)> = conv.iter().map(|(a, t)| (a.as_str(), t.as_str())).collect();
        let system = self.persona(turn.agent);
        let user = prompts::comment(turn.agent.primary_language(), &prompts::conversation(&lines));
        let raw = self.ask(turn, &system, user)?;
        self.publish(turn, &system, ContentKind::Comment, &raw, |r| r.parent = Some(parent))
    }

    /// The last `max_length_thread_reading` messages of the thread ending at
    /// `content`, root side first.
    pub fn conversation_view(&self, content: u64) -> Result<Vec<(String, String)>, ClientError> {
        let path = self.api.thread(content)?;
        let skip = path.len().saturating_sub(self.cfg.max_length_thread_reading);
        Ok(path.into_iter().skip(skip).map(|c| (c.author, c.text)).collect())
    }

    pub fn do_news(&mut self, turn: &mut Turn<'_>) -> Result<Outcome, ClientError> {
        let picked = self.api.pick_article(&turn.agent.name, turn.rng.random())?;
        let Some(article) = picked.article else {
            return Ok(Outcome::Idle);
        };
        let system = self.persona(turn.agent);
        let raw = self.ask(turn, &system, prompts::news(&article.title, &article.summary))?;
        self.publish(turn, &system, ContentKind::News, &raw, |r| r.article = Some(article.id))
    }

    pub fn do_share(&mut self, turn: &mut Turn<'_>) -> Result<Outcome, ClientError> {
        let kinds = vec![ContentKind::News, ContentKind::Share];
        let Some(item) = self.timeline(turn, TimelineMode::Read, Some(kinds))? else {
            return Ok(Outcome::Idle);
        };
        let source = item.content.id;
        let system = self.persona(turn.agent);
        let conv = prompts::conversation(&[(item.content.author.as_str(), item.content.text.as_str())]);
        let raw = self.ask(turn, &system, prompts::comment(turn.agent.primary_language(), &conv))?;
        self.publish(turn, &system, ContentKind::Share, &raw, |r| {
            r.shared_from = Some(source)
        })
    }

    /// Follows one account drawn from the follow recommender's shortlist.
    /// No model call is involved.
    pub fn do_follow(&mut self, turn: &mut Turn<'_>) -> Result<Outcome, ClientError> {
        let mut rec = turn.agent.follow_recommender;
        if rec.id == FollowVariant::Random {
            rec = rec.with_seed(turn.rng.random());
        }
        let shortlist = self.api.follow_suggestions(&turn.agent.name, &rec)?;
        let Some(pick) = pick_suggestion(&shortlist, &mut turn.rng) else {
            return Ok(Outcome::Idle);
        };
        self.api.follow(&turn.agent.name, &pick.name, FollowAction::Follow)?;
        Ok(Outcome::Followed {
            followee: pick.name.clone(),
        })
    }
}

fn outcome_changes_state(o: &Outcome) -> bool {
    matches!(
        o,
        Outcome::Published { .. } | Outcome::Reacted { .. } | Outcome::Followed { .. }
    )
}
