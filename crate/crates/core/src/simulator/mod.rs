//! Profile-conditioned seekers: a prompt-driven mode and a deterministic
//! rule mode.

mod llm;
mod rule;

use serde::{Deserialize, Serialize};

use crate::catalog::{Catalog, Item};
use crate::dialogue::{AgentTurn, SeekerResponse, Turn};
use crate::gateway::{Gateway, GatewayError};
use crate::profiles::{DecisionStyle, Openness, UserProfile};
use crate::text;

pub use llm::{llm_open, llm_respond, seeker_profile_json};
pub use rule::{category_reply, requested_levels, rule_open, rule_respond, style_cue};

/// Knobs of the rule seeker.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RuleParams {
    /// Keyword fraction needed to buy an in-budget item.
    pub theta_in: f64,
    /// Keyword fraction needed to be persuaded toward an over-budget item.
    pub theta_out: f64,
    /// Fraction at which a declined item still draws a request for details.
    pub theta_interest: f64,
    /// Extra fraction Framing needs since it fits no particular style.
    pub framing_margin: f64,
    pub reveal_active: usize,
    pub reveal_neutral: usize,
    pub reveal_passive: usize,
    pub extra_stopwords: Vec<String>,
}

impl Default for RuleParams {
    fn default() -> Self {
        Self {
            theta_in: 0.5,
            theta_out: 0.5,
            theta_interest: 0.25,
            framing_margin: 0.2,
            reveal_active: 3,
            reveal_neutral: 2,
            reveal_passive: 1,
            extra_stopwords: Vec::new(),
        }
    }
}

impl RuleParams {
    pub fn reveal(&self, openness: Openness) -> usize {
        match openness {
            Openness::Active => self.reveal_active,
            Openness::Neutral => self.reveal_neutral,
            Openness::Passive => self.reveal_passive,
        }
    }
}

/// Need keywords of a profile: content tokens of its target needs.
pub fn need_keywords(profile: &UserProfile, extra_stopwords: &[String]) -> Vec<String> {
    text::keywords(&profile.target_needs, extra_stopwords)
}

/// Words an item is judged by: title, description and features.
pub fn item_words(item: &Item) -> Vec<String> {
    let mut words = text::tokens(&item.title);
    words.extend(text::tokens(&item.description));
    for f in &item.features {
        words.extend(text::tokens(f));
    }
    words
}

/// Share of `keywords` present in the item's text; 0 for no keywords.
pub fn keyword_fraction(keywords: &[String], item: &Item) -> f64 {
    if keywords.is_empty() {
        return 0.0;
    }
    let words = item_words(item);
    let hits = keywords.iter().filter(|k| words.contains(k)).count();
    hits as f64 / keywords.len() as f64
}

/// Strategies each decision style responds to; Framing fits none of them.
pub fn strategy_matches(style: DecisionStyle, strategy: crate::dialogue::Strategy) -> bool {
    use crate::dialogue::Strategy::*;
    matches!(
        (style, strategy),
        (DecisionStyle::Rational, LogicalAppeal | EvidenceBased)
            | (DecisionStyle::Dependent, SocialProof)
            | (DecisionStyle::Intuitive, EmotionalAppeal)
    )
}

#[derive(Debug, Clone)]
pub enum SeekerMode {
    Rule(RuleParams),
    Llm { gateway: Gateway, dialogue_id: String },
}

/// A seeker bound to one profile for one episode.
#[derive(Debug, Clone)]
pub struct Seeker<'a> {
    pub profile: &'a UserProfile,
    catalog: &'a Catalog,
    keywords: Vec<String>,
    mode: SeekerMode,
}

impl<'a> Seeker<'a> {
    pub fn new(profile: &'a UserProfile, catalog: &'a Catalog, mode: SeekerMode) -> Self {
        let extra = match &mode {
            SeekerMode::Rule(p) => p.extra_stopwords.clone(),
            SeekerMode::Llm { .. } => Vec::new(),
        };
        Self {
            profile,
            catalog,
            keywords: need_keywords(profile, &extra),
            mode,
        }
    }

    pub fn keywords(&self) -> &[String] {
        &self.keywords
    }

    pub fn open_dialogue(&self) -> Result<SeekerResponse, GatewayError> {
        match &self.mode {
            SeekerMode::Rule(_) => Ok(rule_open(self.profile, &self.keywords)),
            SeekerMode::Llm {
                gateway,
                dialogue_id,
            } => llm_open(gateway, dialogue_id, self.profile),
        }
    }

    /// Reply to `system`, the recommender turn that follows `conversation`.
    pub fn respond(
        &self,
        conversation: &[Turn],
        system: &AgentTurn,
    ) -> Result<SeekerResponse, GatewayError> {
        match &self.mode {
            SeekerMode::Rule(params) => Ok(rule_respond(
                self.profile,
                &self.keywords,
                self.catalog,
                conversation,
                system,
                params,
            )),
            SeekerMode::Llm {
                gateway,
                dialogue_id,
            } => llm_respond(
                gateway,
                dialogue_id,
                self.profile,
                self.catalog,
                conversation,
                system,
            ),
        }
    }
}
