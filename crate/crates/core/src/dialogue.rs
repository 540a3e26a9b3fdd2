//! Turn types shared by agents, simulators and the evaluation harness.

use std::fmt;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::catalog::Item;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Action {
    PreferenceProbing,
    CategoryNarrowing,
    ItemSuggestion,
    Persuasion,
}

impl Action {
    pub const ALL: [Action; 4] = [
        Action::PreferenceProbing,
        Action::CategoryNarrowing,
        Action::ItemSuggestion,
        Action::Persuasion,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Action::PreferenceProbing => "Preference Probing",
            Action::CategoryNarrowing => "Category Narrowing",
            Action::ItemSuggestion => "Suggestion",
            Action::Persuasion => "Persuasion",
        }
    }

    /// Accepts the labels used by the planning prompts, including the
    /// "Category Search" spelling and numbered forms like "(3) Suggestion".
    pub fn parse(label: &str) -> Option<Action> {
        let norm = normalize(label);
        match norm.as_str() {
            "preferenceprobing" | "probing" | "preference" => Some(Action::PreferenceProbing),
            "categorysearch" | "categorynarrowing" | "category" => Some(Action::CategoryNarrowing),
            "suggestion" | "itemsuggestion" | "recommendation" => Some(Action::ItemSuggestion),
            "persuasion" => Some(Action::Persuasion),
            _ => None,
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Strategy {
    Framing,
    LogicalAppeal,
    EmotionalAppeal,
    EvidenceBased,
    SocialProof,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [
        Strategy::Framing,
        Strategy::LogicalAppeal,
        Strategy::EmotionalAppeal,
        Strategy::EvidenceBased,
        Strategy::SocialProof,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Strategy::Framing => "Framing",
            Strategy::LogicalAppeal => "Logical Appeal",
            Strategy::EmotionalAppeal => "Emotional Appeal",
            Strategy::EvidenceBased => "Evidence-Based Approach",
            Strategy::SocialProof => "Social Proof",
        }
    }

    pub fn parse(label: &str) -> Option<Strategy> {
        match normalize(label).as_str() {
            "framing" => Some(Strategy::Framing),
            "logicalappeal" => Some(Strategy::LogicalAppeal),
            "emotionalappeal" => Some(Strategy::EmotionalAppeal),
            "evidencebased" | "evidencebasedapproach" => Some(Strategy::EvidenceBased),
            "socialproof" => Some(Strategy::SocialProof),
            _ => None,
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

fn normalize(label: &str) -> String {
    let trimmed = label.trim().trim_start_matches(|c: char| {
        c == '(' || c == ')' || c.is_ascii_digit() || c.is_whitespace() || c == '.'
    });
    trimmed
        .chars()
        .filter(|c| c.is_alphanumeric())
        .flat_map(char::to_lowercase)
        .collect()
}

/// One recommender turn with its labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentTurn {
    pub thought: String,
    pub action: Action,
    pub utterance: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strategy: Option<Strategy>,
    #[serde(default)]
    pub shown_item_ids: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidate_item_id: Option<String>,
}

impl AgentTurn {
    pub fn new(thought: impl Into<String>, action: Action, utterance: impl Into<String>) -> Self {
        Self {
            thought: thought.into(),
            action,
            utterance: utterance.into(),
            strategy: None,
            shown_item_ids: Vec::new(),
            candidate_item_id: None,
        }
    }

    /// Strategy and candidate appear exactly on persuasion turns.
    pub fn is_well_formed(&self) -> bool {
        let persuading = self.action == Action::Persuasion;
        persuading == self.strategy.is_some() && persuading == self.candidate_item_id.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeekerResponse {
    pub utterance: String,
    pub terminal: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accepted_item_id: Option<String>,
}

impl SeekerResponse {
    pub fn says(utterance: impl Into<String>) -> Self {
        Self {
            utterance: utterance.into(),
            terminal: false,
            accepted_item_id: None,
        }
    }

    pub fn accepts(utterance: impl Into<String>, item_id: &str) -> Self {
        Self {
            utterance: utterance.into(),
            terminal: true,
            accepted_item_id: Some(item_id.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "speaker", rename_all = "snake_case")]
pub enum Turn {
    Seeker(SeekerResponse),
    Recommender(AgentTurn),
}

impl Turn {
    pub fn text(&self) -> &str {
        match self {
            Turn::Seeker(s) => &s.utterance,
            Turn::Recommender(a) => &a.utterance,
        }
    }
}

/// Conversation as prompt text, one line per turn. Recommender lines carry
/// their action label (and strategy, when persuading) in brackets.
pub fn render_history(turns: &[Turn]) -> String {
    if turns.is_empty() {
        return "(no conversation yet)".to_string();
    }
    turns
        .iter()
        .map(|t| match t {
            Turn::Seeker(s) => format!("Seeker: {}", one_line(&s.utterance)),
            Turn::Recommender(a) => {
                let label = a.strategy.map_or(a.action.label(), Strategy::label);
                format!("Recommender: [{label}] {}", one_line(&a.utterance))
            }
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// `<"Title"> (ID)`
pub fn mention(item: &Item) -> String {
    format!("<\"{}\"> ({})", item.title, item.id)
}

pub fn dollars(price: f64) -> String {
    format!("${price:.2}")
}

static MENTION: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r#"<"?[^<>]*?"?>\s*\(\s*"?([A-Za-z0-9_-]+)"?\s*\)"#).unwrap());
static BARE_ID: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r#"\(\s*"?([A-Za-z0-9_-]*[0-9][A-Za-z0-9_-]*)"?\s*\)"#).unwrap());
static STOP: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\bSTOP\b").unwrap());

/// Item ids mentioned in `text`, in order. The `<"Title"> (ID)` form is
/// preferred; bare parenthesized ids are the fallback.
pub fn mentioned_ids(text: &str) -> Vec<String> {
    let tagged: Vec<String> = MENTION.captures_iter(text).map(|c| c[1].to_string()).collect();
    if !tagged.is_empty() {
        return tagged;
    }
    BARE_ID.captures_iter(text).map(|c| c[1].to_string()).collect()
}

pub fn has_stop(text: &str) -> bool {
    STOP.is_match(text)
}

pub fn strip_stop(text: &str) -> String {
    STOP.replace_all(text, "").trim().trim_end_matches('.').trim().to_string() + "."
}
