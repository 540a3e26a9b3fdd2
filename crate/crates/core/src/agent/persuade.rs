use std::sync::{Arc, LazyLock};

use regex::Regex;
use serde_json::Value;

use super::tools::item_info;
use crate::catalog::Item;
use crate::dialogue::{dollars, mention, mentioned_ids, render_history, Strategy, Turn};
use crate::gateway::{prompts, ChatMessage, FixtureKey, Gateway, GatewayError};
use crate::memory::MemoryEntry;

pub struct PersuasionInput<'a> {
    pub thoughts: &'a str,
    pub needs: &'a str,
    pub personality: &'a str,
    pub selected: &'a Item,
    pub candidate: &'a Item,
    pub conversation: &'a [Turn],
    pub exemplars: &'a [Arc<MemoryEntry>],
}

pub const EXEMPLAR_HEADER: &str = "Persuasion that led similar seekers to buy:";

/// Memory hits as an extra prompt message, one `- Label: "utterance"` line each.
pub fn exemplar_message(hits: &[Arc<MemoryEntry>]) -> Option<String> {
    if hits.is_empty() {
        return None;
    }
    let lines: Vec<String> = hits
        .iter()
        .map(|e| match &e.utterance {
            Some(u) => format!("- {}: \"{}\"", e.strategy.label(), u.replace('\n', " ")),
            None => format!("- {}", e.strategy.label()),
        })
        .collect();
    Some(format!("{EXEMPLAR_HEADER}\n{}", lines.join("\n")))
}

/// Reads `{strategy, sentence}`.
pub fn parse_strategy_reply(v: &Value) -> Result<(Strategy, String), String> {
    let label = v
        .get("strategy")
        .and_then(Value::as_str)
        .ok_or("missing \"strategy\"")?;
    let strategy = Strategy::parse(label).ok_or_else(|| format!("unknown strategy {label:?}"))?;
    let sentence = v
        .get("sentence")
        .and_then(Value::as_str)
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .ok_or("missing \"sentence\"")?;
    Ok((strategy, sentence.to_string()))
}

/// Persuasion turn through the persuasion prompt. An unusable reply falls
/// back to a templated logical comparison.
pub fn act_persuade(
    gateway: &Gateway,
    key: FixtureKey,
    input: &PersuasionInput,
) -> Result<(Strategy, String), GatewayError> {
    let history = render_history(input.conversation);
    let prompt = prompts::render(
        prompts::AGENT_PERSUADE,
        &[
            ("thoughts", input.thoughts),
            ("item_request", input.needs),
            ("user_personality", input.personality),
            ("item1_info", &item_info(input.selected)),
            ("item2_info", &item_info(input.candidate)),
            ("conversation_history", &history),
        ],
    )?;
    let mut messages = vec![ChatMessage::user(prompt)];
    if let Some(m) = exemplar_message(input.exemplars) {
        messages.push(ChatMessage::user(m));
    }
    match gateway.complete_json(&messages, key, parse_strategy_reply) {
        Ok((strategy, sentence)) => Ok((
            strategy,
            enforce_mentions(&sentence, input.selected, input.candidate),
        )),
        Err(GatewayError::Malformed { reason, .. }) => {
            tracing::warn!(%reason, "persuasion reply unusable, using templated comparison");
            Ok((Strategy::LogicalAppeal, fallback(input.selected, input.candidate)))
        }
        Err(e) => Err(e),
    }
}

pub fn comparison(selected: &Item, candidate: &Item) -> String {
    format!(
        "Compared with {} at {}, {} at {} is worth considering.",
        mention(selected),
        dollars(selected.price),
        mention(candidate),
        dollars(candidate.price)
    )
}

pub fn fallback(selected: &Item, candidate: &Item) -> String {
    format!(
        "{} Its features line up closely with what you described.",
        comparison(selected, candidate)
    )
}

static QUOTED_ID: LazyLock<Regex> = LazyLock::new(|| Regex::new(r#"\(\s*"([^"()]+)"\s*\)"#).unwrap());

/// Rewrites `("ID")` to `(ID)` and, when either item or its price is not
/// named in the required form, prefixes a plain comparison that is.
pub fn enforce_mentions(sentence: &str, selected: &Item, candidate: &Item) -> String {
    let text = QUOTED_ID.replace_all(sentence.trim(), "($1)").into_owned();
    let ids = mentioned_ids(&text);
    let complete = [selected, candidate]
        .iter()
        .all(|i| ids.contains(&i.id) && text.contains(&dollars(i.price)));
    if complete {
        text
    } else {
        format!("{} {text}", comparison(selected, candidate))
    }
}
