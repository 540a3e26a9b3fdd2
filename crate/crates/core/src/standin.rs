//! A deterministic stand-in for the chat model. It reads the rendered prompt
//! the way a cooperative model would and answers in the requested format,
//! so the whole pipeline can run, and fixtures can be recorded, offline.
//!
//! It follows a fixed sales policy: probe until a few preferences are known,
//! narrow the category to a leaf, persuade twice, then suggest. Persuasion
//! strategy follows the personality slot, then memory exemplars, then item
//! content.

use std::collections::HashMap;
use std::sync::LazyLock;

use regex::Regex;
use serde_json::{json, Value};

use crate::agent::{EXEMPLAR_HEADER, OBSERVATION_HEADER, PATH_COMPLETE};
use crate::dialogue::{dollars, Action, Strategy};
use crate::gateway::{prompts, ChatBackend, ChatMessage, CompletionParams, GatewayError};
use crate::profiles::DecisionStyle;
use crate::text;

#[derive(Debug, Clone, Copy, Default)]
pub struct StandInModel;

impl ChatBackend for StandInModel {
    fn complete(
        &self,
        messages: &[ChatMessage],
        params: &CompletionParams,
    ) -> Result<String, GatewayError> {
        crate::gateway::check_messages(messages)?;
        let prompt = messages[0].content.as_str();
        let reply = match params.key.template.as_str() {
            prompts::PROFILE_PREFERENCE => general_preference(prompt),
            prompts::PROFILE_OPENNESS => openness(prompt),
            prompts::PROFILE_PURCHASE => purchase(prompt),
            prompts::AGENT_PLAN | prompts::AGENT_REPLAN => plan(messages, true),
            prompts::REACT_PLAN | prompts::REACT_REPLAN => plan(messages, false),
            prompts::AGENT_PROBE => probe(prompt),
            prompts::AGENT_PERSUADE => persuade(messages, false),
            prompts::CHATCRS => persuade(messages, true),
            other => {
                return Err(GatewayError::Fixture(format!(
                    "stand-in model has no policy for template {other:?}"
                )))
            }
        };
        Ok(reply)
    }
}

// ---- shared parsing ----

fn after<'a>(text: &'a str, marker: &str) -> Option<&'a str> {
    text.rfind(marker).map(|i| &text[i + marker.len()..])
}

fn line_after<'a>(text: &'a str, marker: &str) -> Option<&'a str> {
    after(text, marker).map(|rest| rest.lines().next().unwrap_or("").trim())
}

#[derive(Debug, Clone, PartialEq)]
struct Line {
    seeker: bool,
    label: String,
    text: String,
}

static REC_LINE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^Recommender: \[([^\]]*)\]\s?(.*)$").unwrap());
static MENTION_SPAN: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r#"<"?[^<>]*?"?>\s*\(\s*"?[A-Za-z0-9_-]+"?\s*\)"#).unwrap());
static INFO_ID: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"more information about .*?\(\s*([A-Za-z0-9_-]+)\s*\)").unwrap());
static RANGE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"\[\s*\$?(\d+(?:\.\d+)?)\s*,\s*\$?(\d+(?:\.\d+)?)\s*\]").unwrap()
});
static CATEGORY_REPLY: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\bI need .+? products\b").unwrap());
static QUOTED_PATH: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r#"(?:"([^"]+)" is a leaf|options under "([^"]+)")"#).unwrap()
});

fn history(section: &str) -> Vec<Line> {
    section
        .lines()
        .filter_map(|l| {
            if let Some(t) = l.strip_prefix("Seeker: ") {
                return Some(Line {
                    seeker: true,
                    label: String::new(),
                    text: t.to_string(),
                });
            }
            REC_LINE.captures(l).map(|c| Line {
                seeker: false,
                label: c[1].to_string(),
                text: c[2].to_string(),
            })
        })
        .collect()
}

/// Attribute words the seeker has asked for, in order of first mention.
fn preference_words(lines: &[Line]) -> Vec<String> {
    let said: Vec<String> = lines
        .iter()
        .filter(|l| l.seeker && !CATEGORY_REPLY.is_match(&l.text))
        .map(|l| MENTION_SPAN.replace_all(&l.text, " ").into_owned())
        .collect();
    text::keywords(&said.join(" "), &[])
}

fn personality_cue(lines: &[Line]) -> Option<DecisionStyle> {
    lines
        .iter()
        .filter(|l| l.seeker)
        .rev()
        .find_map(|l| style_from_cue(&l.text))
}

fn style_from_cue(text: &str) -> Option<DecisionStyle> {
    let t = text.to_lowercase();
    if t.contains("comparison of the details") {
        Some(DecisionStyle::Rational)
    } else if t.contains("other buyers") {
        Some(DecisionStyle::Dependent)
    } else if t.contains("feels right") || t.contains("feel right") {
        Some(DecisionStyle::Intuitive)
    } else {
        None
    }
}

fn personality_text(style: DecisionStyle) -> String {
    let focus = match style {
        DecisionStyle::Rational => "compares details and specifications before deciding",
        DecisionStyle::Dependent => "relies on what other buyers think",
        DecisionStyle::Intuitive => "goes with what feels right",
    };
    format!("{}: {focus}", style.label())
}

fn matched_strategy(style: DecisionStyle) -> Strategy {
    match style {
        DecisionStyle::Rational => Strategy::LogicalAppeal,
        DecisionStyle::Dependent => Strategy::SocialProof,
        DecisionStyle::Intuitive => Strategy::EmotionalAppeal,
    }
}

// ---- planning ----

#[derive(Debug, Default)]
struct State {
    words: Vec<String>,
    probes: usize,
    persuasions: usize,
    exhausted: bool,
    complete: bool,
    path: Vec<String>,
    asked_about: Option<String>,
    range: Option<(f64, f64)>,
    style: Option<DecisionStyle>,
}

fn read_state(lines: &[Line], observation: &str) -> State {
    let last_seeker = lines.iter().rev().find(|l| l.seeker).map(|l| l.text.as_str()).unwrap_or("");
    let range = lines
        .iter()
        .rev()
        .filter(|l| l.seeker)
        .find_map(|l| RANGE.captures_iter(&l.text).last())
        .and_then(|c| Some((c[1].parse().ok()?, c[2].parse().ok()?)));
    let path = QUOTED_PATH
        .captures(observation)
        .and_then(|c| c.get(1).or(c.get(2)))
        .map(|m| m.as_str().split(" > ").map(str::to_string).collect())
        .unwrap_or_default();
    State {
        words: preference_words(lines),
        probes: lines
            .iter()
            .filter(|l| !l.seeker && Action::parse(&l.label) == Some(Action::PreferenceProbing))
            .count(),
        persuasions: lines
            .iter()
            .filter(|l| !l.seeker && Strategy::parse(&l.label).is_some())
            .count(),
        exhausted: last_seeker.contains("all I need"),
        complete: observation.contains(PATH_COMPLETE),
        path,
        asked_about: INFO_ID.captures(last_seeker).map(|c| c[1].to_string()),
        range,
        style: personality_cue(lines),
    }
}

const ENOUGH_WORDS: usize = 4;
const MAX_PROBES: usize = 4;
const FIRST_PERSUASIONS: usize = 2;
const MAX_PERSUASIONS: usize = 4;

fn choose(state: &State, blocked: Option<Action>) -> Action {
    let open = |a: Action| blocked != Some(a);
    let complete = state.complete || blocked == Some(Action::CategoryNarrowing);
    let wants_probe =
        state.words.len() < ENOUGH_WORDS && !state.exhausted && state.probes < MAX_PROBES;
    if wants_probe && open(Action::PreferenceProbing) {
        return Action::PreferenceProbing;
    }
    if !complete && open(Action::CategoryNarrowing) {
        return Action::CategoryNarrowing;
    }
    let persuade = if state.asked_about.is_some() {
        state.persuasions < MAX_PERSUASIONS
    } else {
        state.persuasions < FIRST_PERSUASIONS
    };
    if persuade && open(Action::Persuasion) {
        return Action::Persuasion;
    }
    if open(Action::ItemSuggestion) {
        return Action::ItemSuggestion;
    }
    Action::PreferenceProbing
}

static BLOCKED: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r#"^The action "([^"]+)" cannot be carried out"#).unwrap());

fn plan(messages: &[ChatMessage], with_profile: bool) -> String {
    let prompt = &messages[0].content;
    let section = after(prompt, "Dialogue History:\n").unwrap_or("");
    let lines = history(section);
    let observation = messages
        .iter()
        .find(|m| m.content.starts_with(OBSERVATION_HEADER))
        .map_or("", |m| m.content.as_str());
    let blocked = messages
        .last()
        .and_then(|m| BLOCKED.captures(&m.content))
        .and_then(|c| Action::parse(&c[1]));
    let state = read_state(&lines, observation);
    let action = choose(&state, blocked);
    let thoughts = format!(
        "The Seeker has shared {} preference(s){}; next: {}.",
        state.words.len(),
        if state.complete { " and the category is settled" } else { "" },
        action.label()
    );

    if !with_profile {
        let range = state.range.map_or(json!([0, null]), |(a, b)| json!([a, b]));
        return json!({
            "Thoughts": thoughts,
            "Category Path": state.path,
            "Expected Price Range": range,
            "Selected Item ID": state.asked_about.clone().unwrap_or_default(),
            "Action": action.label(),
        })
        .to_string();
    }

    let prev: Value = line_after(prompt, "Here is current user profile: ")
        .and_then(|s| serde_json::from_str(s).ok())
        .unwrap_or(Value::Null);
    let prev_str = |k: &str| prev.get(k).and_then(Value::as_str).unwrap_or("").to_string();
    let personality = state.style.map(personality_text).unwrap_or_else(|| prev_str("Personality"));
    let path = if state.path.is_empty() {
        prev.get("Category Path").cloned().unwrap_or(json!([]))
    } else {
        json!(state.path)
    };
    let range = match state.range {
        Some((a, b)) => json!([a, b]),
        None => prev.get("Expected Price Range").cloned().unwrap_or(json!([0, null])),
    };
    let selected = state.asked_about.clone().unwrap_or_else(|| prev_str("Selected Item ID"));
    json!({
        "Thoughts": thoughts,
        "Profile": {
            "Preference": state.words.join(", "),
            "Category Path": path,
            "Personality": personality,
            "Expected Price Range": range,
            "Selected Item ID": selected,
        },
        "Action": action.label(),
    })
    .to_string()
}

const PROBES: [&str; 4] = [
    "What materials or fabrics do you like?",
    "What style or fit are you after?",
    "Are there any features you really need?",
    "Is there anything you would rather avoid?",
];

fn probe(prompt: &str) -> String {
    let section = after(prompt, "Dialogue History:\n").unwrap_or("");
    let asked = history(section)
        .iter()
        .filter(|l| !l.seeker && Action::parse(&l.label) == Some(Action::PreferenceProbing))
        .count();
    PROBES[asked % PROBES.len()].to_string()
}

// ---- persuasion ----

#[derive(Debug)]
struct ItemView {
    id: String,
    title: String,
    price: f64,
    rating: f64,
    count: u64,
    words: Vec<String>,
}

fn item_view(line: &str) -> Option<ItemView> {
    let v: Value = serde_json::from_str(line).ok()?;
    let s = |k: &str| v.get(k).and_then(Value::as_str).unwrap_or("").to_string();
    let price = s("price").trim_start_matches('$').parse().ok()?;
    let features: Vec<String> = v
        .get("features")
        .and_then(Value::as_array)
        .map(|a| a.iter().filter_map(Value::as_str).map(str::to_string).collect())
        .unwrap_or_default();
    let words = text::keywords(&format!("{} {} {}", s("title"), s("description"), features.join(" ")), &[]);
    Some(ItemView {
        id: s("id"),
        title: s("title"),
        price,
        rating: v.get("average_rating").and_then(Value::as_f64).unwrap_or(0.0),
        count: v.get("rating_count").and_then(Value::as_u64).unwrap_or(0),
        words,
    })
}

fn mention(i: &ItemView) -> String {
    format!("<\"{}\"> ({})", i.title, i.id)
}

fn exemplar_strategies(messages: &[ChatMessage]) -> Vec<Strategy> {
    messages
        .iter()
        .filter_map(|m| m.content.strip_prefix(EXEMPLAR_HEADER))
        .flat_map(str::lines)
        .filter_map(|l| l.strip_prefix("- "))
        .filter_map(|l| Strategy::parse(l.split(':').next().unwrap_or(l)))
        .collect()
}

/// Most frequent strategy; ties go to the one seen first.
fn majority(strategies: &[Strategy]) -> Option<Strategy> {
    let mut counts: HashMap<Strategy, usize> = HashMap::new();
    for s in strategies {
        *counts.entry(*s).or_default() += 1;
    }
    let best = counts.values().copied().max()?;
    strategies.iter().copied().find(|s| counts[s] == best)
}

fn overlap(words: &[String], item: &ItemView) -> usize {
    words.iter().filter(|w| item.words.contains(w)).count()
}

/// Strategy from item content alone.
fn content_strategy(needs: &[String], selected: &ItemView, candidate: &ItemView) -> Strategy {
    if candidate.count >= 1000 && candidate.rating >= 4.3 {
        Strategy::SocialProof
    } else if overlap(needs, candidate) > overlap(needs, selected) {
        Strategy::LogicalAppeal
    } else {
        Strategy::Framing
    }
}

fn sentence(strategy: Strategy, needs: &[String], s: &ItemView, c: &ItemView) -> String {
    let shared: Vec<String> = needs.iter().filter(|w| c.words.contains(w)).take(3).cloned().collect();
    let fit = if shared.is_empty() {
        "what you described".to_string()
    } else {
        text::join_words(&shared)
    };
    let (sm, cm, sp, cp) = (mention(s), mention(c), dollars(s.price), dollars(c.price));
    match strategy {
        Strategy::LogicalAppeal => format!(
            "{sm} at {sp} covers the basics, but {cm} at {cp} matches more of your requirements point by point: {fit}."
        ),
        Strategy::EvidenceBased => format!(
            "The specifications favor {cm} at {cp} over {sm} at {sp}, with a {:.1} average rating and the {fit} you asked for.",
            c.rating
        ),
        Strategy::SocialProof => format!(
            "{cm} at {cp} is rated {:.1} by {} buyers, and many who looked at {sm} at {sp} chose it for its {fit}.",
            c.rating, c.count
        ),
        Strategy::EmotionalAppeal => format!(
            "Picture how good you will feel with {cm} at {cp}; next to {sm} at {sp} it simply brings more joy with its {fit}."
        ),
        Strategy::Framing => format!(
            "For only {} more than {sm} at {sp}, {cm} at {cp} gives you {fit}.",
            dollars((c.price - s.price).max(0.0))
        ),
    }
}

fn persuade(messages: &[ChatMessage], recommend_first: bool) -> String {
    let prompt = &messages[0].content;
    let first_label = if recommend_first { "<Recommended Item> : " } else { "<Selected Item> : " };
    let (Some(s), Some(c)) = (
        line_after(prompt, first_label).and_then(item_view),
        line_after(prompt, "<Candidate Item> : ").and_then(item_view),
    ) else {
        return "I cannot compare these items.".to_string();
    };
    let needs_text = line_after(prompt, "User Needs: ").unwrap_or("");
    let history_text = after(prompt, "Conversation History:\n").unwrap_or("");
    let needs = if needs_text.is_empty() {
        preference_words(&history(history_text))
    } else {
        text::keywords(needs_text, &[])
    };
    let personality = line_after(prompt, "User Personality: ").unwrap_or("");
    let strategy = DecisionStyle::ALL
        .into_iter()
        .find(|st| personality.contains(st.label()))
        .map(matched_strategy)
        .or_else(|| majority(&exemplar_strategies(messages)))
        .unwrap_or_else(|| content_strategy(&needs, &s, &c));
    let body = sentence(strategy, &needs, &s, &c);
    let body = if recommend_first {
        format!("I recommend {} at {}. {body}", mention(&s), dollars(s.price))
    } else {
        body
    };
    json!({"strategy": strategy.label(), "sentence": body}).to_string()
}

/// A persuasive sentence in the stand-in's voice, for seeding memory.
pub fn exemplar_sentence(
    strategy: Strategy,
    needs: &[String],
    selected: &crate::catalog::Item,
    candidate: &crate::catalog::Item,
) -> String {
    let view = |i: &crate::catalog::Item| ItemView {
        id: i.id.clone(),
        title: i.title.clone(),
        price: i.price,
        rating: i.avg_rating,
        count: i.rating_count,
        words: crate::simulator::item_words(i),
    };
    sentence(strategy, needs, &view(selected), &view(candidate))
}

// ---- profile construction ----

static ITEM_LINE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^\s*-?\s*(?:Purchased )?Item \d+ : ([^,]+), (.*)$").unwrap());

/// `(id, rest)` per listed item.
fn item_lines(prompt: &str) -> Vec<(String, String)> {
    let body = after(prompt, "ratings and reviews:\n")
        .or_else(|| after(prompt, "Here are the reviews:\n"))
        .unwrap_or("");
    body.lines()
        .filter_map(|l| ITEM_LINE.captures(l))
        .map(|c| (c[1].trim().to_string(), c[2].to_string()))
        .collect()
}

fn top_words(texts: &[&str], n: usize) -> Vec<String> {
    let mut counts: HashMap<String, usize> = HashMap::new();
    let mut order: Vec<String> = Vec::new();
    for t in texts {
        for w in text::content_tokens(t) {
            if w.len() < 3 {
                continue;
            }
            let e = counts.entry(w.clone()).or_default();
            if *e == 0 {
                order.push(w);
            }
            *e += 1;
        }
    }
    order.sort_by(|a, b| counts[b].cmp(&counts[a]));
    order.truncate(n);
    order
}

fn general_preference(prompt: &str) -> String {
    let lines = item_lines(prompt);
    let texts: Vec<&str> = lines.iter().map(|(_, r)| r.as_str()).collect();
    let words = top_words(&texts, 6);
    json!({"general preference": format!("I generally prefer items that are {}.", text::join_words(&words))})
        .to_string()
}

fn openness(prompt: &str) -> String {
    let lines = item_lines(prompt);
    let words: usize = lines.iter().map(|(_, r)| text::tokens(r).len()).sum();
    let avg = words as f64 / lines.len().max(1) as f64;
    let label = if avg >= 40.0 {
        "Active"
    } else if avg >= 15.0 {
        "Less Active"
    } else {
        "Passive"
    };
    json!({"dialogue_openness": label}).to_string()
}

fn style_of_review(text: &str) -> DecisionStyle {
    let t = text.to_lowercase();
    let has = |ws: &[&str]| ws.iter().any(|w| t.contains(w));
    if has(&["reviews", "recommended", "everyone", "friends", "other buyers", "popular"]) {
        DecisionStyle::Dependent
    } else if has(&["love", "feel", "felt", "favorite", "instantly", "gut"]) {
        DecisionStyle::Intuitive
    } else {
        DecisionStyle::Rational
    }
}

fn purchase(prompt: &str) -> String {
    let lines = item_lines(prompt);
    let mut analysis = serde_json::Map::new();
    let mut styles = Vec::new();
    for (id, rest) in &lines {
        let style = style_of_review(rest);
        styles.push(style);
        let words = top_words(&[rest.as_str()], 3);
        analysis.insert(
            id.clone(),
            json!({
                "purchase reason": format!("I bought it for being {}.", text::join_words(&words)),
                "decision making style": style.label(),
            }),
        );
    }
    let overall = DecisionStyle::ALL
        .into_iter()
        .max_by_key(|s| (styles.iter().filter(|x| *x == s).count(), std::cmp::Reverse(*s as u8)))
        .unwrap_or(DecisionStyle::Rational);
    let texts: Vec<&str> = lines.iter().map(|(_, r)| r.as_str()).collect();
    let needs = top_words(&texts, 5);
    json!({
        "analysis": analysis,
        "overall decision making style": overall.label(),
        "target needs": format!("I need something {}.", text::join_words(&needs)),
    })
    .to_string()
}
