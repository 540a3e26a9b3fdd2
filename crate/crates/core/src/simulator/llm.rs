use serde_json::json;

use crate::catalog::Catalog;
use crate::dialogue::{has_stop, mentioned_ids, render_history, strip_stop, AgentTurn, SeekerResponse, Turn};
use crate::gateway::prompts::{self, SEEKER};
use crate::gateway::{ChatMessage, FixtureKey, Gateway, GatewayError};
use crate::profiles::{Openness, UserProfile};

/// The profile block shown to a prompt-driven seeker.
pub fn seeker_profile_json(profile: &UserProfile) -> String {
    json!({
        "General Preference": profile.general_preference,
        "Target Needs": profile.target_needs,
        "Category Path": profile.target_category_path.join(" > "),
        "Reason to Purchase": profile.reason_to_purchase,
        "Expected Price Range": profile.budget.display_dollars(),
        "Decision-Making Style": profile.decision_style.label(),
        "Dialogue Openness": profile.dialogue_openness.label(),
    })
    .to_string()
}

fn openness_label(o: Openness) -> &'static str {
    match o {
        Openness::Neutral => "Less Active",
        other => other.label(),
    }
}

fn ask(
    gateway: &Gateway,
    dialogue_id: &str,
    profile: &UserProfile,
    history: &[Turn],
    turn: u32,
) -> Result<String, GatewayError> {
    let prompt = prompts::render(
        SEEKER,
        &[
            ("dialogue_openness", openness_label(profile.dialogue_openness)),
            ("user_profile", &seeker_profile_json(profile)),
            ("conversation_history", &render_history(history)),
        ],
    )?;
    gateway.complete(&[ChatMessage::user(prompt)], FixtureKey::new(SEEKER, dialogue_id, turn))
}

pub fn llm_open(
    gateway: &Gateway,
    dialogue_id: &str,
    profile: &UserProfile,
) -> Result<SeekerResponse, GatewayError> {
    let text = ask(gateway, dialogue_id, profile, &[], 0)?;
    Ok(SeekerResponse::says(if has_stop(&text) { strip_stop(&text) } else { text.trim().to_string() }))
}

/// A reply containing STOP ends the dialogue; the purchase is the last
/// mentioned id that exists in the catalog, or none when nothing parses.
pub fn llm_respond(
    gateway: &Gateway,
    dialogue_id: &str,
    profile: &UserProfile,
    catalog: &Catalog,
    conversation: &[Turn],
    system: &AgentTurn,
) -> Result<SeekerResponse, GatewayError> {
    let mut history = conversation.to_vec();
    history.push(Turn::Recommender(system.clone()));
    let turn = conversation.iter().filter(|t| matches!(t, Turn::Seeker(_))).count() as u32;
    let text = ask(gateway, dialogue_id, profile, &history, turn)?;
    if !has_stop(&text) {
        return Ok(SeekerResponse::says(text.trim()));
    }
    let utterance = strip_stop(&text);
    let accepted = mentioned_ids(&text).into_iter().rev().find(|id| catalog.get(id).is_some());
    if accepted.is_none() {
        tracing::warn!(dialogue = dialogue_id, "STOP without a known item id; no purchase");
    }
    Ok(SeekerResponse {
        utterance,
        terminal: true,
        accepted_item_id: accepted,
    })
}
