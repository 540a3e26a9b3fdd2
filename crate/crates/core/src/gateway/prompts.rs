//! Prompt templates as text assets with `{{slot}}` markers. The same bytes
//! go to live models and to fixture playback.

use super::GatewayError;

pub const PROFILE_PREFERENCE: &str = "profile_preference";
pub const PROFILE_OPENNESS: &str = "profile_openness";
pub const PROFILE_PURCHASE: &str = "profile_purchase";
pub const SEEKER: &str = "seeker";
pub const AGENT_PLAN: &str = "agent_plan";
pub const AGENT_REPLAN: &str = "agent_replan";
pub const AGENT_PROBE: &str = "agent_probe";
pub const AGENT_PERSUADE: &str = "agent_persuade";
pub const REACT_PLAN: &str = "react_plan";
pub const REACT_REPLAN: &str = "react_replan";
pub const CHATCRS: &str = "chatcrs";

const TEMPLATES: &[(&str, &str)] = &[
    (PROFILE_PREFERENCE, include_str!("../../prompts/profile_preference.txt")),
    (PROFILE_OPENNESS, include_str!("../../prompts/profile_openness.txt")),
    (PROFILE_PURCHASE, include_str!("../../prompts/profile_purchase.txt")),
    (SEEKER, include_str!("../../prompts/seeker.txt")),
    (AGENT_PLAN, include_str!("../../prompts/agent_plan.txt")),
    (AGENT_PROBE, include_str!("../../prompts/agent_probe.txt")),
    (AGENT_PERSUADE, include_str!("../../prompts/agent_persuade.txt")),
    (REACT_PLAN, include_str!("../../prompts/react_plan.txt")),
    (CHATCRS, include_str!("../../prompts/chatcrs.txt")),
];

pub fn template(id: &str) -> Option<&'static str> {
    TEMPLATES.iter().find(|(k, _)| *k == id).map(|(_, t)| *t)
}

pub fn template_ids() -> impl Iterator<Item = &'static str> {
    TEMPLATES.iter().map(|(k, _)| *k)
}

/// Slot names in order of first appearance.
pub fn slots(id: &str) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    let Some(mut rest) = template(id) else {
        return out;
    };
    while let Some(open) = rest.find("{{") {
        let Some(close) = rest[open..].find("}}") else {
            break;
        };
        let name = &rest[open + 2..open + close];
        if !out.iter().any(|s| s == name) {
            out.push(name.to_string());
        }
        rest = &rest[open + close + 2..];
    }
    out
}

/// Fills every slot of template `id`. Missing or unknown slot names are
/// errors so a template edit cannot silently drop an input.
pub fn render(id: &str, values: &[(&str, &str)]) -> Result<String, GatewayError> {
    let text = template(id).ok_or_else(|| GatewayError::Template(format!("unknown template {id}")))?;
    let wanted = slots(id);
    for (name, _) in values {
        if !wanted.iter().any(|w| w == name) {
            return Err(GatewayError::Template(format!("{id} has no slot {name}")));
        }
    }
    let mut out = text.to_string();
    for name in &wanted {
        let value = values
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| *v)
            .ok_or_else(|| GatewayError::Template(format!("{id}: slot {name} not filled")))?;
        out = out.replace(&format!("{{{{{name}}}}}"), value);
    }
    Ok(out)
}
