use std::collections::HashSet;

use serde_json::{json, Value};

use super::persuade::{act_persuade, PersuasionInput};
use super::profile::ContextualProfile;
use super::tools::{
    apply_category_reply, category_question, listing, offered_items, parse_category_reply,
    retrieve_in_budget, pick_candidate, Retrieval, Toolbox, RELAX,
};
use super::{AgentError, AgentParams, PersuasionRecord};
use crate::dialogue::{render_history, Action, AgentTurn, Turn};
use crate::gateway::{prompts, ChatMessage, FixtureKey, Gateway, GatewayError};
use crate::memory::MemoryStore;

pub const OBSERVATION_HEADER: &str = "Tool observations:";
pub const PATH_COMPLETE: &str = "the category path is complete";
const PROBE_FALLBACK: &str = "What else matters to you in this purchase?";

/// Number of the recommender turn about to be produced, from 1.
pub fn turn_number(conversation: &[Turn]) -> u32 {
    1 + conversation
        .iter()
        .filter(|t| matches!(t, Turn::Recommender(_)))
        .count() as u32
}

fn last_seeker(conversation: &[Turn]) -> Option<&str> {
    conversation.iter().rev().find_map(|t| match t {
        Turn::Seeker(s) => Some(s.utterance.as_str()),
        Turn::Recommender(_) => None,
    })
}

/// Category Explorer output for the planner: whether the seeker's latest
/// category reply is valid, and what lies below the resulting path.
pub fn observations(tools: &Toolbox, path: &[String], conversation: &[Turn]) -> String {
    let mut lines = Vec::new();
    let mut current = path.to_vec();
    if let Some(reply) = last_seeker(conversation) {
        if let Some(said) = parse_category_reply(reply) {
            let next = apply_category_reply(tools.tree, &current, reply);
            if next.len() > current.len() {
                lines.push(format!(
                    "Category Explorer: the Seeker's path \"{}\" exists.",
                    next.join(" > ")
                ));
            } else {
                lines.push(format!(
                    "Category Explorer: \"{}\" is not a valid extension of the current path.",
                    said.join(" > ")
                ));
            }
            current = next;
        }
    }
    match tools.tree.children(&current) {
        Ok(children) if children.is_empty() => lines.push(format!(
            "Category Explorer: \"{}\" is a leaf; {PATH_COMPLETE}.",
            current.join(" > ")
        )),
        Ok(children) if current.is_empty() => lines.push(format!(
            "Category Explorer: no category chosen yet; top-level options: {}.",
            children.join(", ")
        )),
        Ok(children) => lines.push(format!(
            "Category Explorer: options under \"{}\": {}.",
            current.join(" > "),
            children.join(", ")
        )),
        Err(_) => {}
    }
    format!("{OBSERVATION_HEADER}\n{}", lines.join("\n"))
}

/// A prepared action, ready to be voiced.
enum Prepared {
    Probe,
    Narrow(String),
    Suggest(Vec<String>),
    Persuade { selected: String, candidate: String },
}

/// Shared action execution for the planning agents.
struct Executor<'a, 'b> {
    tools: &'b Toolbox<'a>,
    gateway: &'b Gateway,
    dialogue_id: &'b str,
    params: &'b AgentParams,
}

impl Executor<'_, '_> {
    /// Checks that `action` can run now. `Ok(Err(reason))` means it cannot.
    fn prepare(
        &self,
        action: Action,
        profile: &ContextualProfile,
        query: &str,
        conversation: &[Turn],
    ) -> Result<Result<Prepared, String>, AgentError> {
        let tools = self.tools;
        Ok(match action {
            Action::PreferenceProbing => Ok(Prepared::Probe),
            Action::CategoryNarrowing => match category_question(tools.tree, &profile.category_path) {
                Some(q) => Ok(Prepared::Narrow(q)),
                None => Err(format!("{PATH_COMPLETE}, so there is nothing left to narrow")),
            },
            Action::ItemSuggestion => {
                if query.trim().is_empty() {
                    return Ok(Err("nothing is known about the Seeker's preferences yet".into()));
                }
                let exclude = offered_items(conversation);
                let ids = retrieve_in_budget(
                    tools,
                    &Retrieval {
                        query,
                        path: &profile.category_path,
                        max_price: profile.price_max,
                        exclude: &exclude,
                        k: self.params.suggest_k,
                    },
                )?;
                Ok(Prepared::Suggest(ids))
            }
            Action::Persuasion => {
                let Some(max) = profile.price_max else {
                    return Ok(Err("the Seeker's budget is not known yet".into()));
                };
                let selected = match &profile.selected_item_id {
                    Some(id) => Some(id.clone()),
                    None if query.trim().is_empty() => None,
                    None => retrieve_in_budget(
                        tools,
                        &Retrieval {
                            query,
                            path: &profile.category_path,
                            max_price: Some(max),
                            exclude: &HashSet::new(),
                            k: 1,
                        },
                    )?
                    .into_iter()
                    .next(),
                };
                let Some(selected) = selected else {
                    return Ok(Err("no item fits the Seeker's needs and budget to start from".into()));
                };
                match pick_candidate(tools, &selected, max, self.params.candidate_k)? {
                    Some(candidate) => Ok(Prepared::Persuade { selected, candidate }),
                    None => Err("no higher-priced alternative is close to the selected item".into()),
                }
            }
        })
    }

    fn probe(&self, profile_json: &str, conversation: &[Turn], t: u32) -> Result<String, AgentError> {
        let prompt = prompts::render(
            prompts::AGENT_PROBE,
            &[
                ("identified_profile", profile_json),
                ("dialogue_history", &render_history(conversation)),
            ],
        )?;
        let key = FixtureKey::new(prompts::AGENT_PROBE, self.dialogue_id, t);
        let text = self.gateway.complete(&[ChatMessage::user(prompt)], key)?;
        let text = text.trim();
        Ok(if text.is_empty() { PROBE_FALLBACK.to_string() } else { text.to_string() })
    }

    #[allow(clippy::too_many_arguments)]
    fn execute(
        &self,
        prepared: Prepared,
        thought: &str,
        profile: &ContextualProfile,
        profile_json: &str,
        needs: &str,
        memory: Option<&MemoryStore>,
        conversation: &[Turn],
        t: u32,
    ) -> Result<(AgentTurn, Option<PersuasionRecord>), AgentError> {
        let catalog = self.tools.catalog;
        Ok(match prepared {
            Prepared::Probe => (
                AgentTurn::new(thought, Action::PreferenceProbing, self.probe(profile_json, conversation, t)?),
                None,
            ),
            Prepared::Narrow(q) => (AgentTurn::new(thought, Action::CategoryNarrowing, q), None),
            Prepared::Suggest(ids) => {
                let items: Vec<_> = ids.iter().filter_map(|id| catalog.get(id)).collect();
                let utterance = if items.is_empty() { RELAX.to_string() } else { listing(&items) };
                let mut turn = AgentTurn::new(thought, Action::ItemSuggestion, utterance);
                turn.shown_item_ids = ids;
                (turn, None)
            }
            Prepared::Persuade { selected, candidate } => {
                let s = catalog.require(&selected).map_err(|e| AgentError::Catalog(e.to_string()))?;
                let c = catalog.require(&candidate).map_err(|e| AgentError::Catalog(e.to_string()))?;
                let memory_text = profile.memory_text();
                let exemplars = match memory {
                    Some(m) if !m.is_empty() => m.retrieve(&memory_text, self.params.memory_k)?,
                    _ => Vec::new(),
                };
                let key = FixtureKey::new(prompts::AGENT_PERSUADE, self.dialogue_id, t);
                let (strategy, utterance) = act_persuade(
                    self.gateway,
                    key,
                    &PersuasionInput {
                        thoughts: thought,
                        needs,
                        personality: &profile.personality,
                        selected: s,
                        candidate: c,
                        conversation,
                        exemplars: &exemplars,
                    },
                )?;
                let mut turn = AgentTurn::new(thought, Action::Persuasion, utterance.clone());
                turn.strategy = Some(strategy);
                turn.candidate_item_id = Some(candidate.clone());
                turn.shown_item_ids = vec![candidate.clone()];
                let record = PersuasionRecord {
                    memory_text,
                    strategy,
                    utterance,
                    candidate_item_id: candidate,
                };
                (turn, Some(record))
            }
        })
    }
}

#[derive(Debug, Clone)]
struct Plan {
    thought: String,
    profile: ContextualProfile,
    action: Action,
}

fn parse_action(v: &Value) -> Result<Action, String> {
    let label = v.get("Action").and_then(Value::as_str).ok_or("missing \"Action\"")?;
    Action::parse(label).ok_or_else(|| format!("unknown action {label:?}"))
}

fn thoughts(v: &Value) -> String {
    v.get("Thoughts").and_then(Value::as_str).unwrap_or_default().to_string()
}

fn replan_message(action: Action, reason: &str) -> String {
    format!(
        "The action \"{}\" cannot be carried out now: {reason}. Choose a different action and reply in the same JSON format.",
        action.label()
    )
}

fn plan_json(plan: &Plan) -> String {
    json!({
        "Thoughts": plan.thought,
        "Profile": plan.profile.to_json(),
        "Action": plan.action.label(),
    })
    .to_string()
}

/// Plans with a persistent contextual profile, tracks personality and uses
/// strategy memory when persuading.
pub struct CsiAgent<'a> {
    tools: Toolbox<'a>,
    gateway: Gateway,
    dialogue_id: String,
    params: AgentParams,
    memory: Option<&'a MemoryStore>,
    profile: ContextualProfile,
}

impl<'a> CsiAgent<'a> {
    pub fn new(
        tools: Toolbox<'a>,
        gateway: Gateway,
        dialogue_id: impl Into<String>,
        params: AgentParams,
        memory: Option<&'a MemoryStore>,
    ) -> Self {
        Self {
            tools,
            gateway,
            dialogue_id: dialogue_id.into(),
            params,
            memory,
            profile: ContextualProfile::default(),
        }
    }

    pub fn profile(&self) -> &ContextualProfile {
        &self.profile
    }

    fn parse_plan(&self, v: &Value) -> Result<Plan, String> {
        let action = parse_action(v)?;
        let raw = v.get("Profile").ok_or("missing \"Profile\"")?;
        let mut profile = ContextualProfile::from_json(raw, &self.profile)?;
        profile.sanitize(self.tools.tree, self.tools.catalog);
        Ok(Plan {
            thought: thoughts(v),
            profile,
            action,
        })
    }

    fn fallback_plan(&self, reason: &str) -> Plan {
        tracing::warn!(dialogue = %self.dialogue_id, %reason, "planner output unusable, probing");
        Plan {
            thought: format!("Planner output unusable ({reason}); asking about preferences."),
            profile: self.profile.clone(),
            action: Action::PreferenceProbing,
        }
    }

    pub fn next_turn(
        &mut self,
        conversation: &[Turn],
    ) -> Result<(AgentTurn, Option<PersuasionRecord>), AgentError> {
        let t = turn_number(conversation);
        let prev = self.profile.to_json().to_string();
        let prompt = prompts::render(
            prompts::AGENT_PLAN,
            &[
                ("user_profile", &prev),
                ("identified_profile", &prev),
                ("dialogue_history", &render_history(conversation)),
            ],
        )?;
        let mut messages = vec![
            ChatMessage::user(prompt),
            ChatMessage::user(observations(&self.tools, &self.profile.category_path, conversation)),
        ];
        let key = FixtureKey::new(prompts::AGENT_PLAN, &self.dialogue_id, t);
        let mut plan = match self.gateway.complete_json(&messages, key, |v| self.parse_plan(v)) {
            Ok(p) => p,
            Err(GatewayError::Malformed { reason, .. }) => self.fallback_plan(&reason),
            Err(e) => return Err(e.into()),
        };

        let exec = Executor {
            tools: &self.tools,
            gateway: &self.gateway,
            dialogue_id: &self.dialogue_id,
            params: &self.params,
        };
        let query = search_query(&plan.profile, self.params.category_in_query);
        let mut prepared = exec.prepare(plan.action, &plan.profile, &query, conversation)?;
        if let Err(reason) = &prepared {
            messages.push(ChatMessage::assistant(plan_json(&plan)));
            messages.push(ChatMessage::user(replan_message(plan.action, reason)));
            let key = FixtureKey::new(prompts::AGENT_REPLAN, &self.dialogue_id, t);
            plan = match self.gateway.complete_json(&messages, key, |v| self.parse_plan(v)) {
                Ok(p) => p,
                Err(GatewayError::Malformed { reason, .. }) => Plan {
                    action: Action::PreferenceProbing,
                    ..self.fallback_plan(&reason)
                },
                Err(e) => return Err(e.into()),
            };
            let query = search_query(&plan.profile, self.params.category_in_query);
            prepared = exec.prepare(plan.action, &plan.profile, &query, conversation)?;
        }
        let prepared = prepared.unwrap_or(Prepared::Probe);
        let profile_json = plan.profile.to_json().to_string();
        let needs = plan.profile.preference.clone();
        let out = exec.execute(
            prepared,
            &plan.thought,
            &plan.profile,
            &profile_json,
            &needs,
            self.memory,
            conversation,
            t,
        )?;
        self.profile = plan.profile;
        Ok(out)
    }
}

/// The retrieval query a profile implies.
pub fn search_query(profile: &ContextualProfile, with_category: bool) -> String {
    let mut q = profile.preference.trim().to_string();
    if with_category && !profile.category_path.is_empty() {
        if !q.is_empty() {
            q.push(' ');
        }
        q.push_str(&profile.category_path.join(" "));
    }
    q
}

/// The whole conversation, both roles, as one string.
pub fn history_text(conversation: &[Turn]) -> String {
    conversation.iter().map(Turn::text).collect::<Vec<_>>().join(" ")
}

/// Everything the seeker has said, as one string.
pub fn seeker_text(conversation: &[Turn]) -> String {
    conversation
        .iter()
        .filter_map(|t| match t {
            Turn::Seeker(s) => Some(s.utterance.as_str()),
            Turn::Recommender(_) => None,
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Plans from the raw conversation each turn and keeps no state between
/// turns: no profile, no personality, no memory.
pub struct ReactAgent<'a> {
    tools: Toolbox<'a>,
    gateway: Gateway,
    dialogue_id: String,
    params: AgentParams,
}

impl<'a> ReactAgent<'a> {
    pub fn new(tools: Toolbox<'a>, gateway: Gateway, dialogue_id: impl Into<String>, params: AgentParams) -> Self {
        Self {
            tools,
            gateway,
            dialogue_id: dialogue_id.into(),
            params,
        }
    }

    fn parse_plan(&self, v: &Value, conversation: &[Turn]) -> Result<Plan, String> {
        let action = parse_action(v)?;
        let obj = v.as_object().ok_or("reply must be an object")?;
        let mut fields = serde_json::Map::new();
        for k in ["Category Path", "Expected Price Range", "Selected Item ID"] {
            if let Some(x) = obj.get(k) {
                fields.insert(k.to_string(), x.clone());
            }
        }
        let mut profile = ContextualProfile::from_json(&Value::Object(fields), &ContextualProfile::default())?;
        profile.preference = seeker_text(conversation);
        profile.personality = String::new();
        profile.sanitize(self.tools.tree, self.tools.catalog);
        Ok(Plan {
            thought: thoughts(v),
            profile,
            action,
        })
    }

    pub fn next_turn(&mut self, conversation: &[Turn]) -> Result<AgentTurn, AgentError> {
        let t = turn_number(conversation);
        let prompt = prompts::render(
            prompts::REACT_PLAN,
            &[("dialogue_history", &render_history(conversation))],
        )?;
        // Without a stored path, the explorer starts from what the seeker
        // last asked for.
        let path = conversation
            .iter()
            .rev()
            .find_map(|t| match t {
                Turn::Seeker(s) => parse_category_reply(&s.utterance),
                Turn::Recommender(_) => None,
            })
            .map(|p| self.tools.tree.valid_prefix(&p))
            .unwrap_or_default();
        let mut messages = vec![
            ChatMessage::user(prompt),
            ChatMessage::user(observations(&self.tools, &path, &[])),
        ];
        let fallback = |reason: &str| {
            tracing::warn!(dialogue = %self.dialogue_id, %reason, "planner output unusable, probing");
            Plan {
                thought: format!("Planner output unusable ({reason}); asking about preferences."),
                profile: ContextualProfile::default(),
                action: Action::PreferenceProbing,
            }
        };
        let key = FixtureKey::new(prompts::REACT_PLAN, &self.dialogue_id, t);
        let mut plan = match self.gateway.complete_json(&messages, key, |v| self.parse_plan(v, conversation)) {
            Ok(p) => p,
            Err(GatewayError::Malformed { reason, .. }) => fallback(&reason),
            Err(e) => return Err(e.into()),
        };
        let exec = Executor {
            tools: &self.tools,
            gateway: &self.gateway,
            dialogue_id: &self.dialogue_id,
            params: &self.params,
        };
        let query = history_text(conversation);
        let mut prepared = exec.prepare(plan.action, &plan.profile, &query, conversation)?;
        if let Err(reason) = &prepared {
            messages.push(ChatMessage::assistant(plan_json(&plan)));
            messages.push(ChatMessage::user(replan_message(plan.action, reason)));
            let key = FixtureKey::new(prompts::REACT_REPLAN, &self.dialogue_id, t);
            plan = match self.gateway.complete_json(&messages, key, |v| self.parse_plan(v, conversation)) {
                Ok(p) => p,
                Err(GatewayError::Malformed { reason, .. }) => fallback(&reason),
                Err(e) => return Err(e.into()),
            };
            prepared = exec.prepare(plan.action, &plan.profile, &query, conversation)?;
        }
        let prepared = prepared.unwrap_or(Prepared::Probe);
        let (turn, _) = exec.execute(
            prepared,
            &plan.thought,
            &plan.profile,
            "(not tracked)",
            &query,
            None,
            conversation,
            t,
        )?;
        Ok(turn)
    }
}
