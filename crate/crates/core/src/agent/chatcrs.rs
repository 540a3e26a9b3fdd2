use super::persuade::{enforce_mentions, fallback, parse_strategy_reply};
use super::planning::turn_number;
use super::tools::{extract_price_range, item_info, listing, offered_items, Toolbox};
use super::{AgentError, AgentParams};
use crate::dialogue::{render_history, Action, AgentTurn, Strategy, Turn};
use crate::gateway::{prompts, ChatMessage, FixtureKey, Gateway, GatewayError};

const PROBE: &str = "Could you tell me more about what you are looking for?";

/// Retrieve, recommend and persuade in one reply every turn, with the whole
/// conversation as the query and no planning.
pub struct ChatCrsAgent<'a> {
    tools: Toolbox<'a>,
    gateway: Gateway,
    dialogue_id: String,
    params: AgentParams,
}

impl<'a> ChatCrsAgent<'a> {
    pub fn new(tools: Toolbox<'a>, gateway: Gateway, dialogue_id: impl Into<String>, params: AgentParams) -> Self {
        Self {
            tools,
            gateway,
            dialogue_id: dialogue_id.into(),
            params,
        }
    }

    pub fn next_turn(&mut self, conversation: &[Turn]) -> Result<AgentTurn, AgentError> {
        let t = turn_number(conversation);
        let thought = "Retrieve the closest affordable item and a pricier alternative.";
        let query = super::planning::history_text(conversation);
        if query.trim().is_empty() {
            return Ok(AgentTurn::new(thought, Action::PreferenceProbing, PROBE));
        }
        let exclude = offered_items(conversation);
        let max = extract_price_range(conversation).map(|r| r.max);
        let q = self.tools.embedder.embed(&query)?;
        let hits = self
            .tools
            .index
            .search_where(&q, self.params.retrieval_k, |id| !exclude.contains(id))?;
        let catalog = self.tools.catalog;
        let items: Vec<_> = hits.iter().filter_map(|h| catalog.get(&h.item_id)).collect();
        let inside = items.iter().find(|i| max.is_none_or(|m| i.price <= m));
        let outside = max.and_then(|m| items.iter().find(|i| i.price > m));

        let Some(inside) = inside else {
            return Ok(AgentTurn::new(thought, Action::PreferenceProbing, PROBE));
        };
        let Some(outside) = outside else {
            let mut turn = AgentTurn::new(thought, Action::ItemSuggestion, listing(&[inside]));
            turn.shown_item_ids = vec![inside.id.clone()];
            return Ok(turn);
        };
        let prompt = prompts::render(
            prompts::CHATCRS,
            &[
                ("item1_info", &item_info(inside)),
                ("item2_info", &item_info(outside)),
                ("conversation_history", &render_history(conversation)),
            ],
        )?;
        let key = FixtureKey::new(prompts::CHATCRS, &self.dialogue_id, t);
        let (strategy, utterance) =
            match self.gateway.complete_json(&[ChatMessage::user(prompt)], key, parse_strategy_reply) {
                Ok((s, sentence)) => (s, enforce_mentions(&sentence, inside, outside)),
                Err(GatewayError::Malformed { reason, .. }) => {
                    tracing::warn!(%reason, "chatcrs reply unusable, using templated comparison");
                    (Strategy::LogicalAppeal, fallback(inside, outside))
                }
                Err(e) => return Err(e.into()),
            };
        let mut turn = AgentTurn::new(thought, Action::Persuasion, utterance);
        turn.strategy = Some(strategy);
        turn.candidate_item_id = Some(outside.id.clone());
        turn.shown_item_ids = vec![inside.id.clone(), outside.id.clone()];
        Ok(turn)
    }
}
