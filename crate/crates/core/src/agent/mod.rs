//! Recommender agents. The CSI agent plans over a contextual profile and
//! draws on strategy memory; the ReAct variant plans from the raw
//! conversation; ChatCRS retrieves and persuades every turn without planning.

mod chatcrs;
mod persuade;
mod planning;
mod profile;
pub mod tools;

use serde::{Deserialize, Serialize};

use crate::dialogue::{AgentTurn, Strategy, Turn};
use crate::gateway::{Gateway, GatewayError};
use crate::index::IndexError;
use crate::memory::{MemoryError, MemoryStore};

pub use chatcrs::ChatCrsAgent;
pub use persuade::{
    act_persuade, comparison, enforce_mentions, exemplar_message, parse_strategy_reply,
    PersuasionInput, EXEMPLAR_HEADER,
};
pub use planning::{
    observations, search_query, seeker_text, turn_number, CsiAgent, ReactAgent,
    OBSERVATION_HEADER, PATH_COMPLETE,
};
pub use profile::ContextualProfile;
pub use tools::Toolbox;

#[derive(Debug, thiserror::Error)]
pub enum AgentError {
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    Memory(#[from] MemoryError),
    #[error("catalog: {0}")]
    Catalog(String),
}

impl AgentError {
    /// Errors that should stop the whole run rather than one episode.
    pub fn is_fatal(&self) -> bool {
        match self {
            AgentError::Gateway(e) => e.is_fatal(),
            AgentError::Index(e) => e.is_retryable(),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "csi")]
    Csi,
    #[serde(rename = "csi-no-profile")]
    CsiNoProfile,
    #[serde(rename = "chatcrs")]
    ChatCrs,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Csi, Variant::CsiNoProfile, Variant::ChatCrs];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Csi => "csi",
            Variant::CsiNoProfile => "csi-no-profile",
            Variant::ChatCrs => "chatcrs",
        }
    }

    pub fn parse(s: &str) -> Option<Variant> {
        Self::ALL.into_iter().find(|v| v.name() == s)
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentParams {
    /// Items listed per suggestion.
    pub suggest_k: usize,
    /// Neighbors searched for a higher-priced candidate.
    pub candidate_k: usize,
    /// Items retrieved per ChatCRS turn.
    pub retrieval_k: usize,
    /// Memory exemplars per persuasion.
    pub memory_k: usize,
    /// Append the category path to the preference query.
    pub category_in_query: bool,
}

impl Default for AgentParams {
    fn default() -> Self {
        Self {
            suggest_k: 3,
            candidate_k: 20,
            retrieval_k: 50,
            memory_k: 3,
            category_in_query: false,
        }
    }
}

/// The persuasion behind the latest CSI turn, kept so a success can be
/// written to memory.
#[derive(Debug, Clone, PartialEq)]
pub struct PersuasionRecord {
    pub memory_text: String,
    pub strategy: Strategy,
    pub utterance: String,
    pub candidate_item_id: String,
}

pub enum Agent<'a> {
    Csi(CsiAgent<'a>),
    React(ReactAgent<'a>),
    ChatCrs(ChatCrsAgent<'a>),
}

impl<'a> Agent<'a> {
    pub fn new(
        variant: Variant,
        tools: Toolbox<'a>,
        gateway: Gateway,
        dialogue_id: &str,
        params: AgentParams,
        memory: Option<&'a MemoryStore>,
    ) -> Self {
        match variant {
            Variant::Csi => Agent::Csi(CsiAgent::new(tools, gateway, dialogue_id, params, memory)),
            Variant::CsiNoProfile => Agent::React(ReactAgent::new(tools, gateway, dialogue_id, params)),
            Variant::ChatCrs => Agent::ChatCrs(ChatCrsAgent::new(tools, gateway, dialogue_id, params)),
        }
    }

    /// The next recommender turn, plus the persuasion record when a CSI
    /// agent persuaded.
    pub fn next_turn(
        &mut self,
        conversation: &[Turn],
    ) -> Result<(AgentTurn, Option<PersuasionRecord>), AgentError> {
        match self {
            Agent::Csi(a) => a.next_turn(conversation),
            Agent::React(a) => Ok((a.next_turn(conversation)?, None)),
            Agent::ChatCrs(a) => Ok((a.next_turn(conversation)?, None)),
        }
    }
}
