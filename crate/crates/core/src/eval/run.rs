use super::{classify, Outcome, Transcript};
use crate::agent::{Agent, AgentError, AgentParams, PersuasionRecord, Toolbox, Variant};
use crate::dialogue::{Action, Turn};
use crate::gateway::{Gateway, GatewayError};
use crate::memory::{MemoryError, MemoryStore};
use crate::pool::map_ordered;
use crate::profiles::UserProfile;
use crate::simulator::{RuleParams, Seeker, SeekerMode};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("run aborted in episode {episode}: {source}")]
    Aborted { episode: String, source: AgentError },
    #[error("memory update failed: {0}")]
    Memory(#[from] MemoryError),
}

#[derive(Debug, Clone)]
pub enum SeekerSetting {
    Rule(RuleParams),
    Llm,
}

/// Everything an evaluation run needs besides the profiles.
pub struct EvalSetup<'a> {
    pub tools: Toolbox<'a>,
    pub gateway: Gateway,
    pub variant: Variant,
    pub agent: AgentParams,
    pub seeker: SeekerSetting,
    pub memory: Option<&'a MemoryStore>,
    pub max_turns: u32,
    pub workers: usize,
    /// Episodes run between online memory updates.
    pub memory_sync_every: usize,
    /// Prefix of episode ids; keeps fixture keys of different runs apart.
    pub run_label: String,
    pub config_hash: String,
}

pub struct EpisodeSpec<'p> {
    pub episode_id: String,
    pub profile: &'p UserProfile,
}

fn aborts_run(e: &AgentError) -> bool {
    matches!(
        e,
        AgentError::Gateway(GatewayError::Disabled | GatewayError::Http { .. })
    ) || matches!(e, AgentError::Index(i) if i.is_retryable())
}

/// One dialogue: the seeker opens, then agent and seeker alternate until the
/// seeker buys or `max_turns` recommender turns have passed. Returns the
/// persuasion record when the purchase came from a CSI persuasion.
pub fn run_episode(
    setup: &EvalSetup,
    spec: &EpisodeSpec,
) -> Result<(Transcript, Option<PersuasionRecord>), AgentError> {
    let profile = spec.profile;
    let mode = match &setup.seeker {
        SeekerSetting::Rule(p) => SeekerMode::Rule(p.clone()),
        SeekerSetting::Llm => SeekerMode::Llm {
            gateway: setup.gateway.clone(),
            dialogue_id: spec.episode_id.clone(),
        },
    };
    let seeker = Seeker::new(profile, setup.tools.catalog, mode);
    let mut agent = Agent::new(
        setup.variant,
        setup.tools,
        setup.gateway.clone(),
        &spec.episode_id,
        setup.agent.clone(),
        setup.memory,
    );
    let mut transcript = Transcript {
        episode_id: spec.episode_id.clone(),
        user_id: profile.user_id.clone(),
        agent_variant: setup.variant.name().to_string(),
        seeker_openness: Some(profile.dialogue_openness),
        seeker_style: Some(profile.decision_style),
        turns: Vec::new(),
        outcome: Outcome::NoPurchase,
        accepted_item_id: None,
        turn_count: 0,
        error: None,
        config_hash: setup.config_hash.clone(),
    };
    let mut record = None;
    let result = (|| -> Result<(), AgentError> {
        transcript.turns.push(Turn::Seeker(seeker.open_dialogue()?));
        for _ in 0..setup.max_turns {
            let (turn, persuasion) = agent.next_turn(&transcript.turns)?;
            let reply = seeker.respond(&transcript.turns, &turn)?;
            let persuaded = turn.action == Action::Persuasion;
            transcript.turns.push(Turn::Recommender(turn));
            transcript.turn_count += 1;
            let terminal = reply.terminal;
            let accepted = reply.accepted_item_id.clone();
            transcript.turns.push(Turn::Seeker(reply));
            if !terminal {
                continue;
            }
            if let Some(id) = accepted {
                let item = setup.tools.catalog.require(&id).map_err(|e| AgentError::Catalog(e.to_string()))?;
                transcript.outcome = classify(item.price, &profile.budget);
                transcript.accepted_item_id = Some(id.clone());
                if persuaded {
                    record = persuasion.filter(|r| r.candidate_item_id == id);
                }
            }
            break;
        }
        Ok(())
    })();
    match result {
        Ok(()) => Ok((transcript, record)),
        Err(e) if aborts_run(&e) => Err(e),
        Err(e) => {
            tracing::warn!(episode = %spec.episode_id, error = %e, "episode failed");
            transcript.error = Some(e.to_string());
            transcript.outcome = Outcome::NoPurchase;
            transcript.accepted_item_id = None;
            Ok((transcript, None))
        }
    }
}

/// Runs one episode per profile on the worker pool. With an online memory,
/// episodes go in batches of `memory_sync_every`; successful out-of-budget
/// persuasions are stored between batches, in episode order, so results do
/// not depend on the number of workers.
pub fn run_eval(setup: &EvalSetup, profiles: &[UserProfile]) -> Result<Vec<Transcript>, EvalError> {
    let specs: Vec<EpisodeSpec> = profiles
        .iter()
        .map(|p| EpisodeSpec {
            episode_id: format!("{}:{}", setup.run_label, p.user_id),
            profile: p,
        })
        .collect();
    let online = setup.memory.filter(|m| !m.is_frozen());
    let batch = if online.is_some() {
        setup.memory_sync_every.max(1)
    } else {
        specs.len().max(1)
    };
    let mut out = Vec::with_capacity(specs.len());
    for chunk in specs.chunks(batch) {
        let results = map_ordered(chunk, setup.workers, |spec| run_episode(setup, spec));
        for (spec, result) in chunk.iter().zip(results) {
            let (transcript, record) = result.map_err(|source| EvalError::Aborted {
                episode: spec.episode_id.clone(),
                source,
            })?;
            if let (Some(memory), Some(r), Outcome::AcceptedOutOfBudget) =
                (online, record, transcript.outcome)
            {
                memory.insert(&r.memory_text, r.strategy, Some(&r.utterance), &transcript.episode_id)?;
            }
            out.push(transcript);
        }
    }
    Ok(out)
}
