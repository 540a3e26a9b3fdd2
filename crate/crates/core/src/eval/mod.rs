//! Episodes, metrics and reports.

mod metrics;
mod report;
mod run;

use serde::{Deserialize, Serialize};

use crate::catalog::PriceRange;
use crate::dialogue::Turn;
use crate::profiles::{DecisionStyle, Openness};

pub use metrics::{
    action_distribution, compute_sr, compute_swr, similarity_win_rate, strategy_acceptance,
    ActionShares, MetricError, StrategyCell,
};
pub use report::{build_report, write_report, Report, RunMeta, TraitRow, REPORT_FILES};
pub use run::{run_episode, run_eval, EpisodeSpec, EvalError, EvalSetup, SeekerSetting};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    AcceptedInBudget,
    AcceptedOutOfBudget,
    NoPurchase,
}

impl Outcome {
    pub fn is_accepted(self) -> bool {
        self != Outcome::NoPurchase
    }
}

/// In budget iff `price <= budget.max`.
pub fn classify(price: f64, budget: &PriceRange) -> Outcome {
    if budget.is_in_budget(price) {
        Outcome::AcceptedInBudget
    } else {
        Outcome::AcceptedOutOfBudget
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub episode_id: String,
    pub user_id: String,
    pub agent_variant: String,
    /// Unknown for human seekers.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seeker_openness: Option<Openness>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seeker_style: Option<DecisionStyle>,
    pub turns: Vec<Turn>,
    pub outcome: Outcome,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accepted_item_id: Option<String>,
    /// Recommender turns taken.
    pub turn_count: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub config_hash: String,
}

impl Transcript {
    pub fn errored(&self) -> bool {
        self.error.is_some()
    }
}
