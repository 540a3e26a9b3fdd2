use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::{Outcome, Transcript};
use crate::dialogue::{Action, Strategy, Turn};
use crate::index::VectorIndex;
use crate::profiles::{DecisionStyle, Openness, UserProfile};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricError {
    #[error("no completed transcripts")]
    NoTranscripts,
}

fn completed(ts: &[Transcript]) -> impl Iterator<Item = &Transcript> {
    ts.iter().filter(|t| !t.errored())
}

/// Accepted episodes over completed episodes.
pub fn compute_sr(ts: &[Transcript]) -> Result<f64, MetricError> {
    let (n, accepted) = completed(ts).fold((0usize, 0usize), |(n, a), t| {
        (n + 1, a + usize::from(t.outcome.is_accepted()))
    });
    if n == 0 {
        return Err(MetricError::NoTranscripts);
    }
    Ok(accepted as f64 / n as f64)
}

/// Out-of-budget acceptances over all acceptances; `None` without any.
pub fn compute_swr(ts: &[Transcript]) -> Option<f64> {
    let (accepted, out) = completed(ts).fold((0usize, 0usize), |(a, o), t| match t.outcome {
        Outcome::AcceptedOutOfBudget => (a + 1, o + 1),
        Outcome::AcceptedInBudget => (a + 1, o),
        Outcome::NoPurchase => (a, o),
    });
    (accepted > 0).then(|| out as f64 / accepted as f64)
}

/// Share of each action among recommender turns, keyed by action label.
pub type ActionShares = BTreeMap<String, f64>;

/// Action shares per seeker openness. Groups without turns are left out.
pub fn action_distribution(ts: &[Transcript]) -> BTreeMap<Openness, ActionShares> {
    let mut counts: BTreeMap<Openness, [usize; 4]> = BTreeMap::new();
    for t in completed(ts) {
        let Some(openness) = t.seeker_openness else { continue };
        for turn in &t.turns {
            if let Turn::Recommender(a) = turn {
                let slot = Action::ALL.iter().position(|x| *x == a.action).expect("known action");
                counts.entry(openness).or_default()[slot] += 1;
            }
        }
    }
    counts
        .into_iter()
        .filter_map(|(group, c)| {
            let total: usize = c.iter().sum();
            (total > 0).then(|| {
                let shares = Action::ALL
                    .iter()
                    .zip(c)
                    .map(|(a, n)| (a.label().to_string(), n as f64 / total as f64))
                    .collect();
                (group, shares)
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyCell {
    pub style: DecisionStyle,
    pub strategy: Strategy,
    pub attempts: usize,
    pub accepted: usize,
    pub rate: f64,
}

/// Per (style, strategy): persuasion turns whose candidate was bought in the
/// very next seeker turn, over persuasion turns. Cells without attempts are
/// absent.
pub fn strategy_acceptance(ts: &[Transcript]) -> Vec<StrategyCell> {
    let mut cells: BTreeMap<(DecisionStyle, Strategy), (usize, usize)> = BTreeMap::new();
    for t in completed(ts) {
        let Some(style) = t.seeker_style else { continue };
        for (i, turn) in t.turns.iter().enumerate() {
            let Turn::Recommender(a) = turn else { continue };
            let Some(strategy) = a.strategy else { continue };
            let accepted = match t.turns.get(i + 1) {
                Some(Turn::Seeker(s)) => s.accepted_item_id.is_some() && s.accepted_item_id == a.candidate_item_id,
                _ => false,
            };
            let cell = cells.entry((style, strategy)).or_default();
            cell.0 += 1;
            cell.1 += usize::from(accepted);
        }
    }
    cells
        .into_iter()
        .map(|((style, strategy), (attempts, accepted))| StrategyCell {
            style,
            strategy,
            attempts,
            accepted,
            rate: accepted as f64 / attempts as f64,
        })
        .collect()
}

/// Squared distance from `item` to the nearest of the user's target items.
fn target_distance(index: &VectorIndex, item: &str, profile: &UserProfile) -> Option<f64> {
    let v = index.vector(item)?;
    profile
        .target_item_ids
        .iter()
        .filter_map(|t| index.vector(t))
        .map(|tv| v.squared_distance(tv))
        .min_by(f64::total_cmp)
}

/// Over users both runs sold to, how often `a`'s purchase sits strictly
/// closer to a target item than `b`'s; ties count one half.
pub fn similarity_win_rate(
    a: &[Transcript],
    b: &[Transcript],
    profiles: &[UserProfile],
    index: &VectorIndex,
) -> Option<f64> {
    let by_user: HashMap<&str, &UserProfile> = profiles.iter().map(|p| (p.user_id.as_str(), p)).collect();
    let bought = |ts: &[Transcript]| -> HashMap<String, String> {
        completed(ts)
            .filter_map(|t| Some((t.user_id.clone(), t.accepted_item_id.clone()?)))
            .collect()
    };
    let (ba, bb) = (bought(a), bought(b));
    let mut users: Vec<&String> = ba.keys().filter(|u| bb.contains_key(*u)).collect();
    users.sort();
    let mut n = 0usize;
    let mut score = 0.0;
    for u in users {
        let Some(profile) = by_user.get(u.as_str()) else { continue };
        let (Some(da), Some(db)) = (
            target_distance(index, &ba[u], profile),
            target_distance(index, &bb[u], profile),
        ) else {
            continue;
        };
        n += 1;
        score += if da < db {
            1.0
        } else if da == db {
            0.5
        } else {
            0.0
        };
    }
    (n > 0).then(|| score / n as f64)
}
