use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Catalog, Interaction, Item};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserHistory {
    pub user_id: String,
    pub history_items: Vec<(Interaction, Item)>,
    pub target_items: Vec<(Interaction, Item)>,
    pub target_category_path: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkipReason {
    TooFewInteractions,
    SingleCategoryPath,
    UnknownItem,
    ProfileInference,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedUser {
    pub user_id: String,
    pub reason: SkipReason,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

/// Splits one user's interactions into history and targets: the most recent
/// item's exact category path defines the target group.
pub fn split_history_target(
    user_interactions: &[(Interaction, Item)],
) -> Result<UserHistory, SkipReason> {
    if user_interactions.len() < 2 {
        return Err(SkipReason::TooFewInteractions);
    }
    let mut ordered: Vec<&(Interaction, Item)> = user_interactions.iter().collect();
    ordered.sort_by(|a, b| {
        (a.0.timestamp, &a.0.item_id).cmp(&(b.0.timestamp, &b.0.item_id))
    });
    let target_path = ordered.last().unwrap().1.category_path.clone();
    let (targets, history): (Vec<_>, Vec<_>) = ordered
        .into_iter()
        .cloned()
        .partition(|(_, item)| item.category_path == target_path);
    if history.is_empty() {
        return Err(SkipReason::SingleCategoryPath);
    }
    Ok(UserHistory {
        user_id: user_interactions[0].0.user_id.clone(),
        history_items: history,
        target_items: targets,
        target_category_path: target_path,
    })
}

/// Groups interactions per user (id order) and splits each one.
pub fn build_histories(
    catalog: &Catalog,
    interactions: &[Interaction],
) -> (Vec<UserHistory>, Vec<SkippedUser>) {
    let mut per_user: BTreeMap<&str, Vec<&Interaction>> = BTreeMap::new();
    for x in interactions {
        per_user.entry(x.user_id.as_str()).or_default().push(x);
    }
    let mut out = Vec::new();
    let mut skipped = Vec::new();
    for (user, xs) in per_user {
        let joined: Option<Vec<(Interaction, Item)>> = xs
            .iter()
            .map(|x| catalog.get(&x.item_id).map(|it| ((*x).clone(), it.clone())))
            .collect();
        let result = match joined {
            Some(pairs) => split_history_target(&pairs),
            None => Err(SkipReason::UnknownItem),
        };
        match result {
            Ok(h) => out.push(h),
            Err(reason) => skipped.push(SkippedUser {
                user_id: user.to_string(),
                reason,
                detail: String::new(),
            }),
        }
    }
    (out, skipped)
}
