use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, Ordering};

use serde_json::Value;

use super::{DecisionStyle, Openness, UserProfile};
use crate::catalog::{Interaction, Item, PriceRange, SkipReason, SkippedUser, UserHistory};
use crate::gateway::prompts::{self, PROFILE_OPENNESS, PROFILE_PREFERENCE, PROFILE_PURCHASE};
use crate::gateway::{ChatMessage, FixtureKey, Gateway, GatewayError};
use crate::pool::map_ordered;

#[derive(Debug, thiserror::Error)]
pub enum ProfileError {
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error("{0}")]
    Invalid(String),
}

impl ProfileError {
    /// Transport failures abort the whole build; anything else only skips
    /// the user it happened on.
    pub fn is_fatal(&self) -> bool {
        matches!(
            self,
            ProfileError::Gateway(
                GatewayError::Http { .. }
                    | GatewayError::Disabled
                    | GatewayError::Template(_)
                    | GatewayError::Fixture(_)
            )
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ItemAnalysis {
    pub purchase_reason: String,
    /// Stored as given; only the overall style is normalized.
    pub decision_style: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PurchaseAnalysis {
    pub per_item: BTreeMap<String, ItemAnalysis>,
    pub overall: DecisionStyle,
    pub target_needs: String,
}

/// `[min, max]` of the prices; a single distinct price is widened by 5% on
/// each side so the range is never empty.
pub fn estimate_budget(prices: &[f64]) -> Option<PriceRange> {
    let min = prices.iter().copied().reduce(f64::min)?;
    let max = prices.iter().copied().reduce(f64::max)?;
    if min == max {
        Some(PriceRange::new(min * 0.95, max * 1.05))
    } else {
        Some(PriceRange::new(min, max))
    }
}

fn string_field(v: &Value, key: &str) -> Result<String, String> {
    match v.get(key).and_then(Value::as_str) {
        Some(s) if !s.trim().is_empty() => Ok(s.to_string()),
        _ => Err(format!("missing \"{key}\"")),
    }
}

fn clean(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Runs the three profile prompts for one user.
#[derive(Debug, Clone)]
pub struct ProfileBuilder {
    gateway: Gateway,
}

impl ProfileBuilder {
    pub fn new(gateway: Gateway) -> Self {
        Self { gateway }
    }

    fn ask<T>(
        &self,
        template: &str,
        user_id: &str,
        slot: &str,
        body: &str,
        validate: impl Fn(&Value) -> Result<T, String>,
    ) -> Result<T, ProfileError> {
        let prompt = prompts::render(template, &[(slot, body)])?;
        Ok(self.gateway.complete_json(
            &[ChatMessage::user(prompt)],
            FixtureKey::new(template, user_id, 0),
            validate,
        )?)
    }

    pub fn infer_general_preference(
        &self,
        user_id: &str,
        history: &[(Interaction, Item)],
    ) -> Result<String, ProfileError> {
        if history.is_empty() {
            return Err(ProfileError::Invalid("empty history".into()));
        }
        let body = history
            .iter()
            .enumerate()
            .map(|(n, (x, item))| {
                format!(
                    "    - Purchased Item {} : {}, {}, {}, {}, {}",
                    n + 1,
                    item.id,
                    clean(&item.description),
                    x.rating,
                    clean(&x.review_title),
                    clean(&x.review_body)
                )
            })
            .collect::<Vec<_>>()
            .join("\n");
        self.ask(PROFILE_PREFERENCE, user_id, "items", &body, |v| {
            string_field(v, "general preference")
        })
    }

    pub fn infer_dialogue_openness(
        &self,
        user_id: &str,
        reviews: &[Interaction],
    ) -> Result<Openness, ProfileError> {
        if reviews.is_empty() {
            return Err(ProfileError::Invalid("no reviews".into()));
        }
        let body = reviews
            .iter()
            .enumerate()
            .map(|(n, x)| {
                format!(
                    "    Item {} : {}, {}, {}",
                    n + 1,
                    x.item_id,
                    clean(&x.review_title),
                    clean(&x.review_body)
                )
            })
            .collect::<Vec<_>>()
            .join("\n");
        self.ask(PROFILE_OPENNESS, user_id, "reviews", &body, |v| {
            let label = string_field(v, "dialogue_openness")?;
            Openness::parse(&label).ok_or_else(|| format!("unknown openness {label:?}"))
        })
    }

    pub fn infer_purchase_analysis(
        &self,
        user_id: &str,
        targets: &[(Interaction, Item)],
    ) -> Result<PurchaseAnalysis, ProfileError> {
        if targets.is_empty() {
            return Err(ProfileError::Invalid("no target items".into()));
        }
        let body = targets
            .iter()
            .enumerate()
            .map(|(n, (x, item))| {
                format!(
                    "    - Item {} : {}, {}, {}, {}, {}",
                    n + 1,
                    item.id,
                    clean(&item.description),
                    x.rating,
                    clean(&x.review_title),
                    clean(&x.review_body)
                )
            })
            .collect::<Vec<_>>()
            .join("\n");
        self.ask(PROFILE_PURCHASE, user_id, "items", &body, parse_purchase)
    }

    /// Builds the full profile; the budget comes from target prices.
    pub fn assemble(&self, history: &UserHistory) -> Result<UserProfile, ProfileError> {
        let user = history.user_id.as_str();
        let general_preference = self.infer_general_preference(user, &history.history_items)?;
        let reviews: Vec<Interaction> =
            history.history_items.iter().map(|(x, _)| x.clone()).collect();
        let dialogue_openness = self.infer_dialogue_openness(user, &reviews)?;
        let analysis = self.infer_purchase_analysis(user, &history.target_items)?;
        let prices: Vec<f64> = history.target_items.iter().map(|(_, i)| i.price).collect();
        let budget = estimate_budget(&prices).expect("targets are non-empty");
        let reason_to_purchase = analysis
            .per_item
            .values()
            .map(|a| a.purchase_reason.as_str())
            .collect::<Vec<_>>()
            .join(" ");
        let profile = UserProfile {
            user_id: user.to_string(),
            general_preference,
            dialogue_openness,
            decision_style: analysis.overall,
            target_category_path: history.target_category_path.clone(),
            target_needs: analysis.target_needs,
            reason_to_purchase,
            budget,
            target_item_ids: history.target_items.iter().map(|(_, i)| i.id.clone()).collect(),
        };
        profile.validate().map_err(ProfileError::Invalid)?;
        Ok(profile)
    }
}

fn parse_purchase(v: &Value) -> Result<PurchaseAnalysis, String> {
    let analysis = v
        .get("analysis")
        .and_then(Value::as_object)
        .filter(|m| !m.is_empty())
        .ok_or("missing \"analysis\"")?;
    let mut per_item = BTreeMap::new();
    for (id, entry) in analysis {
        per_item.insert(
            id.clone(),
            ItemAnalysis {
                purchase_reason: string_field(entry, "purchase reason")?,
                decision_style: string_field(entry, "decision making style")?,
            },
        );
    }
    let overall_label = string_field(v, "overall decision making style")?;
    let overall = DecisionStyle::parse(&overall_label)
        .ok_or_else(|| format!("unknown decision making style {overall_label:?}"))?;
    Ok(PurchaseAnalysis {
        per_item,
        overall,
        target_needs: string_field(v, "target needs")?,
    })
}

/// Assembles profiles for many users on `workers` threads. Users whose
/// inference fails are skipped with a reason; the first fatal error stops
/// further work and is returned next to whatever was already built.
pub fn build_profiles(
    builder: &ProfileBuilder,
    histories: &[UserHistory],
    workers: usize,
) -> (Vec<UserProfile>, Vec<SkippedUser>, Option<ProfileError>) {
    let abort = AtomicBool::new(false);
    let results = map_ordered(histories, workers, |h| {
        if abort.load(Ordering::Relaxed) {
            return None;
        }
        let r = builder.assemble(h);
        if r.as_ref().is_err_and(ProfileError::is_fatal) {
            abort.store(true, Ordering::Relaxed);
        }
        Some(r)
    });
    let mut profiles = Vec::new();
    let mut skipped = Vec::new();
    let mut fatal = None;
    for (h, r) in histories.iter().zip(results) {
        match r {
            None => {}
            Some(Ok(p)) => profiles.push(p),
            Some(Err(e)) if e.is_fatal() => {
                if fatal.is_none() {
                    fatal = Some(e);
                }
            }
            Some(Err(e)) => {
                tracing::info!(user = %h.user_id, error = %e, "profile skipped");
                skipped.push(SkippedUser {
                    user_id: h.user_id.clone(),
                    reason: SkipReason::ProfileInference,
                    detail: e.to_string(),
                });
            }
        }
    }
    (profiles, skipped, fatal)
}
