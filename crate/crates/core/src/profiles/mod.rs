//! Simulator-side user profiles: inference from review histories through the
//! profile prompts, budget estimation, cohort sampling and persistence.

mod build;
mod store;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::catalog::PriceRange;

pub use build::{
    build_profiles, estimate_budget, ItemAnalysis, ProfileBuilder, ProfileError, PurchaseAnalysis,
};
pub use store::{load_profiles, sample_cohort, save_profiles, PROFILE_SCHEMA_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Openness {
    Active,
    Neutral,
    Passive,
}

impl Openness {
    pub const ALL: [Openness; 3] = [Openness::Active, Openness::Neutral, Openness::Passive];

    /// The openness prompt offers "Less Active" where reports use Neutral.
    pub fn parse(label: &str) -> Option<Openness> {
        match label.trim().to_ascii_lowercase().as_str() {
            "active" => Some(Openness::Active),
            "less active" | "neutral" => Some(Openness::Neutral),
            "passive" => Some(Openness::Passive),
            _ => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Openness::Active => "Active",
            Openness::Neutral => "Neutral",
            Openness::Passive => "Passive",
        }
    }
}

impl fmt::Display for Openness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DecisionStyle {
    Rational,
    Dependent,
    Intuitive,
}

impl DecisionStyle {
    pub const ALL: [DecisionStyle; 3] = [
        DecisionStyle::Rational,
        DecisionStyle::Dependent,
        DecisionStyle::Intuitive,
    ];

    pub fn parse(label: &str) -> Option<DecisionStyle> {
        match label.trim().to_ascii_lowercase().as_str() {
            "rational" => Some(DecisionStyle::Rational),
            "dependent" => Some(DecisionStyle::Dependent),
            "intuitive" => Some(DecisionStyle::Intuitive),
            _ => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            DecisionStyle::Rational => "Rational",
            DecisionStyle::Dependent => "Dependent",
            DecisionStyle::Intuitive => "Intuitive",
        }
    }
}

impl fmt::Display for DecisionStyle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserProfile {
    pub user_id: String,
    pub general_preference: String,
    pub dialogue_openness: Openness,
    pub decision_style: DecisionStyle,
    pub target_category_path: Vec<String>,
    pub target_needs: String,
    pub reason_to_purchase: String,
    pub budget: PriceRange,
    pub target_item_ids: Vec<String>,
}

impl UserProfile {
    pub fn validate(&self) -> Result<(), String> {
        let texts = [
            ("user_id", &self.user_id),
            ("general_preference", &self.general_preference),
            ("target_needs", &self.target_needs),
            ("reason_to_purchase", &self.reason_to_purchase),
        ];
        if let Some((name, _)) = texts.iter().find(|(_, t)| t.trim().is_empty()) {
            return Err(format!("{name} is empty"));
        }
        if self.target_category_path.is_empty() {
            return Err("target_category_path is empty".into());
        }
        if self.target_item_ids.is_empty() {
            return Err("no target items".into());
        }
        // also rejects NaN bounds
        if self.budget.min.partial_cmp(&self.budget.max).is_none_or(|o| o.is_gt()) {
            return Err("budget min exceeds max".into());
        }
        Ok(())
    }
}
