//! Product catalog: ingestion of review/metadata corpora, k-core filtering,
//! per-user history/target split and the hierarchical category tree.

mod ingest;
mod kcore;
mod snapshot;
mod split;
mod tree;

use std::collections::HashMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

pub use ingest::{ingest, FieldMap, IngestStats, Ingested};
pub use kcore::k_core_filter;
pub use snapshot::{read_snapshot, write_snapshot, SNAPSHOT_FORMAT, SNAPSHOT_VERSION};
pub use split::{build_histories, split_history_target, SkipReason, SkippedUser, UserHistory};
pub use tree::CategoryTree;

#[derive(Debug, thiserror::Error)]
pub enum CatalogError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {malformed} of {total} lines malformed (lines {lines:?})")]
    TooManyMalformed {
        path: PathBuf,
        malformed: usize,
        total: usize,
        lines: Vec<usize>,
    },
    #[error("category not found: {0:?}")]
    NotFound(String),
    #[error("unknown item id: {0}")]
    UnknownItem(String),
    #[error("duplicate item id: {0}")]
    DuplicateItem(String),
    #[error("invalid item {id}: {reason}")]
    InvalidItem { id: String, reason: String },
    #[error("snapshot: {0}")]
    Snapshot(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Review {
    pub rating: u8,
    pub title: String,
    pub body: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Item {
    pub id: String,
    pub title: String,
    pub description: String,
    #[serde(default)]
    pub features: Vec<String>,
    pub price: f64,
    pub category_path: Vec<String>,
    pub avg_rating: f64,
    pub rating_count: u64,
    #[serde(default)]
    pub reviews: Vec<Review>,
}

impl Item {
    /// Checks the completeness rules an item must satisfy to enter a catalog.
    pub fn validate(&self) -> Result<(), CatalogError> {
        let fail = |reason: &str| {
            Err(CatalogError::InvalidItem {
                id: self.id.clone(),
                reason: reason.to_string(),
            })
        };
        if self.id.is_empty() {
            return fail("empty id");
        }
        if !(self.price.is_finite() && self.price > 0.0) {
            return fail("price must be positive");
        }
        if self.category_path.is_empty() || self.category_path.iter().any(|c| c.is_empty()) {
            return fail("empty category path");
        }
        if self.title.trim().is_empty() || self.description.trim().is_empty() {
            return fail("missing title or description");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Interaction {
    pub user_id: String,
    pub item_id: String,
    pub rating: u8,
    pub review_title: String,
    pub review_body: String,
    pub timestamp: i64,
}

/// A closed price interval in currency units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceRange {
    pub min: f64,
    pub max: f64,
}

impl PriceRange {
    pub fn new(min: f64, max: f64) -> Self {
        assert!(min <= max, "price range min {min} exceeds max {max}");
        Self { min, max }
    }

    /// Anything at or below `max` is affordable; cheaper-than-min items still count.
    pub fn is_in_budget(&self, price: f64) -> bool {
        price <= self.max
    }

    /// Renders as `[$29.99, $31.92]`.
    pub fn display_dollars(&self) -> String {
        format!("[${:.2}, ${:.2}]", self.min, self.max)
    }
}

/// Immutable item database keyed by id, iterated in id order.
#[derive(Debug, Clone, Default)]
pub struct Catalog {
    items: Vec<Item>,
    by_id: HashMap<String, usize>,
}

impl Catalog {
    pub fn new(items: impl IntoIterator<Item = Item>) -> Result<Self, CatalogError> {
        let mut items: Vec<Item> = items.into_iter().collect();
        items.sort_by(|a, b| a.id.cmp(&b.id));
        let mut by_id = HashMap::with_capacity(items.len());
        for (pos, item) in items.iter().enumerate() {
            item.validate()?;
            if by_id.insert(item.id.clone(), pos).is_some() {
                return Err(CatalogError::DuplicateItem(item.id.clone()));
            }
        }
        Ok(Self { items, by_id })
    }

    pub fn get(&self, id: &str) -> Option<&Item> {
        self.by_id.get(id).map(|&i| &self.items[i])
    }

    pub fn require(&self, id: &str) -> Result<&Item, CatalogError> {
        self.get(id)
            .ok_or_else(|| CatalogError::UnknownItem(id.to_string()))
    }

    pub fn items(&self) -> &[Item] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn tree(&self) -> CategoryTree {
        CategoryTree::from_items(&self.items)
    }
}
