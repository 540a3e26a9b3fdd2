use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::{CatalogError, Interaction, Item, Review};

/// Field names used to read the raw corpora; defaults follow the Amazon
/// Reviews 2023 dumps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldMap {
    pub review_user: String,
    pub review_item: String,
    pub review_rating: String,
    pub review_title: String,
    pub review_text: String,
    pub review_timestamp: String,
    pub meta_id: String,
    pub meta_title: String,
    pub meta_description: String,
    pub meta_features: String,
    pub meta_price: String,
    pub meta_categories: String,
    pub meta_average_rating: String,
    pub meta_rating_count: String,
}

impl Default for FieldMap {
    fn default() -> Self {
        Self {
            review_user: "user_id".into(),
            review_item: "parent_asin".into(),
            review_rating: "rating".into(),
            review_title: "title".into(),
            review_text: "text".into(),
            review_timestamp: "timestamp".into(),
            meta_id: "parent_asin".into(),
            meta_title: "title".into(),
            meta_description: "description".into(),
            meta_features: "features".into(),
            meta_price: "price".into(),
            meta_categories: "categories".into(),
            meta_average_rating: "average_rating".into(),
            meta_rating_count: "rating_number".into(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IngestStats {
    pub review_lines: usize,
    pub metadata_lines: usize,
    pub malformed_reviews: usize,
    pub malformed_metadata: usize,
    pub incomplete_items: usize,
    pub duplicate_items: usize,
    pub orphan_interactions: usize,
    pub items: usize,
    pub interactions: usize,
    /// Left after k-core filtering.
    #[serde(default)]
    pub core_items: usize,
    #[serde(default)]
    pub core_interactions: usize,
}

#[derive(Debug, Clone)]
pub struct Ingested {
    pub interactions: Vec<Interaction>,
    pub items: Vec<Item>,
    pub stats: IngestStats,
}

enum Parsed<T> {
    Ok(T),
    Incomplete,
    Malformed,
}

/// Parses both corpora. Items failing the completeness rules are dropped
/// together with their interactions; unparseable lines are skipped unless
/// they exceed `max_malformed_fraction` of a file.
pub fn ingest(
    reviews_path: &Path,
    metadata_path: &Path,
    fields: &FieldMap,
    max_malformed_fraction: f64,
) -> Result<Ingested, CatalogError> {
    let mut stats = IngestStats::default();

    let meta_text = read(metadata_path)?;
    let mut items: Vec<Item> = Vec::new();
    let mut seen = HashSet::new();
    let mut bad_lines = Vec::new();
    for (n, line) in numbered_lines(&meta_text) {
        stats.metadata_lines += 1;
        match parse_item(line, fields) {
            Parsed::Ok(item) => {
                if seen.insert(item.id.clone()) {
                    items.push(item);
                } else {
                    stats.duplicate_items += 1;
                }
            }
            Parsed::Incomplete => stats.incomplete_items += 1,
            Parsed::Malformed => bad_lines.push(n),
        }
    }
    stats.malformed_metadata = bad_lines.len();
    check_malformed(metadata_path, &bad_lines, stats.metadata_lines, max_malformed_fraction)?;

    let review_text = read(reviews_path)?;
    let known: HashSet<&str> = items.iter().map(|i| i.id.as_str()).collect();
    let mut interactions = Vec::new();
    bad_lines.clear();
    for (n, line) in numbered_lines(&review_text) {
        stats.review_lines += 1;
        match parse_interaction(line, fields) {
            Some(x) if known.contains(x.item_id.as_str()) => interactions.push(x),
            Some(_) => stats.orphan_interactions += 1,
            None => bad_lines.push(n),
        }
    }
    stats.malformed_reviews = bad_lines.len();
    check_malformed(reviews_path, &bad_lines, stats.review_lines, max_malformed_fraction)?;

    let mut reviews: HashMap<&str, Vec<Review>> = HashMap::new();
    for x in &interactions {
        reviews.entry(x.item_id.as_str()).or_default().push(Review {
            rating: x.rating,
            title: x.review_title.clone(),
            body: x.review_body.clone(),
        });
    }
    for item in &mut items {
        if let Some(r) = reviews.remove(item.id.as_str()) {
            item.reviews = r;
        }
    }

    stats.items = items.len();
    stats.interactions = interactions.len();
    Ok(Ingested {
        interactions,
        items,
        stats,
    })
}

fn read(path: &Path) -> Result<String, CatalogError> {
    fs::read_to_string(path).map_err(|source| CatalogError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn numbered_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

fn check_malformed(
    path: &Path,
    lines: &[usize],
    total: usize,
    max_fraction: f64,
) -> Result<(), CatalogError> {
    if total > 0 && lines.len() as f64 > max_fraction * total as f64 {
        return Err(CatalogError::TooManyMalformed {
            path: path.to_path_buf(),
            malformed: lines.len(),
            total,
            lines: lines.to_vec(),
        });
    }
    if !lines.is_empty() {
        tracing::warn!(path = %path.display(), ?lines, "skipped malformed lines");
    }
    Ok(())
}

fn text_field(obj: &Map<String, Value>, key: &str) -> Option<String> {
    match obj.get(key)? {
        Value::String(s) => Some(s.trim().to_string()),
        Value::Array(parts) => {
            let joined: Vec<&str> = parts
                .iter()
                .filter_map(Value::as_str)
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .collect();
            Some(joined.join(" "))
        }
        _ => None,
    }
}

fn list_field(obj: &Map<String, Value>, key: &str) -> Vec<String> {
    match obj.get(key) {
        Some(Value::Array(parts)) => parts
            .iter()
            .filter_map(Value::as_str)
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
            .collect(),
        Some(Value::String(s)) if !s.trim().is_empty() => vec![s.trim().to_string()],
        _ => Vec::new(),
    }
}

fn number_field(obj: &Map<String, Value>, key: &str) -> Option<f64> {
    match obj.get(key)? {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => s.trim().trim_start_matches('$').replace(',', "").parse().ok(),
        _ => None,
    }
}

fn parse_item(line: &str, f: &FieldMap) -> Parsed<Item> {
    let Ok(Value::Object(obj)) = serde_json::from_str::<Value>(line) else {
        return Parsed::Malformed;
    };
    let Some(id) = text_field(&obj, &f.meta_id).filter(|s| !s.is_empty()) else {
        return Parsed::Malformed;
    };
    let title = text_field(&obj, &f.meta_title).unwrap_or_default();
    let description = text_field(&obj, &f.meta_description).unwrap_or_default();
    let category_path = list_field(&obj, &f.meta_categories);
    let price = number_field(&obj, &f.meta_price);
    let features = list_field(&obj, &f.meta_features);
    let (Some(price), false, false, false) = (
        price.filter(|p| p.is_finite() && *p > 0.0),
        title.is_empty(),
        description.is_empty(),
        category_path.is_empty(),
    ) else {
        return Parsed::Incomplete;
    };
    Parsed::Ok(Item {
        id,
        title,
        description,
        features,
        price,
        category_path,
        avg_rating: number_field(&obj, &f.meta_average_rating).unwrap_or(0.0),
        rating_count: number_field(&obj, &f.meta_rating_count)
            .map(|n| n.max(0.0) as u64)
            .unwrap_or(0),
        reviews: Vec::new(),
    })
}

fn parse_interaction(line: &str, f: &FieldMap) -> Option<Interaction> {
    let Value::Object(obj) = serde_json::from_str::<Value>(line).ok()? else {
        return None;
    };
    let user_id = text_field(&obj, &f.review_user).filter(|s| !s.is_empty())?;
    let item_id = text_field(&obj, &f.review_item).filter(|s| !s.is_empty())?;
    let rating = number_field(&obj, &f.review_rating)?;
    if !(1.0..=5.0).contains(&rating) || rating.fract() != 0.0 {
        return None;
    }
    let timestamp = obj.get(&f.review_timestamp)?.as_i64()?;
    Some(Interaction {
        user_id,
        item_id,
        rating: rating as u8,
        review_title: text_field(&obj, &f.review_title).unwrap_or_default(),
        review_body: text_field(&obj, &f.review_text).unwrap_or_default(),
        timestamp,
    })
}
