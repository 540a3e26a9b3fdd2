use std::collections::HashSet;
use std::sync::LazyLock;

use regex::Regex;

use crate::catalog::{Catalog, CategoryTree, Item, PriceRange};
use crate::dialogue::{dollars, mention, Turn};
use crate::index::{Embedder, IndexError, VectorIndex};

/// Read-only resources every agent works against.
#[derive(Clone, Copy)]
pub struct Toolbox<'a> {
    pub catalog: &'a Catalog,
    pub index: &'a VectorIndex,
    pub embedder: &'a dyn Embedder,
    pub tree: &'a CategoryTree,
}

static CATEGORY_REPLY: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\bI need (.+?) products\b").unwrap());
static RANGE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"\[\s*\$?\s*(\d+(?:\.\d+)?)\s*,\s*\$?\s*(\d+(?:\.\d+)?)\s*\]").unwrap()
});

/// The path named in an "I need A > B products" reply.
pub fn parse_category_reply(text: &str) -> Option<Vec<String>> {
    let caps = CATEGORY_REPLY.captures(text)?;
    let path: Vec<String> = caps[1]
        .split('>')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect();
    (!path.is_empty()).then_some(path)
}

/// Extends `current` with a seeker's category reply, keeping only segments
/// that exist in the tree. A reply that contradicts `current` or names no
/// valid child leaves the path unchanged.
pub fn apply_category_reply(tree: &CategoryTree, current: &[String], reply: &str) -> Vec<String> {
    let Some(said) = parse_category_reply(reply) else {
        return current.to_vec();
    };
    let valid = tree.valid_prefix(&said);
    if valid.len() > current.len() && valid.starts_with(current) {
        valid
    } else {
        current.to_vec()
    }
}

/// The last `[min, max]` range stated by the seeker.
pub fn extract_price_range(turns: &[Turn]) -> Option<PriceRange> {
    turns
        .iter()
        .rev()
        .find_map(|t| match t {
            Turn::Seeker(s) => RANGE.captures_iter(&s.utterance).last(),
            Turn::Recommender(_) => None,
        })
        .and_then(|c| {
            let a: f64 = c[1].parse().ok()?;
            let b: f64 = c[2].parse().ok()?;
            Some(PriceRange::new(a.min(b), a.max(b)))
        })
}

/// Every item shown or pushed by the recommender so far.
pub fn offered_items(turns: &[Turn]) -> HashSet<String> {
    turns
        .iter()
        .filter_map(|t| match t {
            Turn::Recommender(a) => Some(a.shown_item_ids.iter().chain(&a.candidate_item_id)),
            Turn::Seeker(_) => None,
        })
        .flatten()
        .cloned()
        .collect()
}

/// The category question for the current path: lists the children and asks
/// for a reply one level deeper.
pub fn category_question(tree: &CategoryTree, path: &[String]) -> Option<String> {
    let children = tree.children(path).ok()?;
    if children.is_empty() {
        return None;
    }
    let depth = path.len() + 1;
    let level = if depth == 1 { "level" } else { "levels" };
    Some(if path.is_empty() {
        format!(
            "Which category are you shopping in: {}? Please answer with {depth} {level} of the category path.",
            children.join(", ")
        )
    } else {
        format!(
            "Within {}, which of these fits best: {}? Please answer with {depth} {level} of the category path.",
            path.join(" > "),
            children.join(", ")
        )
    })
}

pub struct Retrieval<'q> {
    pub query: &'q str,
    pub path: &'q [String],
    pub max_price: Option<f64>,
    pub exclude: &'q HashSet<String>,
    pub k: usize,
}

/// Nearest items to the query text among those under `path`, within
/// `max_price` and not excluded.
pub fn retrieve_in_budget(tools: &Toolbox, r: &Retrieval) -> Result<Vec<String>, IndexError> {
    let allowed: Option<HashSet<String>> = if r.path.is_empty() {
        None
    } else {
        Some(tools.tree.items_under(r.path).unwrap_or_default().into_iter().collect())
    };
    let keep = |id: &str| {
        if r.exclude.contains(id) {
            return false;
        }
        if allowed.as_ref().is_some_and(|a| !a.contains(id)) {
            return false;
        }
        match (r.max_price, tools.catalog.get(id)) {
            (Some(max), Some(item)) => item.price <= max,
            (_, item) => item.is_some(),
        }
    };
    let q = tools.embedder.embed(r.query)?;
    Ok(tools
        .index
        .search_where(&q, r.k, keep)?
        .into_iter()
        .map(|h| h.item_id)
        .collect())
}

/// Nearest neighbor of `selected` priced above `max`, searched among its
/// `k` nearest neighbors.
pub fn pick_candidate(
    tools: &Toolbox,
    selected: &str,
    max: f64,
    k: usize,
) -> Result<Option<String>, IndexError> {
    let hits = tools.index.item_search(selected, k)?;
    Ok(hits
        .into_iter()
        .find(|h| tools.catalog.get(&h.item_id).is_some_and(|i| i.price > max))
        .map(|h| h.item_id))
}

pub fn listing(items: &[&Item]) -> String {
    let lines: Vec<String> = items
        .iter()
        .enumerate()
        .map(|(n, i)| format!("{}. {} - {}", n + 1, mention(i), dollars(i.price)))
        .collect();
    format!("Here are some items that you might like:\n{}", lines.join("\n"))
}

pub const RELAX: &str =
    "I could not find anything that fits all of that within your price range. Could you relax one of your requirements?";

/// The prompt-side view of an item.
pub fn item_info(item: &Item) -> String {
    serde_json::json!({
        "id": item.id,
        "title": item.title,
        "price": dollars(item.price),
        "category": item.category_path.join(" > "),
        "average_rating": item.avg_rating,
        "rating_count": item.rating_count,
        "description": item.description,
        "features": item.features,
    })
    .to_string()
}
