//! Dense item retrieval: embedding, exact nearest-neighbor search in
//! query-based and item-based modes, and budget partitioning of results.

mod embed;
mod snapshot;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::catalog::{Catalog, Item, PriceRange};

pub use embed::{Embedder, HashEmbedder, HttpEmbedder};
pub use snapshot::{read_index, write_index, INDEX_FORMAT, INDEX_VERSION};

#[derive(Debug, thiserror::Error)]
pub enum IndexError {
    #[error("cannot embed empty text")]
    EmptyText,
    #[error("vector contains non-finite values")]
    NonFinite,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },
    #[error("duplicate id in index: {0}")]
    DuplicateId(String),
    #[error("id not in index: {0}")]
    NotFound(String),
    #[error("index is empty")]
    EmptyIndex,
    #[error("k must be at least 1")]
    ZeroK,
    #[error("embedding provider failed after {attempts} attempts: {message}")]
    Provider { attempts: usize, message: String },
    #[error("index snapshot: {0}")]
    Snapshot(String),
}

impl IndexError {
    pub fn is_retryable(&self) -> bool {
        matches!(self, IndexError::Provider { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn new(values: Vec<f64>) -> Result<Self, IndexError> {
        if values.is_empty() {
            return Err(IndexError::DimMismatch {
                expected: 1,
                found: 0,
            });
        }
        if values.iter().any(|x| !x.is_finite()) {
            return Err(IndexError::NonFinite);
        }
        Ok(Self(values))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn squared_distance(&self, other: &Vector) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }
}

/// One retrieved item; `score` is the negated squared distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hit {
    pub item_id: String,
    pub score: f64,
}

/// Ranked hits: scores non-increasing, ties by ascending id.
pub type RetrievalResult = Vec<Hit>;

/// The text an item is embedded from: `title | A>B | description`.
pub fn item_text(item: &Item) -> String {
    format!(
        "{} | {} | {}",
        item.title,
        item.category_path.join(">"),
        item.description
    )
}

/// Exact nearest-neighbor index over a fixed set of vectors.
#[derive(Debug, Clone)]
pub struct VectorIndex {
    dim: usize,
    ids: Vec<String>,
    vectors: Vec<Vector>,
    pos: HashMap<String, usize>,
}

impl VectorIndex {
    pub fn build(
        entries: impl IntoIterator<Item = (String, Vector)>,
    ) -> Result<Self, IndexError> {
        let mut ids = Vec::new();
        let mut vectors: Vec<Vector> = Vec::new();
        let mut pos = HashMap::new();
        for (id, v) in entries {
            if let Some(first) = vectors.first() {
                if first.dim() != v.dim() {
                    return Err(IndexError::DimMismatch {
                        expected: first.dim(),
                        found: v.dim(),
                    });
                }
            }
            if pos.insert(id.clone(), ids.len()).is_some() {
                return Err(IndexError::DuplicateId(id));
            }
            ids.push(id);
            vectors.push(v);
        }
        let dim = vectors.first().map_or(0, Vector::dim);
        Ok(Self {
            dim,
            ids,
            vectors,
            pos,
        })
    }

    /// Embeds every catalog item with [`item_text`].
    pub fn from_catalog(catalog: &Catalog, embedder: &dyn Embedder) -> Result<Self, IndexError> {
        let entries: Result<Vec<_>, _> = catalog
            .items()
            .iter()
            .map(|item| Ok((item.id.clone(), embedder.embed(&item_text(item))?)))
            .collect();
        Self::build(entries?)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.pos.contains_key(id)
    }

    pub fn vector(&self, id: &str) -> Option<&Vector> {
        self.pos.get(id).map(|&i| &self.vectors[i])
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &Vector)> {
        self.ids.iter().map(String::as_str).zip(&self.vectors)
    }

    /// Full scan over the entries accepted by `keep`, returning the `k`
    /// nearest by squared Euclidean distance.
    pub fn search_where(
        &self,
        query: &Vector,
        k: usize,
        keep: impl Fn(&str) -> bool,
    ) -> Result<RetrievalResult, IndexError> {
        if k == 0 {
            return Err(IndexError::ZeroK);
        }
        if self.is_empty() {
            return Err(IndexError::EmptyIndex);
        }
        if query.dim() != self.dim {
            return Err(IndexError::DimMismatch {
                expected: self.dim,
                found: query.dim(),
            });
        }
        let mut scored: Vec<(f64, &str)> = self
            .entries()
            .filter(|(id, _)| keep(id))
            .map(|(id, v)| (query.squared_distance(v), id))
            .collect();
        scored.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(b.1)));
        scored.truncate(k);
        Ok(scored
            .into_iter()
            .map(|(d, id)| Hit {
                item_id: id.to_string(),
                score: -d,
            })
            .collect())
    }

    pub fn search_vector(&self, query: &Vector, k: usize) -> Result<RetrievalResult, IndexError> {
        self.search_where(query, k, |_| true)
    }

    /// Query-based retrieval: embed free text, return the `k` nearest items.
    pub fn query_search(
        &self,
        embedder: &dyn Embedder,
        query_text: &str,
        k: usize,
    ) -> Result<RetrievalResult, IndexError> {
        if self.is_empty() {
            return Err(IndexError::EmptyIndex);
        }
        self.search_vector(&embedder.embed(query_text)?, k)
    }

    /// Item-based retrieval: the `k` nearest neighbors of an indexed item,
    /// excluding the item itself.
    pub fn item_search(&self, ref_item_id: &str, k: usize) -> Result<RetrievalResult, IndexError> {
        let query = self
            .vector(ref_item_id)
            .ok_or_else(|| IndexError::NotFound(ref_item_id.to_string()))?;
        self.search_where(query, k, |id| id != ref_item_id)
    }
}

/// Splits ranked hits into affordable (`price <= max`) and over-budget ones,
/// each keeping the input order.
pub fn partition_by_budget(
    results: &[Hit],
    budget: &PriceRange,
    catalog: &Catalog,
) -> Result<(Vec<Hit>, Vec<Hit>), IndexError> {
    let mut inside = Vec::new();
    let mut outside = Vec::new();
    for hit in results {
        let item = catalog
            .get(&hit.item_id)
            .ok_or_else(|| IndexError::NotFound(hit.item_id.clone()))?;
        if budget.is_in_budget(item.price) {
            inside.push(hit.clone());
        } else {
            outside.push(hit.clone());
        }
    }
    Ok((inside, outside))
}
