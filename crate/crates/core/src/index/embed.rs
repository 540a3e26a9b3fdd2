use std::thread;
use std::time::Duration;

use serde_json::json;

use super::{IndexError, Vector};
use crate::text;

/// Turns text into a fixed-dimension dense vector.
pub trait Embedder: Send + Sync {
    fn dim(&self) -> usize;
    fn embed(&self, text: &str) -> Result<Vector, IndexError>;
}

/// Deterministic bag-of-words featurizer: each lowercased token is hashed
/// (FNV-1a) into one of `dim` buckets, counts are L2-normalized.
#[derive(Debug, Clone)]
pub struct HashEmbedder {
    dim: usize,
}

impl HashEmbedder {
    pub const DEFAULT_DIM: usize = 256;

    pub fn new(dim: usize) -> Self {
        assert!(dim > 0);
        Self { dim }
    }
}

impl Default for HashEmbedder {
    fn default() -> Self {
        Self::new(Self::DEFAULT_DIM)
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

impl Embedder for HashEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, input: &str) -> Result<Vector, IndexError> {
        if input.trim().is_empty() {
            return Err(IndexError::EmptyText);
        }
        let mut v = vec![0.0f64; self.dim];
        for tok in text::tokens(input) {
            v[(fnv1a(tok.as_bytes()) % self.dim as u64) as usize] += 1.0;
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
        }
        Vector::new(v)
    }
}

/// Embeddings from an HTTP endpoint speaking the common
/// `POST {base}/embeddings {model, input}` → `data[0].embedding` shape.
pub struct HttpEmbedder {
    base_url: String,
    model: String,
    api_key: Option<String>,
    dim: usize,
    agent: ureq::Agent,
}

impl HttpEmbedder {
    pub const ATTEMPTS: usize = 3;

    pub fn new(base_url: &str, model: &str, api_key: Option<String>, dim: usize) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(60)))
            .build()
            .into();
        Self {
            base_url: base_url.trim_end_matches('/').to_string(),
            model: model.to_string(),
            api_key,
            dim,
            agent,
        }
    }

    fn request(&self, input: &str) -> Result<Vec<f64>, String> {
        let mut req = self.agent.post(format!("{}/embeddings", self.base_url));
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", format!("Bearer {key}"));
        }
        let mut resp = req
            .send_json(json!({ "model": self.model, "input": input }))
            .map_err(|e| e.to_string())?;
        let body: serde_json::Value = resp.body_mut().read_json().map_err(|e| e.to_string())?;
        body["data"][0]["embedding"]
            .as_array()
            .ok_or_else(|| "response lacks data[0].embedding".to_string())?
            .iter()
            .map(|x| x.as_f64().ok_or_else(|| "non-numeric embedding".to_string()))
            .collect()
    }
}

impl Embedder for HttpEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, input: &str) -> Result<Vector, IndexError> {
        if input.trim().is_empty() {
            return Err(IndexError::EmptyText);
        }
        let mut last = String::new();
        for attempt in 0..Self::ATTEMPTS {
            if attempt > 0 {
                thread::sleep(Duration::from_millis(200 << attempt));
            }
            match self.request(input) {
                Ok(values) if values.len() == self.dim => return Vector::new(values),
                Ok(values) => {
                    return Err(IndexError::DimMismatch {
                        expected: self.dim,
                        found: values.len(),
                    })
                }
                Err(e) => last = e,
            }
        }
        Err(IndexError::Provider {
            attempts: Self::ATTEMPTS,
            message: last,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_text_same_vector() {
        let e = HashEmbedder::default();
        let a = e.embed("aaa").unwrap();
        assert_eq!(a, e.embed("aaa").unwrap());
        assert_eq!(a.squared_distance(&e.embed("aaa").unwrap()), 0.0);
        assert_eq!(a.dim(), 256);
    }

    #[test]
    fn unit_norm_and_case_insensitive() {
        let e = HashEmbedder::default();
        let v = e.embed("Soft Cotton shirt").unwrap();
        let norm: f64 = v.values().iter().map(|x| x * x).sum();
        assert!((norm - 1.0).abs() < 1e-12);
        assert_eq!(v, e.embed("soft cotton SHIRT").unwrap());
    }

    #[test]
    fn empty_text_rejected() {
        assert!(matches!(HashEmbedder::default().embed("  "), Err(IndexError::EmptyText)));
    }

    #[test]
    fn unreachable_provider_fails_after_retries() {
        let e = HttpEmbedder::new("http://127.0.0.1:9", "m", None, 4);
        match e.embed("hello") {
            Err(IndexError::Provider { attempts, .. }) => assert_eq!(attempts, 3),
            other => panic!("{other:?}"),
        }
    }
}
