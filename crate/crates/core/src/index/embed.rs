use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::IndexError;
use crate::scalar::Scalar;

/// Maps texts to unit-length vectors of a fixed dimension.
pub trait EmbeddingProvider<T: Scalar>: Send + Sync {
    fn provider_id(&self) -> &str;
    fn dimension(&self) -> usize;
    fn embed(&self, texts: &[&str]) -> Result<Vec<Vec<T>>, IndexError>;
}

/// Scales `v` to unit L2 norm; a zero vector is left untouched and reported.
pub fn normalize<T: Scalar>(v: &mut [T]) -> bool {
    let n = crate::scalar::norm(v);
    if !(n > T::zero()) || !n.is_finite() {
        return false;
    }
    v.iter_mut().for_each(|x| *x = *x / n);
    true
}

fn fnv1a(seed: u64, bytes: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64 ^ seed;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Deterministic signed feature hashing of lowercase words onto the unit sphere.
///
/// A glossary maps words before hashing, so translated vocabulary can share features.
#[derive(Debug, Clone)]
pub struct HashingEmbedder {
    dim: usize,
    seed: u64,
    glossary: BTreeMap<String, String>,
    id: String,
}

impl HashingEmbedder {
    pub fn new(dim: usize, seed: u64) -> Self {
        Self {
            dim: dim.max(1),
            seed,
            glossary: BTreeMap::new(),
            id: format!("hashing-{dim}-{seed}"),
        }
    }

    pub fn with_glossary(mut self, glossary: BTreeMap<String, String>) -> Self {
        self.glossary = glossary;
        self
    }

    pub fn embed_one<T: Scalar>(&self, text: &str) -> Result<Vec<T>, IndexError> {
        let mut v = vec![0.0f64; self.dim];
        for word in text.split(|c: char| !c.is_alphanumeric()).filter(|w| !w.is_empty()) {
            let lower = word.to_lowercase();
            let w = self.glossary.get(&lower).unwrap_or(&lower);
            let h = fnv1a(self.seed, w.as_bytes());
            let sign = if h >> 63 == 1 { -1.0 } else { 1.0 };
            v[(h % self.dim as u64) as usize] += sign;
        }
        let mut out: Vec<T> = v.into_iter().map(T::of).collect();
        if normalize(&mut out) {
            Ok(out)
        } else {
            Err(IndexError::ZeroVector(format!("text {text:?}")))
        }
    }
}

impl<T: Scalar> EmbeddingProvider<T> for HashingEmbedder {
    fn provider_id(&self) -> &str {
        &self.id
    }
    fn dimension(&self) -> usize {
        self.dim
    }
    fn embed(&self, texts: &[&str]) -> Result<Vec<Vec<T>>, IndexError> {
        texts.iter().map(|t| self.embed_one(t)).collect()
    }
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    texts: &'a [&'a str],
}

#[derive(Deserialize)]
struct EmbedResponse {
    vectors: Vec<Vec<f64>>,
}

/// Client for an endpoint accepting `{"texts": [...]}` and returning `{"vectors": [[...]]}`.
pub struct HttpEmbedder {
    url: String,
    dim: usize,
    id: String,
    client: reqwest::blocking::Client,
}

impl HttpEmbedder {
    pub fn new(url: impl Into<String>, dim: usize) -> Self {
        let url = url.into();
        Self {
            id: format!("http:{url}"),
            url,
            dim,
            client: reqwest::blocking::Client::new(),
        }
    }
}

impl<T: Scalar> EmbeddingProvider<T> for HttpEmbedder {
    fn provider_id(&self) -> &str {
        &self.id
    }
    fn dimension(&self) -> usize {
        self.dim
    }
    fn embed(&self, texts: &[&str]) -> Result<Vec<Vec<T>>, IndexError> {
        let err = |e: reqwest::Error| IndexError::Embedding(e.to_string());
        let resp: EmbedResponse = self
            .client
            .post(&self.url)
            .json(&EmbedRequest { texts })
            .send()
            .and_then(|r| r.error_for_status())
            .map_err(err)?
            .json()
            .map_err(err)?;
        if resp.vectors.len() != texts.len() {
            return Err(IndexError::Embedding(format!(
                "{} vectors for {} texts",
                resp.vectors.len(),
                texts.len()
            )));
        }
        resp.vectors
            .into_iter()
            .zip(texts)
            .map(|(v, t)| {
                if v.len() != self.dim {
                    return Err(IndexError::DimensionMismatch {
                        expected: self.dim,
                        found: v.len(),
                    });
                }
                let mut out: Vec<T> = v.into_iter().map(T::of).collect();
                if normalize(&mut out) {
                    Ok(out)
                } else {
                    Err(IndexError::ZeroVector(format!("text {t:?}")))
                }
            })
            .collect()
    }
}
