use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::corpus::Vocabulary;
use crate::matrix::Matrix;

/// A trained polylingual topic model.
///
/// `beta[lang]` is K x V(lang); `theta` has one row per training passage.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyTopicModel {
    pub k: usize,
    pub alpha: f64,
    pub eta: f64,
    pub seed: u64,
    pub iterations: usize,
    pub burn_in: usize,
    pub vocabularies: BTreeMap<String, Vocabulary>,
    pub beta: BTreeMap<String, Matrix<f64>>,
    pub passages: Vec<PassageRef>,
    pub theta: Matrix<f64>,
    pub(crate) passage_index: HashMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PassageRef {
    pub id: String,
    pub corpus_id: String,
    pub language: String,
}

impl PolyTopicModel {
    pub(crate) fn index_passages(passages: &[PassageRef]) -> HashMap<String, usize> {
        passages.iter().enumerate().map(|(i, p)| (p.id.clone(), i)).collect()
    }

    pub fn languages(&self) -> impl Iterator<Item = &str> {
        self.vocabularies.keys().map(String::as_str)
    }

    pub fn theta_of(&self, passage_id: &str) -> Option<&[f64]> {
        self.passage_index.get(passage_id).map(|&i| self.theta.row(i))
    }

    /// θ with entries below `min_weight` zeroed and rows renormalized. The dominant
    /// topic always survives, so rows never become empty.
    pub fn sparse_theta(&self, passage_id: &str, min_weight: f64) -> Option<Vec<f64>> {
        self.theta_of(passage_id).map(|t| sparsify(t, min_weight))
    }

    pub fn passages_of_corpus<'a>(&'a self, corpus_id: &'a str) -> impl Iterator<Item = &'a PassageRef> {
        self.passages.iter().filter(move |p| p.corpus_id == corpus_id)
    }
}

pub(crate) fn sparsify(theta: &[f64], min_weight: f64) -> Vec<f64> {
    let top = dominant_topic(theta);
    let mut out: Vec<f64> = theta
        .iter()
        .enumerate()
        .map(|(k, &v)| if v >= min_weight || k == top { v } else { 0.0 })
        .collect();
    let s: f64 = out.iter().sum();
    if s > 0.0 {
        out.iter_mut().for_each(|v| *v /= s);
    }
    out
}

/// Index of the largest weight; ties go to the lowest index.
pub fn dominant_topic(theta: &[f64]) -> usize {
    let mut best = 0;
    for (k, &v) in theta.iter().enumerate() {
        if v > theta[best] {
            best = k;
        }
    }
    best
}
