//! NPMI topic coherence over passage-level co-occurrence, and the K sweep built on it.

use std::collections::{BTreeMap, HashMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sampler::{train, TrainConfig, TrainingTuple};
use super::{PltmError, PolyTopicModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceReport {
    pub language: String,
    pub top_n: usize,
    pub per_topic: Vec<f64>,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub k: usize,
    /// Mean NPMI over topics, averaged over languages.
    pub mean_npmi: f64,
    pub per_language: BTreeMap<String, f64>,
}

/// NPMI from passage counts: `n_i`, `n_j` passages containing each word, `n_ij`
/// containing both, out of `n`.
///
/// Words that never co-occur score -1 and words present in every passage score 1,
/// the limits of the normalized measure as the smoothing constant goes to zero.
pub fn npmi_pair(n_i: usize, n_j: usize, n_ij: usize, n: usize) -> f64 {
    if n == 0 || n_ij == 0 {
        return -1.0;
    }
    if n_ij == n {
        return 1.0;
    }
    let n = n as f64;
    let p_ij = n_ij as f64 / n;
    let pmi = (p_ij / ((n_i as f64 / n) * (n_j as f64 / n))).ln();
    pmi / -p_ij.ln()
}

/// Per-topic mean pairwise NPMI of the `top_n` highest-probability words of
/// `language`, counted over `reference` passages.
pub fn npmi_coherence<S: AsRef<str>>(
    model: &PolyTopicModel,
    language: &str,
    reference: &[Vec<S>],
    top_n: usize,
) -> Result<CoherenceReport, PltmError> {
    if top_n < 2 {
        return Err(PltmError::InvalidHyperparameter(format!("top_n = {top_n}")));
    }
    let beta = model
        .beta
        .get(language)
        .ok_or_else(|| PltmError::UnknownLanguage(language.to_string()))?;
    let vocab = &model.vocabularies[language];
    let mut tops = Vec::with_capacity(model.k);
    for k in 0..model.k {
        if vocab.len() < top_n {
            return Err(PltmError::InsufficientVocabulary { topic: k, top_n });
        }
        let row = beta.row(k);
        let mut ids: Vec<usize> = (0..row.len()).collect();
        ids.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
        ids.truncate(top_n);
        tops.push(ids);
    }

    let wanted: HashSet<usize> = tops.iter().flatten().copied().collect();
    let mut doc_sets: HashMap<usize, Vec<u32>> = HashMap::new();
    for (d, passage) in reference.iter().enumerate() {
        let present: HashSet<usize> = passage
            .iter()
            .filter_map(|t| vocab.id(t.as_ref()))
            .filter(|w| wanted.contains(w))
            .collect();
        for w in present {
            doc_sets.entry(w).or_default().push(d as u32);
        }
    }
    let n = reference.len();
    let empty = Vec::new();
    let docs = |w: usize| doc_sets.get(&w).unwrap_or(&empty);

    let per_topic: Vec<f64> = tops
        .iter()
        .map(|ids| {
            let mut total = 0.0;
            let mut pairs = 0usize;
            for a in 0..ids.len() {
                for b in a + 1..ids.len() {
                    let (da, db) = (docs(ids[a]), docs(ids[b]));
                    total += npmi_pair(da.len(), db.len(), sorted_intersection(da, db), n);
                    pairs += 1;
                }
            }
            total / pairs as f64
        })
        .collect();
    let mean = per_topic.iter().sum::<f64>() / per_topic.len() as f64;
    Ok(CoherenceReport {
        language: language.to_string(),
        top_n,
        per_topic,
        mean,
    })
}

fn sorted_intersection(a: &[u32], b: &[u32]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

/// Trains one model per K (in parallel, same seed) and scores each against the
/// training passages. Rows come back sorted by K.
pub fn sweep_k(
    tuples: &[TrainingTuple],
    k_values: &[usize],
    base: &TrainConfig,
    top_n: usize,
) -> Result<Vec<SweepRow>, PltmError> {
    if k_values.is_empty() {
        return Err(PltmError::EmptyRange);
    }
    let mut reference: BTreeMap<&str, Vec<&[String]>> = BTreeMap::new();
    for side in tuples.iter().flat_map(|t| &t.sides) {
        let entry = reference.entry(side.language.as_str()).or_default();
        entry.extend(side.passages.iter().map(|p| p.tokens.as_slice()));
    }
    let mut ks = k_values.to_vec();
    ks.sort_unstable();
    ks.dedup();
    ks.par_iter()
        .map(|&k| {
            let cfg = TrainConfig {
                k,
                alpha: base.alpha,
                ..base.clone()
            };
            let model = train(tuples, &cfg)?;
            let mut per_language = BTreeMap::new();
            for (lang, passages) in &reference {
                let owned: Vec<&[String]> = passages.clone();
                let report = npmi_coherence_slices(&model, lang, &owned, top_n)?;
                per_language.insert(lang.to_string(), report.mean);
            }
            let mean_npmi = per_language.values().sum::<f64>() / per_language.len() as f64;
            Ok(SweepRow {
                k,
                mean_npmi,
                per_language,
            })
        })
        .collect()
}

fn npmi_coherence_slices(
    model: &PolyTopicModel,
    language: &str,
    reference: &[&[String]],
    top_n: usize,
) -> Result<CoherenceReport, PltmError> {
    let owned: Vec<Vec<&str>> = reference
        .iter()
        .map(|p| p.iter().map(String::as_str).collect())
        .collect();
    npmi_coherence(model, language, &owned, top_n)
}
