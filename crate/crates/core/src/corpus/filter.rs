//! Topic-based passage relevance scoring: a discriminative re-ranking of the
//! word-topic matrix and a per-passage score that penalizes vocabulary the
//! passage does not use.

use std::collections::BTreeSet;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{CorpusError, Vocabulary};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterScore<T> {
    pub passage_id: String,
    pub xi: T,
    pub retained_word_count: usize,
    pub excluded_word_count: usize,
}

fn row_sum_tolerance<T: Scalar>(cols: usize) -> T {
    T::of(1e-6).max(T::epsilon() * T::of(4.0 * cols as f64))
}

/// Adds the `eta` prior to every entry and renormalizes rows.
pub fn smooth_rows<T: Scalar>(beta: &Matrix<T>, eta: T) -> Matrix<T> {
    let mut out = beta.clone();
    for r in 0..out.rows() {
        let row = out.row_mut(r);
        let total: T = row.iter().copied().sum::<T>() + eta * T::of(row.len() as f64);
        for v in row.iter_mut() {
            *v = (*v + eta) / total;
        }
    }
    out
}

/// `out[k][v] = beta[k][v] * ln(beta[k][v] / geometric_mean_j(beta[j][v]))`.
///
/// Words spread evenly across topics score near zero; topic-specific words score high.
pub fn ds_rerank<T: Scalar>(beta: &Matrix<T>) -> Result<Matrix<T>, CorpusError> {
    let (k, v) = (beta.rows(), beta.cols());
    if k == 0 || v == 0 {
        return Err(CorpusError::DegenerateBeta("empty matrix".into()));
    }
    let tol = row_sum_tolerance::<T>(v);
    for (r, row) in beta.iter_rows().enumerate() {
        let s: T = row.iter().copied().sum();
        if (s - T::one()).abs() > tol {
            return Err(CorpusError::DegenerateBeta(format!("row {r} sums to {s}, expected 1")));
        }
        if let Some(c) = row.iter().position(|&x| !(x > T::zero())) {
            return Err(CorpusError::DegenerateBeta(format!(
                "entry ({r}, {c}) is not positive; smooth before re-ranking"
            )));
        }
    }
    // Log-ratios are taken against the first row so that columns with equal
    // entries cancel exactly instead of up to rounding.
    let inv_k = T::one() / T::of(k as f64);
    let shift: Vec<T> = beta.row(0).iter().map(|x| x.ln()).collect();
    let mut mean_rel = vec![T::zero(); v];
    for row in beta.iter_rows() {
        for ((acc, &x), &s) in mean_rel.iter_mut().zip(row).zip(&shift) {
            *acc = *acc + (x.ln() - s);
        }
    }
    for g in &mut mean_rel {
        *g = *g * inv_k;
    }
    let mut out = Matrix::zeros(k, v);
    for r in 0..k {
        for c in 0..v {
            let b = beta.get(r, c);
            out.set(r, c, b * ((b.ln() - shift[c]) - mean_rel[c]));
        }
    }
    Ok(out)
}

/// Scores a passage: the mean of its words' best re-ranked weight, divided by the
/// number of vocabulary words it does not contain.
///
/// Tokens are treated as a set and out-of-vocabulary tokens are ignored.
pub fn passage_score<T: Scalar, S: AsRef<str>>(
    passage_id: &str,
    tokens: &[S],
    beta_ds: &Matrix<T>,
    vocab: &Vocabulary,
) -> Result<FilterScore<T>, CorpusError> {
    let retained: BTreeSet<usize> = tokens.iter().filter_map(|t| vocab.id(t.as_ref())).collect();
    if retained.is_empty() {
        return Err(CorpusError::EmptyPassage(passage_id.to_string()));
    }
    let excluded = vocab.len() - retained.len();
    if excluded == 0 {
        return Err(CorpusError::FullCoverage(passage_id.to_string()));
    }
    let total: T = retained
        .iter()
        .map(|&w| {
            (0..beta_ds.rows())
                .map(|k| beta_ds.get(k, w))
                .fold(T::neg_infinity(), T::max)
        })
        .sum();
    let xi = total / T::of(excluded as f64) / T::of(retained.len() as f64);
    Ok(FilterScore {
        passage_id: passage_id.to_string(),
        xi,
        retained_word_count: retained.len(),
        excluded_word_count: excluded,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateSplit {
    /// Lowest-scoring passages, ascending by score.
    pub bad: Vec<String>,
    /// Seeded uniform sample from the remaining passages.
    pub good: Vec<String>,
}

/// Picks the bottom `bottom_percentile` percent of passages as low-relevance candidates
/// (optionally capped at `max_bad`) and a seeded random sample of `n_good` from the rest.
pub fn filter_candidates<T: Scalar>(
    scores: &[FilterScore<T>],
    bottom_percentile: f64,
    max_bad: Option<usize>,
    n_good: usize,
    seed: u64,
) -> Result<CandidateSplit, CorpusError> {
    if !(bottom_percentile > 0.0 && bottom_percentile < 100.0) {
        return Err(CorpusError::InvalidPercentile(bottom_percentile));
    }
    let n = scores.len();
    let mut n_bad = (n as f64 * bottom_percentile / 100.0).ceil() as usize;
    if let Some(cap) = max_bad {
        n_bad = n_bad.min(cap);
    }
    if n == 0 || n_bad + n_good > n {
        return Err(CorpusError::InsufficientPassages {
            available: n,
            requested: n_bad.max(1) + n_good,
        });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        scores[a]
            .xi
            .partial_cmp(&scores[b].xi)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| scores[a].passage_id.cmp(&scores[b].passage_id))
    });
    let bad: Vec<String> = order[..n_bad].iter().map(|&i| scores[i].passage_id.clone()).collect();
    let mut rest: Vec<usize> = order[n_bad..].to_vec();
    rest.sort_unstable();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked: Vec<usize> = sample(&mut rng, rest.len(), n_good)
        .into_iter()
        .map(|i| rest[i])
        .collect();
    picked.sort_unstable();
    let good = picked.into_iter().map(|i| scores[i].passage_id.clone()).collect();
    Ok(CandidateSplit { bad, good })
}
