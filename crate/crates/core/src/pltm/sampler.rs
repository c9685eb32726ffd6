//! Collapsed Gibbs sampler.
//!
//! The conditional for token i of language l in tuple d is
//! `(n_dk + alpha) * (n_kw + eta) / (n_k + V_l * eta)`, where the document-topic
//! counts are shared by every language side of the tuple.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::model::{PassageRef, PolyTopicModel};
use super::PltmError;
use crate::corpus::Vocabulary;
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub k: usize,
    /// Symmetric document-topic prior; `None` means `50 / K`.
    pub alpha: Option<f64>,
    pub eta: f64,
    pub iterations: usize,
    pub burn_in: usize,
    /// Iterations between collected samples after burn-in.
    pub sample_lag: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            k: 30,
            alpha: None,
            eta: 0.01,
            iterations: 1000,
            burn_in: 200,
            sample_lag: 10,
            seed: 42,
        }
    }
}

impl TrainConfig {
    pub fn with_k(k: usize) -> Self {
        Self { k, ..Self::default() }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(50.0 / self.k.max(1) as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenizedPassage {
    pub id: String,
    pub tokens: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSide {
    pub corpus_id: String,
    pub language: String,
    pub passages: Vec<TokenizedPassage>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingTuple {
    pub sides: Vec<TrainingSide>,
}

struct Token {
    word: u32,
    lang: u16,
    tuple: u32,
    passage: u32,
}

struct Sampler {
    k: usize,
    alpha: f64,
    eta: f64,
    tokens: Vec<Token>,
    z: Vec<u16>,
    n_dk: Vec<u32>,
    // per language: K x V word-topic counts and K topic totals
    n_kw: Vec<Vec<u32>>,
    n_k: Vec<Vec<u32>>,
    vocab_sizes: Vec<usize>,
    n_tuples: usize,
    n_passages: usize,
    probs: Vec<f64>,
}

impl Sampler {
    fn sweep(&mut self, rng: &mut ChaCha8Rng) {
        let k = self.k;
        for i in 0..self.tokens.len() {
            let t = &self.tokens[i];
            let (w, l, d) = (t.word as usize, t.lang as usize, t.tuple as usize);
            let v = self.vocab_sizes[l];
            let old = self.z[i] as usize;
            self.n_dk[d * k + old] -= 1;
            self.n_kw[l][old * v + w] -= 1;
            self.n_k[l][old] -= 1;

            let v_eta = v as f64 * self.eta;
            let mut total = 0.0;
            for topic in 0..k {
                let p = (self.n_dk[d * k + topic] as f64 + self.alpha)
                    * (self.n_kw[l][topic * v + w] as f64 + self.eta)
                    / (self.n_k[l][topic] as f64 + v_eta);
                total += p;
                self.probs[topic] = total;
            }
            let u = rng.random::<f64>() * total;
            let new = self.probs[..k].partition_point(|&c| c <= u).min(k - 1);

            self.z[i] = new as u16;
            self.n_dk[d * k + new] += 1;
            self.n_kw[l][new * v + w] += 1;
            self.n_k[l][new] += 1;
        }
    }

    fn beta(&self, l: usize) -> Matrix<f64> {
        let v = self.vocab_sizes[l];
        let mut m = Matrix::zeros(self.k, v);
        for topic in 0..self.k {
            let denom = self.n_k[l][topic] as f64 + v as f64 * self.eta;
            for w in 0..v {
                m.set(topic, w, (self.n_kw[l][topic * v + w] as f64 + self.eta) / denom);
            }
        }
        m
    }

    fn passage_counts(&self) -> Vec<u32> {
        let mut c = vec![0u32; self.n_passages * self.k];
        for (t, &z) in self.tokens.iter().zip(&self.z) {
            c[t.passage as usize * self.k + z as usize] += 1;
        }
        c
    }
}

struct Accumulator {
    beta: Vec<Matrix<f64>>,
    theta: Matrix<f64>,
    samples: usize,
}

impl Accumulator {
    fn collect(&mut self, s: &Sampler) {
        let k = s.k;
        for (l, acc) in self.beta.iter_mut().enumerate() {
            let b = s.beta(l);
            for r in 0..k {
                for (a, &x) in acc.row_mut(r).iter_mut().zip(b.row(r)) {
                    *a += x;
                }
            }
        }
        let counts = s.passage_counts();
        for p in 0..s.n_passages {
            let row = &counts[p * k..(p + 1) * k];
            let n: u32 = row.iter().sum();
            for (a, &c) in self.theta.row_mut(p).iter_mut().zip(row) {
                *a += if n == 0 { 1.0 / k as f64 } else { c as f64 / n as f64 };
            }
        }
        self.samples += 1;
    }
}

/// Read-only view of the sampler after an iteration, for invariant checks.
pub struct IterationState<'a> {
    iteration: usize,
    sampler: &'a Sampler,
    languages: &'a [String],
}

impl IterationState<'_> {
    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn assignments(&self) -> Vec<u16> {
        self.sampler.z.clone()
    }

    /// Recounts every table from the assignment vector and compares.
    pub fn check_conservation(&self) -> Result<(), String> {
        let s = self.sampler;
        let k = s.k;
        let mut n_dk = vec![0u32; s.n_tuples * k];
        let mut n_kw: Vec<Vec<u32>> = s.vocab_sizes.iter().map(|&v| vec![0; k * v]).collect();
        let mut n_k: Vec<Vec<u32>> = s.vocab_sizes.iter().map(|_| vec![0; k]).collect();
        let mut tuple_tokens = vec![0u32; s.n_tuples];
        for (t, &z) in s.tokens.iter().zip(&s.z) {
            let (l, z) = (t.lang as usize, z as usize);
            n_dk[t.tuple as usize * k + z] += 1;
            n_kw[l][z * s.vocab_sizes[l] + t.word as usize] += 1;
            n_k[l][z] += 1;
            tuple_tokens[t.tuple as usize] += 1;
        }
        if n_dk != s.n_dk || n_kw != s.n_kw || n_k != s.n_k {
            return Err(format!("count tables diverged at iteration {}", self.iteration));
        }
        for (d, (row, &n)) in s.n_dk.chunks(k).zip(&tuple_tokens).enumerate() {
            let sum: u32 = row.iter().sum();
            if sum != n {
                return Err(format!("tuple {d}: {sum} assignments for {n} tokens"));
            }
        }
        for (l, lang) in self.languages.iter().enumerate() {
            let v = s.vocab_sizes[l];
            for topic in 0..k {
                let row: u32 = s.n_kw[l][topic * v..(topic + 1) * v].iter().sum();
                if row != s.n_k[l][topic] {
                    return Err(format!("language {lang} topic {topic}: row sum {row} != total"));
                }
            }
        }
        Ok(())
    }

    /// Current point estimates; every row must be a distribution.
    pub fn check_normalization(&self, tol: f64) -> Result<(), String> {
        let s = self.sampler;
        for l in 0..self.languages.len() {
            let b = s.beta(l);
            for (k, row) in b.iter_rows().enumerate() {
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > tol || row.iter().any(|&x| x < 0.0) {
                    return Err(format!("beta[{}] row {k} sums to {sum}", self.languages[l]));
                }
            }
        }
        let k = s.k;
        for d in 0..s.n_tuples {
            let n: f64 = s.n_dk[d * k..(d + 1) * k].iter().map(|&c| c as f64).sum();
            let sum: f64 = (0..k)
                .map(|t| (s.n_dk[d * k + t] as f64 + s.alpha) / (n + k as f64 * s.alpha))
                .sum();
            if (sum - 1.0).abs() > tol {
                return Err(format!("theta of tuple {d} sums to {sum}"));
            }
        }
        Ok(())
    }
}

pub fn train(tuples: &[TrainingTuple], cfg: &TrainConfig) -> Result<PolyTopicModel, PltmError> {
    train_with_observer(tuples, cfg, |_| {})
}

/// Trains a model, calling `observer` after every Gibbs sweep.
pub fn train_with_observer(
    tuples: &[TrainingTuple],
    cfg: &TrainConfig,
    mut observer: impl FnMut(&IterationState<'_>),
) -> Result<PolyTopicModel, PltmError> {
    let alpha = cfg.alpha();
    if cfg.k == 0 || cfg.k > u16::MAX as usize {
        return Err(PltmError::InvalidHyperparameter(format!("K = {}", cfg.k)));
    }
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(PltmError::InvalidHyperparameter(format!("alpha = {alpha}")));
    }
    if !(cfg.eta > 0.0) || !cfg.eta.is_finite() {
        return Err(PltmError::InvalidHyperparameter(format!("eta = {}", cfg.eta)));
    }
    if tuples.is_empty() {
        return Err(PltmError::EmptyCorpus);
    }

    // canonical visiting order: sides sorted by language within each tuple
    let ordered: Vec<Vec<&TrainingSide>> = tuples
        .iter()
        .map(|t| {
            let mut sides: Vec<&TrainingSide> = t.sides.iter().collect();
            sides.sort_by(|a, b| a.language.cmp(&b.language));
            sides
        })
        .collect();

    let mut by_lang: BTreeMap<&str, Vec<&String>> = BTreeMap::new();
    for (d, sides) in ordered.iter().enumerate() {
        for side in sides {
            let n: usize = side.passages.iter().map(|p| p.tokens.len()).sum();
            if n == 0 {
                return Err(PltmError::EmptySide {
                    tuple: d,
                    language: side.language.clone(),
                });
            }
            by_lang
                .entry(&side.language)
                .or_default()
                .extend(side.passages.iter().flat_map(|p| p.tokens.iter()));
        }
    }
    let languages: Vec<String> = by_lang.keys().map(|s| s.to_string()).collect();
    let vocabularies: Vec<Vocabulary> = by_lang
        .values()
        .map(|toks| Vocabulary::build(toks.iter().copied()))
        .collect();
    let vocab_sizes: Vec<usize> = vocabularies.iter().map(Vocabulary::len).collect();

    let mut tokens = Vec::new();
    let mut passages = Vec::new();
    for (d, sides) in ordered.iter().enumerate() {
        for side in sides {
            let l = languages.iter().position(|x| *x == side.language).unwrap();
            for p in &side.passages {
                let pi = passages.len() as u32;
                passages.push(PassageRef {
                    id: p.id.clone(),
                    corpus_id: side.corpus_id.clone(),
                    language: side.language.clone(),
                });
                for tok in &p.tokens {
                    tokens.push(Token {
                        word: vocabularies[l].id(tok).unwrap() as u32,
                        lang: l as u16,
                        tuple: d as u32,
                        passage: pi,
                    });
                }
            }
        }
    }
    if tokens.is_empty() {
        return Err(PltmError::EmptyCorpus);
    }

    let k = cfg.k;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut s = Sampler {
        k,
        alpha,
        eta: cfg.eta,
        z: Vec::with_capacity(tokens.len()),
        n_dk: vec![0; tuples.len() * k],
        n_kw: vocab_sizes.iter().map(|&v| vec![0; k * v]).collect(),
        n_k: vocab_sizes.iter().map(|_| vec![0; k]).collect(),
        vocab_sizes: vocab_sizes.clone(),
        n_tuples: tuples.len(),
        n_passages: passages.len(),
        probs: vec![0.0; k],
        tokens,
    };
    for t in &s.tokens {
        let z = rng.random_range(0..k);
        s.z.push(z as u16);
        s.n_dk[t.tuple as usize * k + z] += 1;
        s.n_kw[t.lang as usize][z * vocab_sizes[t.lang as usize] + t.word as usize] += 1;
        s.n_k[t.lang as usize][z] += 1;
    }

    let lag = cfg.sample_lag.max(1);
    let mut acc = Accumulator {
        beta: vocab_sizes.iter().map(|&v| Matrix::zeros(k, v)).collect(),
        theta: Matrix::zeros(passages.len(), k),
        samples: 0,
    };
    for it in 1..=cfg.iterations {
        s.sweep(&mut rng);
        observer(&IterationState {
            iteration: it,
            sampler: &s,
            languages: &languages,
        });
        if it > cfg.burn_in && (it - cfg.burn_in).is_multiple_of(lag) {
            acc.collect(&s);
        }
    }
    if acc.samples == 0 {
        acc.collect(&s);
    }
    let Accumulator {
        beta: beta_acc,
        theta: mut theta_acc,
        samples,
    } = acc;

    let inv = 1.0 / samples as f64;
    let mut beta = BTreeMap::new();
    for (l, mut acc) in beta_acc.into_iter().enumerate() {
        for r in 0..k {
            let row = acc.row_mut(r);
            row.iter_mut().for_each(|x| *x *= inv);
            let sum: f64 = row.iter().sum();
            row.iter_mut().for_each(|x| *x /= sum);
        }
        beta.insert(languages[l].clone(), acc);
    }
    for p in 0..theta_acc.rows() {
        let row = theta_acc.row_mut(p);
        let sum: f64 = row.iter().sum();
        row.iter_mut().for_each(|x| *x /= sum);
    }
    let passage_index = PolyTopicModel::index_passages(&passages);
    Ok(PolyTopicModel {
        k,
        alpha,
        eta: cfg.eta,
        seed: cfg.seed,
        iterations: cfg.iterations,
        burn_in: cfg.burn_in,
        vocabularies: languages.into_iter().zip(vocabularies).collect(),
        beta,
        passages,
        theta: theta_acc,
        passage_index,
    })
}

/// Topic proportions for unseen text under the model's fixed word-topic estimates.
///
/// Out-of-vocabulary tokens are ignored; a passage with no known tokens gets the
/// uniform prior mean.
pub fn infer_theta<S: AsRef<str>>(
    model: &PolyTopicModel,
    language: &str,
    tokens: &[S],
    iterations: usize,
    seed: u64,
) -> Result<Vec<f64>, PltmError> {
    let vocab = model
        .vocabularies
        .get(language)
        .ok_or_else(|| PltmError::UnknownLanguage(language.to_string()))?;
    let beta = &model.beta[language];
    let k = model.k;
    let words: Vec<usize> = tokens.iter().filter_map(|t| vocab.id(t.as_ref())).collect();
    if words.is_empty() {
        return Ok(vec![1.0 / k as f64; k]);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut z: Vec<usize> = words.iter().map(|_| rng.random_range(0..k)).collect();
    let mut n_k = vec![0u32; k];
    z.iter().for_each(|&t| n_k[t] += 1);
    let mut probs = vec![0.0; k];
    let iterations = iterations.max(2);
    let burn_in = iterations / 2;
    let mut acc = vec![0.0; k];
    let mut samples = 0usize;
    for it in 1..=iterations {
        for (i, &w) in words.iter().enumerate() {
            n_k[z[i]] -= 1;
            let mut total = 0.0;
            for t in 0..k {
                total += (n_k[t] as f64 + model.alpha) * beta.get(t, w);
                probs[t] = total;
            }
            let u = rng.random::<f64>() * total;
            let new = probs.partition_point(|&c| c <= u).min(k - 1);
            z[i] = new;
            n_k[new] += 1;
        }
        if it > burn_in {
            let n = words.len() as f64;
            acc.iter_mut().zip(&n_k).for_each(|(a, &c)| *a += c as f64 / n);
            samples += 1;
        }
    }
    acc.iter_mut().for_each(|a| *a /= samples as f64);
    Ok(acc)
}
