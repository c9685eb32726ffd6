use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::embed::{normalize, EmbeddingProvider};
use super::kmeans::kmeans;
use super::partition::{cluster_count, probe_count, relevant_topics, EpsilonMode};
use super::IndexError;
use crate::matrix::{read_matrix, write_matrix, Matrix};
use crate::scalar::{dot, squared_l2, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IndexConfig {
    pub lambda: f64,
    pub l_min: usize,
    pub kmeans_iterations: usize,
    pub seed: u64,
}

impl Default for IndexConfig {
    fn default() -> Self {
        Self {
            lambda: 4.0,
            l_min: 8,
            kmeans_iterations: 25,
            seed: 42,
        }
    }
}

impl IndexConfig {
    fn validate(&self) -> Result<(), IndexError> {
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return Err(IndexError::InvalidConfig(format!("lambda = {}", self.lambda)));
        }
        if self.l_min == 0 {
            return Err(IndexError::InvalidConfig("l_min must be at least 1".into()));
        }
        Ok(())
    }
}

/// Inverted-file partition of one topic's active passages.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicPartition<T> {
    pub topic_id: Option<usize>,
    /// Passage rows in the index, ascending.
    pub members: Vec<usize>,
    pub centroids: Matrix<T>,
    /// Passage rows per centroid.
    pub lists: Vec<Vec<usize>>,
    pub n_probe: usize,
}

impl<T: Scalar> TopicPartition<T> {
    fn build(topic_id: Option<usize>, members: Vec<usize>, embeddings: &Matrix<T>, cfg: &IndexConfig) -> Self {
        let l = cluster_count(members.len(), cfg.lambda, cfg.l_min);
        let points: Vec<&[T]> = members.iter().map(|&r| embeddings.row(r)).collect();
        let seed = cfg.seed.wrapping_add(
            topic_id
                .map_or(u64::MAX, |k| k as u64)
                .wrapping_mul(0x9e37_79b9_7f4a_7c15),
        );
        let km = kmeans(&points, l, cfg.kmeans_iterations, seed);
        let mut lists = vec![Vec::new(); km.centroids.rows()];
        for (&row, &c) in members.iter().zip(&km.assignment) {
            lists[c].push(row);
        }
        Self {
            topic_id,
            n_probe: probe_count(km.centroids.rows()),
            members,
            centroids: km.centroids,
            lists,
        }
    }

    pub fn clusters(&self) -> usize {
        self.centroids.rows()
    }

    /// Centroid holding passage row `row`, if it is a member.
    pub fn assignment(&self, row: usize) -> Option<usize> {
        self.lists.iter().position(|l| l.contains(&row))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SearchMode {
    #[serde(rename = "TB-ENN")]
    TbEnn,
    #[serde(rename = "TB-ANN")]
    TbAnn,
    #[serde(rename = "ENN")]
    Enn,
    #[serde(rename = "ANN")]
    Ann,
}

impl SearchMode {
    pub const ALL: [SearchMode; 4] = [SearchMode::TbEnn, SearchMode::TbAnn, SearchMode::Enn, SearchMode::Ann];

    pub fn as_str(self) -> &'static str {
        match self {
            SearchMode::TbEnn => "TB-ENN",
            SearchMode::TbAnn => "TB-ANN",
            SearchMode::Enn => "ENN",
            SearchMode::Ann => "ANN",
        }
    }

    pub fn is_topic_based(self) -> bool {
        matches!(self, SearchMode::TbEnn | SearchMode::TbAnn)
    }

    pub fn is_approximate(self) -> bool {
        matches!(self, SearchMode::TbAnn | SearchMode::Ann)
    }
}

impl std::str::FromStr for SearchMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_uppercase().replace('_', "-");
        SearchMode::ALL
            .into_iter()
            .find(|m| m.as_str() == norm || m.as_str().replace('-', "") == norm)
            .ok_or_else(|| format!("unknown search mode {s:?}"))
    }
}

/// How many clusters approximate search probes per partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule", content = "n")]
pub enum ProbeRule {
    /// The partition's own 10% rule.
    Default,
    /// Every cluster, which makes approximate search exact.
    All,
    Fixed(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchParams {
    pub mode: SearchMode,
    pub weighted: bool,
    /// Passages returned.
    pub l: usize,
    /// Nearest neighbours kept per topic.
    pub h: usize,
    pub epsilon: EpsilonMode,
    pub probe: ProbeRule,
}

impl Default for SearchParams {
    fn default() -> Self {
        Self {
            mode: SearchMode::TbEnn,
            weighted: true,
            l: 5,
            h: 10,
            epsilon: EpsilonMode::Static(0.0),
            probe: ProbeRule::Default,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredPassage {
    pub passage_id: String,
    /// `alpha * similarity`.
    pub score: f64,
    pub similarity: f64,
    pub source_topic: Option<usize>,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub hits: Vec<ScoredPassage>,
    pub topics: Vec<usize>,
    /// Vector comparisons against centroids and passages.
    pub distance_evaluations: u64,
}

/// Passage embeddings of one comparison corpus partitioned by topic.
#[derive(Debug)]
pub struct TopicIndex<T> {
    config: IndexConfig,
    passage_ids: Vec<String>,
    row_of: HashMap<String, usize>,
    embeddings: Matrix<T>,
    partitions: Vec<Option<TopicPartition<T>>>,
    global: OnceLock<TopicPartition<T>>,
}

/// Builds one partition per topic whose active set (passages with `theta > 0`) is
/// non-empty. Embeddings are renormalized to unit length.
pub fn build_index<T: Scalar>(
    passage_ids: Vec<String>,
    mut embeddings: Matrix<T>,
    theta: &Matrix<f64>,
    config: IndexConfig,
) -> Result<TopicIndex<T>, IndexError> {
    config.validate()?;
    if passage_ids.len() != embeddings.rows() || theta.rows() != embeddings.rows() {
        return Err(IndexError::Shape(format!(
            "{} ids, {} embeddings, {} theta rows",
            passage_ids.len(),
            embeddings.rows(),
            theta.rows()
        )));
    }
    for (r, id) in passage_ids.iter().enumerate() {
        if !normalize(embeddings.row_mut(r)) {
            return Err(IndexError::ZeroVector(id.clone()));
        }
    }
    let k = theta.cols();
    let partitions: Vec<Option<TopicPartition<T>>> = (0..k)
        .into_par_iter()
        .map(|topic| {
            let members: Vec<usize> = (0..theta.rows()).filter(|&r| theta.get(r, topic) > 0.0).collect();
            (!members.is_empty()).then(|| TopicPartition::build(Some(topic), members, &embeddings, &config))
        })
        .collect();
    let row_of = passage_ids.iter().enumerate().map(|(i, id)| (id.clone(), i)).collect();
    Ok(TopicIndex {
        config,
        passage_ids,
        row_of,
        embeddings,
        partitions,
        global: OnceLock::new(),
    })
}

struct Candidate {
    row: usize,
    sim: f64,
}

fn by_sim_desc(a: &Candidate, b: &Candidate) -> std::cmp::Ordering {
    b.sim.total_cmp(&a.sim).then(a.row.cmp(&b.row))
}

impl<T: Scalar> TopicIndex<T> {
    pub fn config(&self) -> &IndexConfig {
        &self.config
    }

    pub fn len(&self) -> usize {
        self.passage_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.passage_ids.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.embeddings.cols()
    }

    pub fn topics(&self) -> usize {
        self.partitions.len()
    }

    pub fn passage_ids(&self) -> &[String] {
        &self.passage_ids
    }

    pub fn embedding(&self, passage_id: &str) -> Option<&[T]> {
        self.row_of.get(passage_id).map(|&r| self.embeddings.row(r))
    }

    pub fn partition(&self, topic: usize) -> Option<&TopicPartition<T>> {
        self.partitions.get(topic).and_then(Option::as_ref)
    }

    /// Whole-corpus partition for the plain approximate baseline, built on first use.
    pub fn global_partition(&self) -> &TopicPartition<T> {
        self.global
            .get_or_init(|| TopicPartition::build(None, (0..self.len()).collect(), &self.embeddings, &self.config))
    }

    fn exact(&self, q: &[T], rows: &[usize], h: usize, evals: &mut u64) -> Vec<Candidate> {
        let mut c: Vec<Candidate> = rows
            .iter()
            .map(|&row| Candidate {
                row,
                sim: dot(q, self.embeddings.row(row)).as_f64(),
            })
            .collect();
        *evals += rows.len() as u64;
        c.sort_by(by_sim_desc);
        c.truncate(h);
        c
    }

    fn approximate(
        &self,
        q: &[T],
        part: &TopicPartition<T>,
        rule: ProbeRule,
        h: usize,
        evals: &mut u64,
    ) -> Vec<Candidate> {
        let l = part.clusters();
        let n_probe = match rule {
            ProbeRule::Default => part.n_probe,
            ProbeRule::All => l,
            ProbeRule::Fixed(n) => n.clamp(1, l),
        };
        let mut order: Vec<(T, usize)> = part
            .centroids
            .iter_rows()
            .enumerate()
            .map(|(c, row)| (squared_l2(row, q), c))
            .collect();
        *evals += l as u64;
        order.sort_by(|a, b| {
            a.0.partial_cmp(&b.0)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.1.cmp(&b.1))
        });
        let rows: Vec<usize> = order[..n_probe]
            .iter()
            .flat_map(|&(_, c)| part.lists[c].iter().copied())
            .collect();
        self.exact(q, &rows, h, evals)
    }

    /// Top-`l` passages for a query vector and the anchor passage's topic weights.
    ///
    /// Topic-based modes search each relevant topic's partition, keep the best `h`
    /// per topic, score them `alpha * similarity` (alpha is the anchor weight on the
    /// topic when weighted, 1 otherwise) and keep each passage's best score.
    pub fn search(
        &self,
        query: &[T],
        theta_anchor: &[f64],
        params: &SearchParams,
    ) -> Result<SearchOutcome, IndexError> {
        if self.is_empty() {
            return Err(IndexError::EmptyIndex);
        }
        if params.l == 0 || params.l > params.h {
            return Err(IndexError::InvalidConfig(format!(
                "need 1 <= L <= H, got L = {}, H = {}",
                params.l, params.h
            )));
        }
        if query.len() != self.dimension() {
            return Err(IndexError::DimensionMismatch {
                expected: self.dimension(),
                found: query.len(),
            });
        }
        let mut q = query.to_vec();
        if !normalize(&mut q) {
            return Err(IndexError::ZeroVector("query".into()));
        }
        let mut evals = 0u64;

        if !params.mode.is_topic_based() {
            let cands = match params.mode {
                SearchMode::Enn => {
                    let rows: Vec<usize> = (0..self.len()).collect();
                    self.exact(&q, &rows, params.l, &mut evals)
                }
                _ => self.approximate(&q, self.global_partition(), params.probe, params.l, &mut evals),
            };
            let hits = cands
                .into_iter()
                .map(|c| ScoredPassage {
                    passage_id: self.passage_ids[c.row].clone(),
                    score: c.sim,
                    similarity: c.sim,
                    source_topic: None,
                    alpha: 1.0,
                })
                .collect();
            return Ok(SearchOutcome {
                hits,
                topics: Vec::new(),
                distance_evaluations: evals,
            });
        }

        if theta_anchor.len() != self.topics() {
            return Err(IndexError::Shape(format!(
                "anchor theta has {} topics, index has {}",
                theta_anchor.len(),
                self.topics()
            )));
        }
        let topics = relevant_topics(theta_anchor, params.epsilon);
        let mut best: HashMap<usize, ScoredPassage> = HashMap::new();
        for &k in &topics {
            let Some(part) = self.partition(k) else {
                continue;
            };
            let cands = match params.mode {
                SearchMode::TbEnn => self.exact(&q, &part.members, params.h, &mut evals),
                _ => self.approximate(&q, part, params.probe, params.h, &mut evals),
            };
            let alpha = if params.weighted { theta_anchor[k] } else { 1.0 };
            for c in cands {
                let score = alpha * c.sim;
                let better = best.get(&c.row).is_none_or(|b| score > b.score);
                if better {
                    best.insert(
                        c.row,
                        ScoredPassage {
                            passage_id: self.passage_ids[c.row].clone(),
                            score,
                            similarity: c.sim,
                            source_topic: Some(k),
                            alpha,
                        },
                    );
                }
            }
        }
        let mut ranked: Vec<(usize, ScoredPassage)> = best.into_iter().collect();
        ranked.sort_by(|a, b| b.1.score.total_cmp(&a.1.score).then(a.0.cmp(&b.0)));
        ranked.truncate(params.l);
        Ok(SearchOutcome {
            hits: ranked.into_iter().map(|(_, s)| s).collect(),
            topics,
            distance_evaluations: evals,
        })
    }

    /// Embeds `text` with `provider` and searches with it.
    pub fn search_text(
        &self,
        provider: &dyn EmbeddingProvider<T>,
        text: &str,
        theta_anchor: &[f64],
        params: &SearchParams,
    ) -> Result<SearchOutcome, IndexError> {
        let v = provider
            .embed(&[text])?
            .pop()
            .ok_or_else(|| IndexError::Embedding("provider returned no vector".into()))?;
        self.search(&v, theta_anchor, params)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceSet {
    pub question_id: String,
    /// Unique passages with their best score, highest first.
    pub passages: Vec<ScoredPassage>,
    pub l_requested: usize,
    pub l_prime: usize,
}

/// Union of per-subquery results keeping each passage's best-scoring hit; ties in
/// score are ordered by passage id.
pub fn merge_evidence(question_id: &str, per_subquery: &[Vec<ScoredPassage>], l_requested: usize) -> EvidenceSet {
    let mut best: HashMap<&str, &ScoredPassage> = HashMap::new();
    for hit in per_subquery.iter().flatten() {
        let better = best.get(hit.passage_id.as_str()).is_none_or(|b| hit.score > b.score);
        if better {
            best.insert(&hit.passage_id, hit);
        }
    }
    let mut passages: Vec<ScoredPassage> = best.into_values().cloned().collect();
    passages.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| a.passage_id.cmp(&b.passage_id))
    });
    EvidenceSet {
        question_id: question_id.to_string(),
        l_prime: passages.len(),
        passages,
        l_requested,
    }
}

#[derive(Serialize, Deserialize)]
struct IndexMetadata {
    config: IndexConfig,
    topics: usize,
    /// Active passage rows per topic.
    members: Vec<Vec<usize>>,
}

/// Writes `embeddings_<name>.f32` and `index_<name>.json` into `dir`. Partitions are
/// rebuilt on load with the stored seed.
pub fn save_index<T: Scalar>(index: &TopicIndex<T>, dir: &Path, name: &str) -> Result<(), IndexError> {
    fs::create_dir_all(dir)?;
    let dims: Vec<String> = (0..index.dimension()).map(|d| d.to_string()).collect();
    write_matrix(
        &dir.join(format!("embeddings_{name}.f32")),
        &index.embeddings,
        &index.passage_ids,
        &dims,
    )?;
    let meta = IndexMetadata {
        config: index.config,
        topics: index.topics(),
        members: index
            .partitions
            .iter()
            .map(|p| p.as_ref().map(|p| p.members.clone()).unwrap_or_default())
            .collect(),
    };
    let json = serde_json::to_vec_pretty(&meta).map_err(|e| IndexError::Metadata(e.to_string()))?;
    fs::write(dir.join(format!("index_{name}.json")), json)?;
    Ok(())
}

pub fn load_index<T: Scalar>(dir: &Path, name: &str) -> Result<TopicIndex<T>, IndexError> {
    let raw = fs::read(dir.join(format!("index_{name}.json")))?;
    let meta: IndexMetadata = serde_json::from_slice(&raw).map_err(|e| IndexError::Metadata(e.to_string()))?;
    let (embeddings, sidecar) = read_matrix::<T>(&dir.join(format!("embeddings_{name}.f32")))?;
    let mut theta = Matrix::zeros(embeddings.rows(), meta.topics);
    for (k, rows) in meta.members.iter().enumerate() {
        for &r in rows {
            if r >= embeddings.rows() {
                return Err(IndexError::Metadata(format!("member row {r} out of range")));
            }
            theta.set(r, k, 1.0);
        }
    }
    build_index(sidecar.row_ids, embeddings, &theta, meta.config)
}
