//! Retrieval evaluation over a project's questions: candidate pooling across search
//! configurations, LLM relevance judgments as gold, and a timed benchmark.

use std::collections::{BTreeSet, HashMap, HashSet};

use mind_core::eval::{judge_gold, GoldJudgment};
use mind_core::index::{benchmark, BenchQuery, BenchRow, IndexError, SearchMode, SearchParams};
use mind_core::llm::{ChatProvider, QuestionStatus};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ServiceError};
use crate::pipeline::{load_passages, load_questions, load_topic_index, load_trained};
use crate::project::Project;
use crate::providers::provider_set;
use crate::stage::Stage;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetrievalEvalOptions {
    /// Seeded sample of active questions; `None` uses all.
    pub max_questions: Option<usize>,
    pub repetitions: usize,
    pub seed: u64,
}

impl Default for RetrievalEvalOptions {
    fn default() -> Self {
        Self {
            max_questions: Some(50),
            repetitions: 3,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalEvaluation {
    /// Questions with at least one gold passage; only these are scored.
    pub questions: usize,
    pub judged_without_gold: usize,
    pub gold: Vec<GoldJudgment>,
    pub rows: Vec<BenchRow>,
}

/// Every search mode; the topic-based ones both with and without weighting.
pub fn search_configurations(base: &SearchParams) -> Vec<SearchParams> {
    let mut out = Vec::new();
    for mode in [SearchMode::Enn, SearchMode::Ann, SearchMode::TbEnn, SearchMode::TbAnn] {
        let topic_based = matches!(mode, SearchMode::TbEnn | SearchMode::TbAnn);
        let weights: &[bool] = if topic_based { &[false, true] } else { &[false] };
        for &weighted in weights {
            out.push(SearchParams {
                mode,
                weighted,
                ..*base
            });
        }
    }
    out
}

pub fn evaluate_retrieval(project: &Project, opts: &RetrievalEvalOptions) -> Result<RetrievalEvaluation> {
    project.require_done(Stage::Index)?;
    project.require_done(Stage::Questions)?;
    let fail = |e: &dyn std::fmt::Display| ServiceError::Invalid(e.to_string());
    let model = load_trained(project)?;
    let index = load_topic_index(project)?;
    let providers = provider_set(project)?;
    let texts: HashMap<String, String> = load_passages(project)?
        .into_iter()
        .map(|p| (p.passage.id, p.passage.text))
        .collect();
    let mut questions: Vec<_> = load_questions(project)?
        .into_iter()
        .filter(|q| q.status == QuestionStatus::Active)
        .collect();
    if let Some(max) = opts.max_questions {
        if max < questions.len() {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            let mut picked = sample(&mut rng, questions.len(), max).into_vec();
            picked.sort_unstable();
            questions = picked.into_iter().map(|i| questions[i].clone()).collect();
        }
    }
    let configs = search_configurations(&project.config().retrieval);
    let judges: [&dyn ChatProvider; 1] = [providers.chat.as_ref()];
    let mut gold_all = Vec::new();
    let mut bench = Vec::new();
    let mut without_gold = 0;
    for q in &questions {
        let Some(theta) = model.theta_of(&q.passage_id) else {
            continue;
        };
        let vector = match providers.embedder.embed(&[&q.text]) {
            Ok(mut v) => v.pop().unwrap_or_default(),
            Err(IndexError::ZeroVector(_)) => continue,
            Err(e) => return Err(fail(&e)),
        };
        let mut pool = BTreeSet::new();
        for params in &configs {
            let out = index.search(&vector, theta, params).map_err(|e| fail(&e))?;
            pool.extend(out.hits.into_iter().map(|h| h.passage_id));
        }
        let candidates: Vec<(String, String)> = pool
            .into_iter()
            .map(|id| {
                let text = texts.get(&id).cloned().unwrap_or_default();
                (id, text)
            })
            .collect();
        let judged = judge_gold(&q.id, &q.text, &candidates, &judges).map_err(|e| fail(&e))?;
        let gold: HashSet<String> = judged
            .iter()
            .filter(|j| j.is_gold)
            .map(|j| j.passage_id.clone())
            .collect();
        gold_all.extend(judged);
        if gold.is_empty() {
            without_gold += 1;
            continue;
        }
        bench.push(BenchQuery {
            id: q.id.clone(),
            vector,
            theta: theta.to_vec(),
            gold,
        });
    }
    if bench.len() < 2 {
        return Err(ServiceError::Invalid(format!(
            "retrieval evaluation needs at least 2 questions with gold passages, found {}",
            bench.len()
        )));
    }
    let rows = benchmark(&index, &bench, &configs, opts.repetitions, opts.seed).map_err(|e| fail(&e))?;
    Ok(RetrievalEvaluation {
        questions: bench.len(),
        judged_without_gold: without_gold,
        gold: gold_all,
        rows,
    })
}
