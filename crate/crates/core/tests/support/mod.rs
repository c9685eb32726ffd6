//! Independent reference implementations, data generators and criterion checks
//! shared by the integration tests and the acceptance suite.
#![allow(dead_code, clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

use std::collections::{BTreeMap, HashMap, HashSet};

use mind_core::corpus::{ds_rerank, passage_score, Vocabulary};
use mind_core::eval::{mmrr, ndcg, precision_at, recall_at};
use mind_core::index::{
    build_index, cluster_count, probe_count, relevant_topics, EpsilonMode, IndexConfig, ProbeRule, SearchMode,
    SearchParams, TopicIndex,
};
use mind_core::matrix::Matrix;
use mind_core::pltm::{
    dominant_topic, train, train_with_observer, TokenizedPassage, TrainConfig, TrainingSide, TrainingTuple,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Ok carries a short detail for reporting.
pub type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)*) => {
        if !$cond {
            return Err(format!($($fmt)*));
        }
    };
}

// ---------------------------------------------------------------- filter scores

/// `beta[k][v] * (ln beta[k][v] - mean_j ln beta[j][v])`, evaluated column by column.
pub fn ds_rerank_oracle(beta: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let k = beta.len();
    let v = beta[0].len();
    let mut out = vec![vec![0.0; v]; k];
    for w in 0..v {
        let logs: Vec<f64> = (0..k).map(|j| beta[j][w].ln()).collect();
        let mean = logs.iter().sum::<f64>() / k as f64;
        for t in 0..k {
            out[t][w] = beta[t][w] * (logs[t] - mean);
        }
    }
    out
}

/// Mean over distinct in-vocabulary tokens of their column maximum, divided by the
/// number of vocabulary words the passage lacks.
pub fn passage_score_oracle(tokens: &[String], ds: &[Vec<f64>], vocab: &[String]) -> f64 {
    let present: Vec<usize> = (0..vocab.len()).filter(|&i| tokens.contains(&vocab[i])).collect();
    let missing = vocab.len() - present.len();
    let mut sum = 0.0;
    for &w in &present {
        let mut m = f64::NEG_INFINITY;
        for row in ds {
            if row[w] > m {
                m = row[w];
            }
        }
        sum += m;
    }
    (sum / missing as f64) / present.len() as f64
}

fn random_beta(rng: &mut ChaCha8Rng, k: usize, v: usize) -> Vec<Vec<f64>> {
    (0..k)
        .map(|_| {
            let raw: Vec<f64> = (0..v).map(|_| rng.random::<f64>() + 1e-3).collect();
            let s: f64 = raw.iter().sum();
            raw.into_iter().map(|x| x / s).collect()
        })
        .collect()
}

pub fn check_filter_scores(instances: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for case in 0..instances {
        let k = rng.random_range(1..8);
        let v = rng.random_range(2..40);
        let beta = random_beta(&mut rng, k, v);
        let m = Matrix::from_rows(&beta).map_err(|e| e.to_string())?;
        let ds = ds_rerank(&m).map_err(|e| e.to_string())?;
        let oracle = ds_rerank_oracle(&beta);
        for t in 0..k {
            for w in 0..v {
                let (a, b) = (ds.get(t, w), oracle[t][w]);
                ensure!((a - b).abs() <= 1e-9, "case {case}: ds[{t}][{w}] = {a}, oracle {b}");
            }
        }
        let words: Vec<String> = (0..v).map(|i| format!("w{i}")).collect();
        let vocab = Vocabulary::from_words(words.clone());
        let n_tokens = rng.random_range(1..v);
        let mut tokens: Vec<String> = (0..n_tokens).map(|_| words[rng.random_range(0..v)].clone()).collect();
        tokens.push("out-of-vocabulary".into());
        let got = passage_score("p", &tokens, &ds, &vocab).map_err(|e| e.to_string())?;
        let want = passage_score_oracle(&tokens, &oracle, vocab.words());
        ensure!(
            (got.xi - want).abs() <= 1e-9,
            "case {case}: xi = {}, oracle {want}",
            got.xi
        );
    }
    // uniform word-topic weights carry no topic signal
    for (k, v) in [(1, 5), (3, 4), (10, 50)] {
        let uniform = Matrix::from_rows(&vec![vec![1.0 / v as f64; v]; k]).unwrap();
        let ds = ds_rerank(&uniform).map_err(|e| e.to_string())?;
        ensure!(
            ds.as_slice().iter().all(|&x| x == 0.0),
            "uniform beta K={k} V={v} not all zero"
        );
    }
    Ok(format!(
        "{instances} random instances within 1e-9; uniform weights give exact zeros"
    ))
}

// ---------------------------------------------------------------- metrics

pub fn recall_oracle(r: &[u32], gold: &HashSet<u32>, l: usize) -> f64 {
    let mut found = HashSet::new();
    for x in r.iter().take(l) {
        if gold.contains(x) {
            found.insert(*x);
        }
    }
    found.len() as f64 / gold.len() as f64
}

pub fn precision_oracle(r: &[u32], gold: &HashSet<u32>, l: usize) -> f64 {
    recall_oracle(r, gold, l) * gold.len() as f64 / l as f64
}

pub fn mmrr_oracle(r: &[u32], gold: &HashSet<u32>, l: usize) -> f64 {
    let mut total = 0.0;
    for g in gold {
        if let Some(pos) = r.iter().take(l).position(|x| x == g) {
            total += 1.0 / (pos + 1) as f64;
        }
    }
    total / gold.len() as f64
}

pub fn ndcg_oracle(r: &[u32], gold: &HashSet<u32>, l: usize) -> f64 {
    let mut seen = HashSet::new();
    let mut dcg = 0.0;
    for (i, x) in r.iter().take(l).enumerate() {
        if gold.contains(x) && seen.insert(*x) {
            dcg += 1.0 / (2.0 + i as f64).log2();
        }
    }
    let mut idcg = 0.0;
    for i in 0..gold.len().min(l) {
        idcg += 1.0 / (2.0 + i as f64).log2();
    }
    dcg / idcg
}

pub fn check_metrics(instances: usize, seed: u64) -> Check {
    let r = ["A", "X", "B"];
    let gold: HashSet<&str> = ["A", "B"].into_iter().collect();
    let ndcg_v = ndcg(&r, &gold, 3).map_err(|e| e.to_string())?;
    ensure!((ndcg_v - 0.91972).abs() <= 1e-5, "worked NDCG = {ndcg_v}");
    let rec = recall_at(&r, &gold, 3).map_err(|e| e.to_string())?;
    let prec = precision_at(&r, &gold, 3).map_err(|e| e.to_string())?;
    let mm = mmrr(&r, &gold, 3).map_err(|e| e.to_string())?;
    ensure!(rec == 1.0, "worked recall = {rec}");
    ensure!((prec - 2.0 / 3.0).abs() <= 1e-12, "worked precision = {prec}");
    ensure!((mm - 2.0 / 3.0).abs() <= 1e-12, "worked MMRR = {mm}");

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for case in 0..instances {
        let universe = rng.random_range(2..40u32);
        let len = rng.random_range(0..20);
        let ranking: Vec<u32> = (0..len).map(|_| rng.random_range(0..universe)).collect();
        let n_gold = rng.random_range(1..8);
        let gold: HashSet<u32> = (0..n_gold).map(|_| rng.random_range(0..universe)).collect();
        let l = rng.random_range(1..25);
        let pairs = [
            (
                "recall",
                recall_at(&ranking, &gold, l),
                recall_oracle(&ranking, &gold, l),
            ),
            (
                "precision",
                precision_at(&ranking, &gold, l),
                precision_oracle(&ranking, &gold, l),
            ),
            ("mmrr", mmrr(&ranking, &gold, l), mmrr_oracle(&ranking, &gold, l)),
            ("ndcg", ndcg(&ranking, &gold, l), ndcg_oracle(&ranking, &gold, l)),
        ];
        for (name, got, want) in pairs {
            let got = got.map_err(|e| e.to_string())?;
            ensure!((got - want).abs() <= 1e-9, "case {case}: {name} = {got}, oracle {want}");
        }
    }
    Ok(format!(
        "worked NDCG {ndcg_v:.5}; {instances} random rankings within 1e-9"
    ))
}

// ---------------------------------------------------------------- planted topic corpus

pub struct Planted {
    pub tuples: Vec<TrainingTuple>,
    /// Planted topic of every tuple.
    pub labels: Vec<usize>,
    /// Planted words per topic, per language.
    pub words: BTreeMap<String, Vec<Vec<String>>>,
}

/// `n_tuples` tuples, each one English and one Spanish passage drawn from one of two
/// topics with disjoint vocabularies.
pub fn planted_bilingual(n_tuples: usize, tokens_per_passage: usize, seed: u64) -> Planted {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut words = BTreeMap::new();
    for lang in ["en", "es"] {
        let per_topic: Vec<Vec<String>> = (0..2)
            .map(|t| (0..15).map(|i| format!("{lang}_t{t}_w{i}")).collect())
            .collect();
        words.insert(lang.to_string(), per_topic);
    }
    let mut tuples = Vec::new();
    let mut labels = Vec::new();
    for d in 0..n_tuples {
        let topic = d % 2;
        labels.push(topic);
        let sides = ["en", "es"]
            .iter()
            .map(|lang| {
                let vocab = &words[*lang][topic];
                let tokens = (0..tokens_per_passage)
                    .map(|_| vocab[rng.random_range(0..vocab.len())].clone())
                    .collect();
                TrainingSide {
                    corpus_id: lang.to_string(),
                    language: lang.to_string(),
                    passages: vec![TokenizedPassage {
                        id: format!("{lang}{d}#0"),
                        tokens,
                    }],
                }
            })
            .collect();
        tuples.push(TrainingTuple { sides });
    }
    Planted { tuples, labels, words }
}

/// Best agreement between planted labels and inferred labels over all topic matchings.
pub fn purity_two_topics(planted: &[usize], inferred: &[usize]) -> f64 {
    let same = planted.iter().zip(inferred).filter(|(a, b)| a == b).count();
    let n = planted.len() as f64;
    (same as f64 / n).max((planted.len() - same) as f64 / n)
}

pub fn check_gibbs(n_tuples: usize, iterations: usize, seed: u64) -> Check {
    let planted = planted_bilingual(n_tuples, 30, seed);
    let cfg = TrainConfig {
        k: 2,
        iterations,
        burn_in: iterations / 5,
        seed,
        ..TrainConfig::default()
    };
    let mut violations = Vec::new();
    let mut seen = 0usize;
    let model = train_with_observer(&planted.tuples, &cfg, |state| {
        seen += 1;
        if let Err(e) = state.check_conservation() {
            violations.push(format!("iteration {}: {e}", state.iteration()));
        }
        if let Err(e) = state.check_normalization(1e-6) {
            violations.push(format!("iteration {}: {e}", state.iteration()));
        }
    })
    .map_err(|e| e.to_string())?;
    ensure!(violations.is_empty(), "{}", violations.join("; "));
    ensure!(seen == iterations, "observer saw {seen} of {iterations} iterations");
    for (lang, b) in &model.beta {
        for r in 0..b.rows() {
            let s: f64 = b.row(r).iter().sum();
            ensure!((s - 1.0).abs() <= 1e-6, "beta[{lang}][{r}] sums to {s}");
        }
    }
    for p in &model.passages {
        let t = model.theta_of(&p.id).unwrap();
        let s: f64 = t.iter().sum();
        ensure!(
            (s - 1.0).abs() <= 1e-6 && t.iter().all(|&x| x >= 0.0),
            "theta of {} invalid",
            p.id
        );
    }
    let mut purities = Vec::new();
    for lang in ["en", "es"] {
        let inferred: Vec<usize> = (0..n_tuples)
            .map(|d| dominant_topic(model.theta_of(&format!("{lang}{d}#0")).unwrap()))
            .collect();
        let purity = purity_two_topics(&planted.labels, &inferred);
        ensure!(purity >= 0.9, "{lang} purity {purity:.3} < 0.9");
        purities.push(format!("{lang} purity {purity:.3}"));
    }
    let again = train(&planted.tuples, &cfg).map_err(|e| e.to_string())?;
    ensure!(again == model, "rerun with the same seed differs");
    let bits = |m: &mind_core::pltm::PolyTopicModel| -> Vec<u64> {
        m.theta
            .as_slice()
            .iter()
            .chain(m.beta.values().flat_map(|b| b.as_slice()))
            .map(|x| x.to_bits())
            .collect()
    };
    ensure!(bits(&again) == bits(&model), "rerun is not bit-identical");
    Ok(purities.join(", "))
}

// ---------------------------------------------------------------- cluster and probe counts

pub fn check_cluster_arithmetic() -> Check {
    // (active set size, clusters, probes) worked by hand with lambda = 4, l_min = 8
    let table = [(1, 1, 1), (10, 10, 1), (100, 40, 4), (10_000, 400, 40)];
    for (n, l, p) in table {
        let got_l = cluster_count(n, 4.0, 8);
        let got_p = probe_count(got_l);
        ensure!(
            (got_l, got_p) == (l, p),
            "|T|={n}: got ({got_l}, {got_p}), want ({l}, {p})"
        );
    }
    Ok(format!("{} table rows exact", table.len()))
}

// ---------------------------------------------------------------- retrieval

pub struct RandomCorpus {
    pub ids: Vec<String>,
    pub embeddings: Vec<Vec<f64>>,
    pub theta: Vec<Vec<f64>>,
}

fn random_simplex_sparse(rng: &mut ChaCha8Rng, k: usize, p_zero: f64) -> Vec<f64> {
    let mut v: Vec<f64> = (0..k)
        .map(|_| {
            if rng.random::<f64>() < p_zero {
                0.0
            } else {
                rng.random::<f64>()
            }
        })
        .collect();
    if v.iter().all(|&x| x == 0.0) {
        v[rng.random_range(0..k)] = 1.0;
    }
    let s: f64 = v.iter().sum();
    v.into_iter().map(|x| x / s).collect()
}

pub fn random_corpus(rng: &mut ChaCha8Rng, n: usize, k: usize, dim: usize) -> RandomCorpus {
    RandomCorpus {
        ids: (0..n).map(|i| format!("c{i}")).collect(),
        embeddings: (0..n)
            .map(|_| (0..dim).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect())
            .collect(),
        theta: (0..n).map(|_| random_simplex_sparse(rng, k, 0.5)).collect(),
    }
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let d: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    d / (na * nb)
}

/// Scores every member of every relevant topic, keeps the top `h` per topic, scales
/// by alpha, keeps each passage's best score and returns the global top `l`.
pub fn brute_force_topic_search(
    corpus: &RandomCorpus,
    query: &[f64],
    topics: &[usize],
    theta_anchor: &[f64],
    weighted: bool,
    h: usize,
    l: usize,
) -> Vec<(String, f64)> {
    let mut best: HashMap<usize, f64> = HashMap::new();
    for &k in topics {
        let mut members: Vec<(usize, f64)> = (0..corpus.ids.len())
            .filter(|&p| corpus.theta[p][k] > 0.0)
            .map(|p| (p, cosine(query, &corpus.embeddings[p])))
            .collect();
        members.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        let alpha = if weighted { theta_anchor[k] } else { 1.0 };
        for &(p, sim) in members.iter().take(h) {
            let s = alpha * sim;
            let e = best.entry(p).or_insert(f64::NEG_INFINITY);
            if s > *e {
                *e = s;
            }
        }
    }
    let mut all: Vec<(usize, f64)> = best.into_iter().collect();
    all.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    all.into_iter()
        .take(l)
        .map(|(p, s)| (corpus.ids[p].clone(), s))
        .collect()
}

pub fn index_of(corpus: &RandomCorpus, cfg: IndexConfig) -> TopicIndex<f64> {
    build_index(
        corpus.ids.clone(),
        Matrix::from_rows(&corpus.embeddings).unwrap(),
        &Matrix::from_rows(&corpus.theta).unwrap(),
        cfg,
    )
    .unwrap()
}

pub fn check_retrieval_oracle(corpora: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for c in 0..corpora {
        let n = rng.random_range(20..=500);
        let k = rng.random_range(1..=5);
        let corpus = random_corpus(&mut rng, n, k, 16);
        let index = index_of(
            &corpus,
            IndexConfig {
                seed: c as u64,
                ..IndexConfig::default()
            },
        );
        for qi in 0..10 {
            let query: Vec<f64> = (0..16).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
            let theta_anchor = random_simplex_sparse(&mut rng, k, 0.4);
            let weighted = qi % 2 == 0;
            let epsilon = if qi % 3 == 0 {
                EpsilonMode::Dynamic
            } else {
                EpsilonMode::Static(0.0)
            };
            let (l, h) = if qi % 2 == 0 { (3, 10) } else { (5, 5) };
            let params = SearchParams {
                mode: SearchMode::TbEnn,
                weighted,
                l,
                h,
                epsilon,
                probe: ProbeRule::Default,
            };
            let got = index
                .search(&query, &theta_anchor, &params)
                .map_err(|e| e.to_string())?;
            let topics = relevant_topics(&theta_anchor, epsilon);
            let want = brute_force_topic_search(&corpus, &query, &topics, &theta_anchor, weighted, h, l);
            let got_ids: Vec<&str> = got.hits.iter().map(|x| x.passage_id.as_str()).collect();
            let want_ids: Vec<&str> = want.iter().map(|x| x.0.as_str()).collect();
            ensure!(
                got_ids == want_ids,
                "corpus {c} query {qi}: {got_ids:?} != {want_ids:?}"
            );
            for (g, w) in got.hits.iter().zip(&want) {
                ensure!(
                    (g.score - w.1).abs() <= 1e-9,
                    "corpus {c} query {qi}: score {} vs {}",
                    g.score,
                    w.1
                );
                ensure!(g.score == g.alpha * g.similarity, "score is not alpha * similarity");
            }
        }
    }
    Ok(format!("{corpora} corpora: ids, order and scores (1e-9) match"))
}

/// Points scattered around `clusters` random unit centres.
pub fn gaussian_clusters(rng: &mut ChaCha8Rng, n: usize, clusters: usize, dim: usize, spread: f64) -> Vec<Vec<f64>> {
    let normal = |rng: &mut ChaCha8Rng| {
        // Box-Muller
        let u1: f64 = rng.random::<f64>().max(1e-12);
        let u2: f64 = rng.random();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    };
    let centres: Vec<Vec<f64>> = (0..clusters).map(|_| (0..dim).map(|_| normal(rng)).collect()).collect();
    (0..n)
        .map(|i| {
            let c = &centres[i % clusters];
            c.iter().map(|&x| x + spread * normal(rng)).collect()
        })
        .collect()
}

pub fn check_tb_ann(n: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // exactness when every cluster is probed, on small random corpora
    for c in 0..10 {
        let (n, k) = (rng.random_range(50..400), rng.random_range(1..=5));
        let corpus = random_corpus(&mut rng, n, k, 16);
        let index = index_of(&corpus, IndexConfig::default());
        let k = corpus.theta[0].len();
        for _ in 0..10 {
            let q: Vec<f64> = (0..16).map(|_| rng.random::<f64>() - 0.5).collect();
            let theta = random_simplex_sparse(&mut rng, k, 0.3);
            let exact = SearchParams {
                mode: SearchMode::TbEnn,
                ..SearchParams::default()
            };
            let all = SearchParams {
                mode: SearchMode::TbAnn,
                probe: ProbeRule::All,
                ..exact
            };
            let a = index.search(&q, &theta, &exact).map_err(|e| e.to_string())?;
            let b = index.search(&q, &theta, &all).map_err(|e| e.to_string())?;
            ensure!(
                a.hits == b.hits,
                "corpus {c}: TB-ANN with all probes differs from TB-ENN"
            );
        }
    }

    // default probing on a large clustered corpus
    let topics = 4;
    let dim = 16;
    let embeddings = gaussian_clusters(&mut rng, n, 64, dim, 0.35);
    let theta: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut t = vec![0.0; topics];
            t[i % topics] = 1.0;
            t
        })
        .collect();
    let corpus = RandomCorpus {
        ids: (0..n).map(|i| format!("g{i}")).collect(),
        embeddings,
        theta,
    };
    let index = index_of(&corpus, IndexConfig::default());
    let queries = gaussian_clusters(&mut rng, 200, 64, dim, 0.35);
    let (mut overlap, mut total) = (0usize, 0usize);
    let (mut evals_ann, mut evals_exact) = (0u64, 0u64);
    for q in &queries {
        let theta_anchor = random_simplex_sparse(&mut rng, topics, 0.5);
        let exact = SearchParams {
            mode: SearchMode::TbEnn,
            l: 5,
            h: 10,
            ..SearchParams::default()
        };
        let approx = SearchParams {
            mode: SearchMode::TbAnn,
            ..exact
        };
        let a = index.search(q, &theta_anchor, &exact).map_err(|e| e.to_string())?;
        let b = index.search(q, &theta_anchor, &approx).map_err(|e| e.to_string())?;
        let set: HashSet<&str> = a.hits.iter().map(|h| h.passage_id.as_str()).collect();
        overlap += b.hits.iter().filter(|h| set.contains(h.passage_id.as_str())).count();
        total += a.hits.len();
        evals_ann += b.distance_evaluations;
        evals_exact += a.distance_evaluations;
    }
    let recall = overlap as f64 / total as f64;
    let ratio = evals_ann as f64 / evals_exact as f64;
    ensure!(recall >= 0.6, "TB-ANN recall@5 relative to TB-ENN is {recall:.3} < 0.6");
    ensure!(
        ratio < 0.3,
        "TB-ANN distance evaluations are {:.1}% of exact",
        ratio * 100.0
    );
    Ok(format!(
        "recall@5 {recall:.3}, distance evaluations {:.1}% of exact",
        ratio * 100.0
    ))
}

// ---------------------------------------------------------------- bootstrap

pub fn check_bootstrap_determinism(seed: u64) -> Check {
    use mind_core::eval::bootstrap_ci;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values: Vec<f64> = (0..60).map(|_| rng.random::<f64>()).collect();
    let a = bootstrap_ci(&values, 1000, 0.95, seed).map_err(|e| e.to_string())?;
    let b = bootstrap_ci(&values, 1000, 0.95, seed).map_err(|e| e.to_string())?;
    ensure!(a == b, "bootstrap differs under the same seed: {a:?} vs {b:?}");
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    ensure!(
        (a.1 - mean).abs() <= 1e-12,
        "bootstrap mean {} != sample mean {mean}",
        a.1
    );
    ensure!(a.0 <= a.1 && a.1 <= a.2, "interval not ordered: {a:?}");
    Ok(format!(
        "identical intervals under seed {seed}: {:.4} [{:.4}, {:.4}]",
        a.1, a.0, a.2
    ))
}

// ---------------------------------------------------------------- prompt exemplars

use mind_core::llm::{ChatProvider, ChatRequest, LlmError};

/// Chat provider that answers a prompt by looking up its task input among the
/// prompt's own worked examples and replaying the example output that follows.
pub struct ExemplarChat {
    /// Label opening the example output, e.g. `ANSWER:`.
    pub output_marker: &'static str,
}

fn squash(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

pub fn exemplar_response(prompt: &str, output_marker: &str) -> Option<String> {
    let task_at = prompt.find("#### YOUR TASK ####")?;
    let (examples, task) = prompt.split_at(task_at);
    let first = task.lines().skip(1).map(str::trim).find(|l| !l.is_empty())?;
    let (field, value) = first.split_once(':')?;
    let needle = squash(value);
    let mut offset = 0;
    for line in examples.split_inclusive('\n') {
        let t = line.trim();
        if let Some((f, v)) = t.split_once(':') {
            if f == field && squash(v) == needle {
                let rest = &examples[offset..];
                let start = rest.find(&format!("\n{output_marker}"))? + 1;
                let out = &rest[start..];
                let end = out.find("\n\n").unwrap_or(out.len());
                return Some(out[..end].trim_end().to_string());
            }
        }
        offset += line.len();
    }
    None
}

impl ChatProvider for ExemplarChat {
    fn provider_id(&self) -> &str {
        "exemplar"
    }
    fn model_name(&self) -> &str {
        "replay"
    }
    fn complete(&self, request: &ChatRequest) -> Result<String, LlmError> {
        exemplar_response(&request.prompt, self.output_marker).ok_or_else(|| LlmError::Parse {
            task: "exemplar",
            output: "no matching example".into(),
        })
    }
}

/// Fields of `FIELD: value` lines in the examples section of a template.
pub fn example_fields(template_text: &str, field: &str) -> Vec<String> {
    let start = template_text.find("#### EXAMPLE").unwrap_or(0);
    let end = template_text.find("#### YOUR TASK ####").unwrap_or(template_text.len());
    template_text[start..end]
        .lines()
        .filter_map(|l| {
            l.trim()
                .strip_prefix(&format!("{field}:"))
                .map(|v| v.trim().to_string())
        })
        .collect()
}

pub fn check_prompt_round_trips() -> Check {
    use mind_core::llm::{
        generate_answer, generate_questions, parse_discrepancy, AnswerSide, DiscrepancyLabel, Question,
        QuestionOutcome, QuestionStatus, Template, ABSTENTION_SENTINEL,
    };

    for t in Template::ALL {
        let names = t.placeholders();
        let values: Vec<(&str, String)> = names.iter().map(|n| (*n, format!("<{n} value>"))).collect();
        let pairs: Vec<(&str, &str)> = values.iter().map(|(n, v)| (*n, v.as_str())).collect();
        let out = t.render(&pairs).map_err(|e| format!("{}: {e}", t.name()))?;
        for n in &names {
            ensure!(
                !out.contains(&format!("{{{n}}}")),
                "{}: placeholder {n} left unfilled",
                t.name()
            );
            ensure!(
                out.contains(&format!("<{n} value>")),
                "{}: value for {n} missing",
                t.name()
            );
        }
        if let Some(first) = names.first() {
            ensure!(
                t.render(&pairs[1..]).is_err(),
                "{}: render without {first} accepted",
                t.name()
            );
        }
    }

    // question generation: the factual example yields its three questions, the
    // personal-experience example is declined with a reason
    let qtext = Template::QuestionGeneration.text();
    let passages = example_fields(qtext, "PASSAGE");
    let docs = example_fields(qtext, "FULL_DOCUMENT");
    let expected_q = example_fields(qtext, "QUESTIONS");
    ensure!(
        passages.len() == 2 && docs.len() == 2,
        "question template examples not found"
    );
    let chat = ExemplarChat {
        output_marker: "QUESTIONS:",
    };
    match generate_questions("misc#0", &passages[0], &docs[0], &chat).map_err(|e| e.to_string())? {
        QuestionOutcome::Questions(qs) => {
            ensure!(qs.len() == 3, "expected 3 questions, got {}", qs.len());
            ensure!(qs[0].text == expected_q[0], "first question {:?}", qs[0].text);
            ensure!(
                qs[2].text.starts_with("Have there been cases"),
                "third question {:?}",
                qs[2].text
            );
            ensure!(
                qs.iter().all(|q| q.text.contains("(MIS-C)")),
                "acronym not defined in every question"
            );
        }
        other => return Err(format!("factual passage declined: {other:?}")),
    }
    match generate_questions("stone#0", &passages[1], &docs[1], &chat).map_err(|e| e.to_string())? {
        QuestionOutcome::NotSuitable(reason) => {
            ensure!(
                reason.starts_with("the passage provides subjective"),
                "reason {reason:?}"
            )
        }
        other => return Err(format!("subjective passage accepted: {other:?}")),
    }

    // answer generation: the answerable example answers Yes, the other abstains
    let atext = Template::AnswerGeneration.text();
    let aq = example_fields(atext, "QUESTION");
    let ap = example_fields(atext, "PASSAGE");
    let ad = example_fields(atext, "FULL_DOCUMENT");
    let chat = ExemplarChat {
        output_marker: "ANSWER:",
    };
    let mut answers = Vec::new();
    for i in 0..2 {
        let q = Question {
            id: format!("q{i}"),
            passage_id: "anchor".into(),
            text: aq[i].clone(),
            status: QuestionStatus::Active,
        };
        answers.push(
            generate_answer(&q, &format!("p{i}"), &ap[i], &ad[i], AnswerSide::Comparison, &chat)
                .map_err(|e| e.to_string())?,
        );
    }
    ensure!(
        !answers[0].abstained && answers[0].text.starts_with("Yes, children"),
        "answer {:?}",
        answers[0].text
    );
    ensure!(
        answers[1].abstained && answers[1].text == ABSTENTION_SENTINEL,
        "answer {:?}",
        answers[1].text
    );

    // discrepancy detection: the three worked classifications
    let dtext = Template::DiscrepancyDetection.text();
    let start = dtext.find("#### EXAMPLE ####").ok_or("no example section")?;
    let end = dtext.find("#### YOUR TASK ####").ok_or("no task section")?;
    let blocks: Vec<&str> = dtext[start..end].split("REASON:").skip(1).collect();
    let expected = [
        DiscrepancyLabel::Contradiction,
        DiscrepancyLabel::CulturalDiscrepancy,
        DiscrepancyLabel::NotEnoughInfo,
    ];
    ensure!(
        blocks.len() == 3,
        "expected 3 worked classifications, found {}",
        blocks.len()
    );
    for (block, want) in blocks.iter().zip(expected) {
        let text = format!("REASON:{}", block.split("\n\n").next().unwrap());
        let (reason, label) = parse_discrepancy(&text).map_err(|e| e.to_string())?;
        ensure!(label == want, "parsed {label:?}, want {want:?}");
        ensure!(!reason.is_empty(), "empty reason for {want:?}");
    }
    Ok("all templates render; question, sentinel and label exemplars round-trip".to_string())
}

// ---------------------------------------------------------------- controlled dataset

pub fn check_controlled_dataset() -> Check {
    use mind_core::eval::{
        build_controlled_dataset, score_classifier, Composition, ControlledSource, DplaceDefinition, FeverClaim,
        FeverLabel, MISSING_DATA,
    };
    use mind_core::llm::{DiscrepancyLabel, Template};

    let ftext = Template::FeverConversion.text();
    let claims = example_fields(ftext, "CLAIM");
    let labels = example_fields(ftext, "LABEL");
    let evidence = example_fields(ftext, "EVIDENCE");
    let fever: Vec<FeverClaim> = (0..claims.len())
        .map(|i| FeverClaim {
            id: format!("fever{i}"),
            claim: claims[i].clone(),
            label: if labels[i] == "SUPPORTS" {
                FeverLabel::Supports
            } else {
                FeverLabel::Refutes
            },
            evidence: evidence[i].clone(),
        })
        .collect();
    let dtext = Template::DplaceConversion.text();
    let defs = example_fields(dtext, "DEFINITION");
    let ex1 = example_fields(dtext, "EXAMPLE1");
    let ex2 = example_fields(dtext, "EXAMPLE2");
    let mut dplace: Vec<DplaceDefinition> = (0..defs.len())
        .map(|i| DplaceDefinition {
            id: format!("dplace{i}"),
            definition: defs[i].clone(),
            example1: ex1[i].clone(),
            example2: ex2[i].clone(),
        })
        .collect();
    dplace.push(DplaceDefinition {
        id: "dplace-missing".into(),
        definition: defs[0].clone(),
        example1: ex1[0].clone(),
        example2: MISSING_DATA.into(),
    });
    ensure!(
        fever.len() == 2 && defs.len() == 2,
        "conversion template examples not found"
    );

    let fever_items = build_controlled_dataset(
        &fever,
        &[],
        &ExemplarChat {
            output_marker: "QUESTION:",
        },
        &Composition::default(),
    )
    .map_err(|e| e.to_string())?;
    let dplace_items = build_controlled_dataset(
        &[],
        &dplace,
        &ExemplarChat {
            output_marker: "QUESTION:",
        },
        &Composition::default(),
    )
    .map_err(|e| e.to_string())?;
    let items: Vec<_> = fever_items.into_iter().chain(dplace_items).collect();
    ensure!(items.len() == 5, "expected 5 items, got {}", items.len());
    for item in &items {
        let want = match item.source {
            ControlledSource::FeverSupports => DiscrepancyLabel::NoDiscrepancy,
            ControlledSource::FeverRefutes => DiscrepancyLabel::Contradiction,
            ControlledSource::Dplace => DiscrepancyLabel::CulturalDiscrepancy,
            ControlledSource::DplaceMissing => DiscrepancyLabel::NotEnoughInfo,
        };
        ensure!(
            item.gold_label == want,
            "{}: gold {:?}, want {want:?}",
            item.id,
            item.gold_label
        );
        ensure!(
            !item.question.is_empty() && !item.answer1.is_empty() && !item.answer2.is_empty(),
            "{}: empty triplet",
            item.id
        );
    }
    let blair = items.iter().find(|i| i.id == "fever0").ok_or("fever0 missing")?;
    ensure!(
        blair.answer2.starts_with("No, Tony Blair was elected"),
        "fever0 answer2 {:?}",
        blair.answer2
    );
    let sources: HashSet<String> = items.iter().map(|i| format!("{:?}", i.source)).collect();
    ensure!(sources.len() == 4, "not every source represented");

    let gold: Vec<DiscrepancyLabel> = items.iter().map(|i| i.gold_label).collect();
    let report = score_classifier(&gold, &gold).map_err(|e| e.to_string())?;
    ensure!(report.macro_f1 == 1.0, "copy predictor macro F1 = {}", report.macro_f1);
    ensure!(report.per_class.values().all(|c| c.f1 == 1.0), "a class F1 below 1");
    Ok(format!(
        "{} items over 4 sources; copy predictor macro F1 {:.1}",
        items.len(),
        report.macro_f1
    ))
}
