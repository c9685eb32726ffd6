use std::collections::HashSet;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::search::{SearchMode, SearchParams, TopicIndex};
use super::IndexError;
use crate::eval::{evaluate_rankings, EvalError, MetricReport};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchQuery<T> {
    pub id: String,
    pub vector: Vec<T>,
    pub theta: Vec<f64>,
    pub gold: HashSet<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub mode: SearchMode,
    pub weighted: bool,
    pub queries: usize,
    pub repetitions: usize,
    pub mean_ms: f64,
    pub median_ms: f64,
    pub max_ms: f64,
    pub mean_distance_evaluations: f64,
    pub metrics: MetricReport,
}

/// Times every configuration over all queries, `repetitions` times each, and scores
/// the rankings of the first repetition. Timing covers the search call only.
pub fn benchmark<T: Scalar>(
    index: &TopicIndex<T>,
    queries: &[BenchQuery<T>],
    configs: &[SearchParams],
    repetitions: usize,
    seed: u64,
) -> Result<Vec<BenchRow>, IndexError> {
    if repetitions == 0 {
        return Err(IndexError::InvalidConfig("repetitions must be at least 1".into()));
    }
    configs
        .iter()
        .map(|params| {
            let mut times = Vec::with_capacity(queries.len() * repetitions);
            let mut evals = 0u64;
            let mut runs = Vec::with_capacity(queries.len());
            for rep in 0..repetitions {
                for q in queries {
                    let start = Instant::now();
                    let out = index.search(&q.vector, &q.theta, params)?;
                    times.push(start.elapsed().as_secs_f64() * 1e3);
                    if rep == 0 {
                        evals += out.distance_evaluations;
                        let ranking: Vec<String> = out.hits.into_iter().map(|h| h.passage_id).collect();
                        runs.push((ranking, q.gold.clone()));
                    }
                }
            }
            times.sort_by(f64::total_cmp);
            let n = times.len().max(1) as f64;
            let metrics = evaluate_rankings(&runs, params.l, 1000, 0.95, seed)?;
            Ok(BenchRow {
                mode: params.mode,
                weighted: params.weighted,
                queries: queries.len(),
                repetitions,
                mean_ms: times.iter().sum::<f64>() / n,
                median_ms: times.get(times.len() / 2).copied().unwrap_or(0.0),
                max_ms: times.last().copied().unwrap_or(0.0),
                mean_distance_evaluations: evals as f64 / queries.len().max(1) as f64,
                metrics,
            })
        })
        .collect()
}

pub fn write_benchmark_csv<W: std::io::Write>(rows: &[BenchRow], out: W) -> Result<(), IndexError> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| IndexError::Eval(EvalError::Csv(e));
    w.write_record([
        "mode",
        "weighted",
        "l",
        "queries",
        "repetitions",
        "mean_ms",
        "median_ms",
        "max_ms",
        "mean_distance_evaluations",
        "recall",
        "precision",
        "mmrr",
        "ndcg",
    ])
    .map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.mode.as_str().to_string(),
            r.weighted.to_string(),
            r.metrics.l.to_string(),
            r.queries.to_string(),
            r.repetitions.to_string(),
            format!("{:.4}", r.mean_ms),
            format!("{:.4}", r.median_ms),
            format!("{:.4}", r.max_ms),
            format!("{:.2}", r.mean_distance_evaluations),
            r.metrics.recall.mean.to_string(),
            r.metrics.precision.mean.to_string(),
            r.metrics.mmrr.mean.to_string(),
            r.metrics.ndcg.mean.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}
