use std::collections::HashSet;
use std::hash::Hash;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::EvalError;

fn hits<T: Eq + Hash>(retrieved: &[T], gold: &HashSet<T>, l: usize) -> usize {
    let top: HashSet<&T> = retrieved.iter().take(l).collect();
    top.iter().filter(|x| gold.contains(**x)).count()
}

/// Fraction of gold items in the top `l`.
pub fn recall_at<T: Eq + Hash>(retrieved: &[T], gold: &HashSet<T>, l: usize) -> Result<f64, EvalError> {
    if l == 0 {
        return Err(EvalError::InvalidCutoff);
    }
    if gold.is_empty() {
        return Err(EvalError::EmptyGold);
    }
    Ok(hits(retrieved, gold, l) as f64 / gold.len() as f64)
}

/// Fraction of the `l` slots occupied by gold items.
pub fn precision_at<T: Eq + Hash>(retrieved: &[T], gold: &HashSet<T>, l: usize) -> Result<f64, EvalError> {
    if l == 0 {
        return Err(EvalError::InvalidCutoff);
    }
    if gold.is_empty() {
        return Err(EvalError::EmptyGold);
    }
    Ok(hits(retrieved, gold, l) as f64 / l as f64)
}

/// 1-based rank of the first occurrence of each gold item within the top `l`.
fn gold_ranks<'a, T: Eq + Hash>(retrieved: &'a [T], gold: &HashSet<T>, l: usize) -> Vec<usize> {
    let mut seen: HashSet<&'a T> = HashSet::new();
    retrieved
        .iter()
        .take(l)
        .enumerate()
        .filter(|(_, x)| gold.contains(*x) && seen.insert(*x))
        .map(|(i, _)| i + 1)
        .collect()
}

/// Mean reciprocal rank over all gold items, counting unretrieved items as 0.
pub fn mmrr<T: Eq + Hash>(retrieved: &[T], gold: &HashSet<T>, l: usize) -> Result<f64, EvalError> {
    if l == 0 {
        return Err(EvalError::InvalidCutoff);
    }
    if gold.is_empty() {
        return Err(EvalError::EmptyGold);
    }
    let sum: f64 = gold_ranks(retrieved, gold, l).iter().map(|&r| 1.0 / r as f64).sum();
    Ok(sum / gold.len() as f64)
}

/// Binary-gain NDCG with a `log2(rank + 1)` discount.
pub fn ndcg<T: Eq + Hash>(retrieved: &[T], gold: &HashSet<T>, l: usize) -> Result<f64, EvalError> {
    if l == 0 {
        return Err(EvalError::InvalidCutoff);
    }
    if gold.is_empty() {
        return Err(EvalError::EmptyGold);
    }
    let gain = |rank: usize| 1.0 / ((rank + 1) as f64).log2();
    let dcg: f64 = gold_ranks(retrieved, gold, l).into_iter().map(gain).sum();
    let idcg: f64 = (1..=gold.len().min(l)).map(gain).sum();
    Ok(dcg / idcg)
}

/// Type-7 quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Percentile bootstrap over query resampling. Returns `(lower, mean, upper)` with
/// `lower <= mean <= upper`.
pub fn bootstrap_ci(values: &[f64], resamples: usize, level: f64, seed: u64) -> Result<(f64, f64, f64), EvalError> {
    let n = values.len();
    if n < 2 {
        return Err(EvalError::TooFewQueries(n));
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let resamples = resamples.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut means: Vec<f64> = (0..resamples)
        .map(|_| (0..n).map(|_| values[rng.random_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    means.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    let lower = quantile(&means, tail).min(mean);
    let upper = quantile(&means, 1.0 - tail).max(mean);
    Ok((lower, mean, upper))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub per_query: Vec<f64>,
    pub mean: f64,
    pub lower: f64,
    pub upper: f64,
}

impl MetricSummary {
    fn from_values(values: Vec<f64>, resamples: usize, level: f64, seed: u64) -> Self {
        let (lower, mean, upper) = match values.len() {
            0 => (0.0, 0.0, 0.0),
            1 => (values[0], values[0], values[0]),
            _ => bootstrap_ci(&values, resamples, level, seed).expect("at least two values"),
        };
        Self {
            per_query: values,
            mean,
            lower,
            upper,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub l: usize,
    /// Queries with a non-empty gold set; the others are excluded.
    pub queries: usize,
    pub recall: MetricSummary,
    pub precision: MetricSummary,
    pub mmrr: MetricSummary,
    pub ndcg: MetricSummary,
}

impl MetricReport {
    pub fn summaries(&self) -> [(&'static str, &MetricSummary); 4] {
        [
            ("recall", &self.recall),
            ("precision", &self.precision),
            ("mmrr", &self.mmrr),
            ("ndcg", &self.ndcg),
        ]
    }

    /// One row per metric: `metric,l,queries,mean,lower,upper`.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<(), EvalError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["metric", "l", "queries", "mean", "lower", "upper"])?;
        for (name, s) in self.summaries() {
            w.write_record([
                name.to_string(),
                self.l.to_string(),
                self.queries.to_string(),
                s.mean.to_string(),
                s.lower.to_string(),
                s.upper.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Scores each `(ranking, gold)` pair at cutoff `l`; pairs with empty gold are skipped.
pub fn evaluate_rankings<T: Eq + Hash>(
    runs: &[(Vec<T>, HashSet<T>)],
    l: usize,
    resamples: usize,
    level: f64,
    seed: u64,
) -> Result<MetricReport, EvalError> {
    if l == 0 {
        return Err(EvalError::InvalidCutoff);
    }
    let mut cols: [Vec<f64>; 4] = Default::default();
    for (ranking, gold) in runs.iter().filter(|(_, g)| !g.is_empty()) {
        cols[0].push(recall_at(ranking, gold, l)?);
        cols[1].push(precision_at(ranking, gold, l)?);
        cols[2].push(mmrr(ranking, gold, l)?);
        cols[3].push(ndcg(ranking, gold, l)?);
    }
    let queries = cols[0].len();
    let [r, p, m, n] = cols;
    let s = |v| MetricSummary::from_values(v, resamples, level, seed);
    Ok(MetricReport {
        l,
        queries,
        recall: s(r),
        precision: s(p),
        mmrr: s(m),
        ndcg: s(n),
    })
}
