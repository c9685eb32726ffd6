use serde::{Deserialize, Serialize};

use crate::pltm::dominant_topic;

/// Number of inverted-file clusters for an active set of `active` passages:
/// `max(floor(lambda * sqrt(active)), l_min)`, never more than `active`.
pub fn cluster_count(active: usize, lambda: f64, l_min: usize) -> usize {
    if active == 0 {
        return 0;
    }
    // floor(lambda * sqrt(n)) computed against lambda^2 * n so perfect squares are exact
    let target = lambda * lambda * active as f64;
    let mut c = (lambda * (active as f64).sqrt()).floor().max(0.0) as u64;
    while ((c + 1) as f64).powi(2) <= target {
        c += 1;
    }
    while c > 0 && (c as f64).powi(2) > target {
        c -= 1;
    }
    (c as usize).max(l_min).min(active)
}

/// Clusters probed per query: 10% of `clusters` rounded half up, at least 1.
pub fn probe_count(clusters: usize) -> usize {
    ((clusters.max(1) + 5) / 10).max(1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode", content = "epsilon")]
pub enum EpsilonMode {
    /// Topics with weight strictly above the threshold.
    Static(f64),
    /// Per-passage threshold at the elbow of the sorted weights.
    Dynamic,
}

/// Weight at the elbow of the descending non-zero weights: the point farthest from
/// the chord joining the first and last points, with both axes scaled to [0, 1].
/// `None` when fewer than three weights are non-zero or all are equal.
pub fn elbow_threshold(theta: &[f64]) -> Option<f64> {
    let mut w: Vec<f64> = theta.iter().copied().filter(|&v| v > 0.0).collect();
    if w.len() < 3 {
        return None;
    }
    w.sort_by(|a, b| b.total_cmp(a));
    let (hi, lo) = (w[0], w[w.len() - 1]);
    if hi == lo {
        return None;
    }
    let last = (w.len() - 1) as f64;
    let mut best = 0;
    let mut best_d = f64::NEG_INFINITY;
    for (i, &v) in w.iter().enumerate() {
        let x = i as f64 / last;
        let y = (v - lo) / (hi - lo);
        // chord from (0, 1) to (1, 0): x + y - 1 = 0
        let d = (1.0 - x - y).abs();
        if d > best_d {
            best = i;
            best_d = d;
        }
    }
    Some(w[best])
}

/// Topics to search for an anchor passage, ascending. Never empty: falls back to the
/// dominant topic.
pub fn relevant_topics(theta: &[f64], mode: EpsilonMode) -> Vec<usize> {
    let picked: Vec<usize> = match mode {
        EpsilonMode::Static(eps) => (0..theta.len()).filter(|&k| theta[k] > eps).collect(),
        EpsilonMode::Dynamic => match elbow_threshold(theta) {
            Some(t) => (0..theta.len()).filter(|&k| theta[k] >= t).collect(),
            None => {
                let nz: Vec<usize> = (0..theta.len()).filter(|&k| theta[k] > 0.0).collect();
                let all_equal = nz.len() >= 3 && nz.iter().all(|&k| theta[k] == theta[nz[0]]);
                if all_equal {
                    nz
                } else {
                    Vec::new()
                }
            }
        },
    };
    if picked.is_empty() && !theta.is_empty() {
        vec![dominant_topic(theta)]
    } else {
        picked
    }
}
