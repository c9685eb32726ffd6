//! Runs every acceptance criterion and prints one PASS/FAIL line per criterion.
//! Exits non-zero if any fails.

#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use mind_service::ops::Workspace;
use mind_service::synth::{generate, SynthSpec};
use support::Check;

struct Criterion {
    name: &'static str,
    limit: Option<Duration>,
    run: fn() -> Check,
}

fn both(a: Check, b: Check) -> Check {
    Ok(format!("{}; {}", a?, b?))
}

fn end_to_end() -> Check {
    let corpus = generate(SynthSpec::default());
    let mut exports = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let ws = Workspace::new(dir.path());
        ws.create_synthetic("e2e", &corpus).map_err(|e| e.to_string())?;
        ws.run_all("e2e", false).map_err(|e| e.to_string())?;
        exports.push(ws.export("e2e", false).map_err(|e| e.to_string())?);
    }
    if exports[0].is_empty() {
        return Err("export is empty".into());
    }
    if exports[0] != exports[1] {
        return Err("exports of two runs differ".into());
    }
    let records = exports[0].lines().count();
    let prompts = support::check_prompt_round_trips()?;
    Ok(format!("{records} records byte-identical across runs; {prompts}"))
}

const CRITERIA: &[Criterion] = &[
    Criterion {
        name: "cluster count and probe count arithmetic",
        limit: None,
        run: support::check_cluster_arithmetic,
    },
    Criterion {
        name: "TB-ENN equals brute force on 50 random corpora",
        limit: Some(Duration::from_secs(30)),
        run: || support::check_retrieval_oracle(50, 2024),
    },
    Criterion {
        name: "TB-ANN exhaustive equivalence, recall and work on 10k corpus",
        limit: Some(Duration::from_secs(120)),
        run: || support::check_tb_ann(10_000, 77),
    },
    Criterion {
        name: "Gibbs sampler invariants, planted recovery, determinism",
        limit: Some(Duration::from_secs(60)),
        run: || support::check_gibbs(200, 300, 42),
    },
    Criterion {
        name: "ds_rerank and passage_score against independent evaluator",
        limit: None,
        run: || support::check_filter_scores(100, 11),
    },
    Criterion {
        name: "retrieval metrics, worked example and bootstrap determinism",
        limit: None,
        run: || both(support::check_metrics(1000, 5), support::check_bootstrap_determinism(9)),
    },
    Criterion {
        name: "end-to-end replay with mock providers and prompt round trips",
        limit: Some(Duration::from_secs(120)),
        run: end_to_end,
    },
    Criterion {
        name: "controlled dataset gold mapping and copy predictor F1",
        limit: None,
        run: support::check_controlled_dataset,
    },
];

fn main() -> ExitCode {
    let mut failed = 0;
    for (i, c) in CRITERIA.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(c.run).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let outcome = match (outcome, c.limit) {
            (Ok(_), Some(limit)) if elapsed > limit => Err(format!("took {elapsed:.1?}, limit {limit:?}")),
            (o, _) => o,
        };
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d.as_str()),
            Err(e) => ("FAIL", e.as_str()),
        };
        if outcome.is_err() {
            failed += 1;
        }
        println!("{tag} [{}] {} ({:.2?}): {detail}", i + 1, c.name, elapsed);
    }
    println!("{} of {} criteria passed", CRITERIA.len() - failed, CRITERIA.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
