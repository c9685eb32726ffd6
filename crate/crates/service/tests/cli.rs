mod common;

use std::fs;

use common::{synthetic_workspace, PROJECT};
use mind_core::eval::{ClassifierReport, ControlledItem};
use mind_service::cli::run_from;

fn run(root: &std::path::Path, args: &[&str]) -> String {
    let mut out = Vec::new();
    let mut full = vec!["mind", "--root", root.to_str().unwrap()];
    full.extend_from_slice(args);
    run_from(full, &mut out).unwrap_or_else(|e| panic!("{args:?}: {e}"));
    String::from_utf8(out).unwrap()
}

#[test]
fn eval_retrieval_writes_one_row_per_configuration() {
    let dir = tempfile::tempdir().unwrap();
    let ws = synthetic_workspace(dir.path());
    ws.run_all(PROJECT, false).unwrap();
    let csv = dir.path().join("bench.csv");
    let gold = dir.path().join("gold.jsonl");
    let msg = run(
        dir.path(),
        &[
            "eval-retrieval",
            PROJECT,
            "--out",
            csv.to_str().unwrap(),
            "--gold",
            gold.to_str().unwrap(),
            "--max-questions",
            "20",
            "--repetitions",
            "1",
        ],
    );
    assert!(msg.contains("configurations written"), "{msg}");
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(header.contains("mode"), "{header}");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 6);
    for mode in ["ENN", "ANN", "TB-ENN", "TB-ANN"] {
        assert!(
            rows.iter().any(|r| r.starts_with(&format!("{mode},"))),
            "{mode} missing"
        );
    }
    assert!(fs::read_to_string(&gold).unwrap().lines().count() > 0);
}

#[test]
fn eval_retrieval_needs_index() {
    let dir = tempfile::tempdir().unwrap();
    let ws = synthetic_workspace(dir.path());
    let p = ws.open(PROJECT).unwrap();
    let err = mind_service::evaluation::evaluate_retrieval(&p, &Default::default()).unwrap_err();
    assert!(matches!(err, mind_service::ServiceError::NotReady(_)), "{err:?}");
}

#[test]
fn build_controlled_with_report() {
    let dir = tempfile::tempdir().unwrap();
    let fever = dir.path().join("fever.jsonl");
    let dplace = dir.path().join("dplace.jsonl");
    fs::write(
        &fever,
        concat!(
            r#"{"id":"f1","claim":"The river is long.","label":"SUPPORTS","evidence":"The river is long."}"#,
            "\n",
            r#"{"id":"f2","claim":"The river is short.","label":"REFUTES","evidence":"The river is long."}"#,
            "\n"
        ),
    )
    .unwrap();
    fs::write(
        &dplace,
        concat!(
            r#"{"id":"d1","definition":"Marriage residence.","example1":"Patrilocal","example2":"Matrilocal"}"#,
            "\n",
            r#"{"id":"d2","definition":"Settlement pattern.","example1":"Nomadic","example2":"Missing data"}"#,
            "\n"
        ),
    )
    .unwrap();
    let out = dir.path().join("controlled.jsonl");
    let report = dir.path().join("report.json");
    let confusion = dir.path().join("confusion.csv");
    let msg = run(
        dir.path(),
        &[
            "build-controlled",
            "--fever",
            fever.to_str().unwrap(),
            "--dplace",
            dplace.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--report",
            report.to_str().unwrap(),
            "--confusion",
            confusion.to_str().unwrap(),
        ],
    );
    assert!(msg.contains("macro F1"), "{msg}");
    let items: Vec<ControlledItem> = fs::read_to_string(&out)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    let labels: Vec<&str> = items.iter().map(|i| i.gold_label.short()).collect();
    assert_eq!(labels, ["ND", "CON", "CD", "NEI"]);
    let r: ClassifierReport = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(r.confusion.iter().flatten().sum::<usize>(), 4);
    assert_eq!(fs::read_to_string(&confusion).unwrap().lines().count(), 5);
}

#[test]
fn bad_arguments_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let mut out = Vec::new();
    assert!(run_from(["mind", "run"], &mut out).is_err());
    let root = dir.path().to_str().unwrap();
    assert!(run_from(["mind", "--root", root, "add-alignment", "x"], &mut out).is_err());
    assert!(run_from(
        [
            "mind",
            "--root",
            root,
            "add-corpus",
            "x",
            "--id",
            "a",
            "--language",
            "en",
            "--role",
            "judge",
            "--file",
            "f"
        ],
        &mut out
    )
    .is_err());
}
