mod common;

use std::fs;

use common::{boilerplate_topic, synthetic_workspace, PROJECT};
use mind_core::llm::Question;
use mind_service::ops::{DiscrepancyReview, TopicReview};
use mind_service::pipeline::ExportRecord;
use mind_service::project::{ProjectState, StageStatus};
use mind_service::store::{read_json, read_jsonl, write_json, ProjectLock};
use mind_service::{ServiceError, Stage};

fn statuses(ws: &mind_service::ops::Workspace) -> Vec<(Stage, StageStatus)> {
    ws.status(PROJECT)
        .unwrap()
        .stages
        .into_iter()
        .map(|v| (v.stage, v.status))
        .collect()
}

#[test]
fn full_run_recovers_planted_variants() {
    let dir = tempfile::tempdir().unwrap();
    let ws = synthetic_workspace(dir.path());
    let results = ws.run_all(PROJECT, false).unwrap();
    assert_eq!(results.len(), Stage::ALL.len());
    assert!(results.iter().all(|r| r.ran));
    assert!(statuses(&ws).iter().all(|(_, s)| *s == StageStatus::Done));

    let planted = common::corpus().planted;
    let records = ws.discrepancies(PROJECT, None).unwrap();
    let mut checked = 0;
    for r in &records {
        if let Some(p) = planted
            .iter()
            .find(|p| p.anchor_passage == r.anchor_passage_id && p.comparison_passage == r.comparison_passage_id)
        {
            use mind_service::synth::PlantedVariant::*;
            let expected = match p.variant {
                Same => "NO_DISCREPANCY",
                Negated => "CONTRADICTION",
                Cultural => "CULTURAL_DISCREPANCY",
                Missing => continue,
            };
            assert_eq!(r.model_label, expected, "{}", r.id);
            checked += 1;
        }
    }
    assert!(checked > 20, "only {checked} planted pairs retrieved");

    let again = ws.run_all(PROJECT, false).unwrap();
    assert!(again.iter().all(|r| !r.ran));
}

#[test]
fn stage_order_is_enforced() {
    let dir = tempfile::tempdir().unwrap();
    let ws = synthetic_workspace(dir.path());
    match ws.run_stage(PROJECT, "train", false) {
        Err(ServiceError::PredecessorIncomplete { stage, missing }) => {
            assert_eq!((stage, missing), (Stage::Train, Stage::Ingest));
        }
        other => panic!("{other:?}"),
    }
    ws.run_stage(PROJECT, "ingest", false).unwrap();
    assert!(matches!(
        ws.run_stage(PROJECT, "label", false),
        Err(ServiceError::PredecessorIncomplete {
            missing: Stage::Preprocess,
            ..
        })
    ));
    assert!(matches!(
        ws.run_stage(PROJECT, "polish", false),
        Err(ServiceError::UnknownStage(_))
    ));
    assert!(matches!(
        ws.export(PROJECT, false),
        Err(ServiceError::NothingToExport(_))
    ));
}

#[test]
fn forced_index_rerun_resets_retrieval_onward() {
    let dir = tempfile::tempdir().unwrap();
    let ws = synthetic_workspace(dir.path());
    ws.run_all(PROJECT, false).unwrap();
    let r = ws.run_stage(PROJECT, "index", true).unwrap();
    assert!(r.ran);
    assert_eq!(
        r.invalidated,
        vec![Stage::Retrieve, Stage::Answer, Stage::Detect, Stage::Export]
    );
    for (s, st) in statuses(&ws) {
        let expect = if s >= Stage::Retrieve {
            StageStatus::Pending
        } else {
            StageStatus::Done
        };
        assert_eq!(st, expect, "{s}");
    }
    let project_dir = dir.path().join(PROJECT);
    assert!(!project_dir.join("artifacts/retrieve").exists());
    let rerun = ws.run_all(PROJECT, false).unwrap();
    let ran: Vec<Stage> = rerun.iter().filter(|r| r.ran).map(|r| r.stage).collect();
    assert_eq!(ran, vec![Stage::Retrieve, Stage::Answer, Stage::Detect, Stage::Export]);
}

#[test]
fn config_change_marks_stage_stale() {
    let dir = tempfile::tempdir().unwrap();
    let ws = synthetic_workspace(dir.path());
    ws.run_all(PROJECT, false).unwrap();
    let toml_path = dir.path().join(PROJECT).join("mind.toml");
    let text = fs::read_to_string(&toml_path).unwrap();
    let mut cfg = mind_service::ProjectConfig::from_toml(&text).unwrap();
    cfg.retrieval.l = 2;
    fs::write(&toml_path, cfg.to_toml()).unwrap();
    let stale: Vec<Stage> = ws
        .status(PROJECT)
        .unwrap()
        .stages
        .into_iter()
        .filter(|v| v.stale)
        .map(|v| v.stage)
        .collect();
    // Dependents are reset once retrieval reruns.
    assert_eq!(stale, vec![Stage::Retrieve]);
    let ran: Vec<Stage> = ws
        .run_all(PROJECT, false)
        .unwrap()
        .into_iter()
        .filter(|r| r.ran)
        .map(|r| r.stage)
        .collect();
    assert_eq!(ran, vec![Stage::Retrieve, Stage::Answer, Stage::Detect, Stage::Export]);
}

#[test]
fn discarded_topic_yields_no_questions() {
    let dir = tempfile::tempdir().unwrap();
    let ws = synthetic_workspace(dir.path());
    ws.run_all(PROJECT, false).unwrap();
    let questions_path = dir.path().join(PROJECT).join("artifacts/questions/questions.jsonl");
    let before: Vec<Question> = read_jsonl(&questions_path).unwrap();
    let boilerplate = |q: &Question| q.passage_id.starts_with("en-t3-");
    assert!(before.iter().any(boilerplate));

    let k = boilerplate_topic(&ws);
    let topics = ws.review_topic(PROJECT, k, "discard", TopicReview::default()).unwrap();
    assert_eq!(
        topics.iter().find(|t| t.topic_id == k).unwrap().status,
        mind_core::pltm::TopicStatus::Discarded
    );
    for (s, st) in statuses(&ws) {
        let expect = if s >= Stage::Questions {
            StageStatus::Pending
        } else {
            StageStatus::Done
        };
        assert_eq!(st, expect, "{s}");
    }
    ws.run_all(PROJECT, false).unwrap();
    let after: Vec<Question> = read_jsonl(&questions_path).unwrap();
    assert!(!after.is_empty());
    assert_eq!(after.iter().filter(|q| boilerplate(q)).count(), 0);

    ws.review_topic(PROJECT, k, "restore", TopicReview::default()).unwrap();
    ws.run_all(PROJECT, false).unwrap();
    let restored: Vec<Question> = read_jsonl(&questions_path).unwrap();
    assert_eq!(restored, before);

    assert!(matches!(
        ws.review_topic(PROJECT, 99, "discard", TopicReview::default()),
        Err(ServiceError::UnknownTopic(99))
    ));
}

fn review(action: &str, label: Option<&str>) -> DiscrepancyReview {
    DiscrepancyReview {
        action: action.into(),
        label: label.map(Into::into),
        note: Some(format!("{action} by test")),
        actor: Some("tester".into()),
    }
}

#[test]
fn review_flow_and_export_filtering() {
    let dir = tempfile::tempdir().unwrap();
    let ws = synthetic_workspace(dir.path());
    ws.run_all(PROJECT, false).unwrap();
    let pending = ws.discrepancies(PROJECT, Some("pending")).unwrap();
    let total = pending.len();
    assert!(total >= 3);
    let (a, b, c) = (&pending[0].id, &pending[1].id, &pending[2].id);

    let confirmed = ws.review_discrepancy(PROJECT, a, review("confirm", None)).unwrap();
    assert_eq!(confirmed.review_state, "confirmed");
    assert!(matches!(
        ws.review_discrepancy(PROJECT, a, review("reject", None)),
        Err(ServiceError::AlreadyReviewed(_))
    ));
    let relabeled = ws
        .review_discrepancy(PROJECT, b, review("relabel", Some("CON")))
        .unwrap();
    assert_eq!(
        (relabeled.label.as_str(), relabeled.review_state.as_str()),
        ("CONTRADICTION", "relabeled")
    );
    ws.review_discrepancy(PROJECT, c, review("reject", None)).unwrap();
    assert!(matches!(
        ws.review_discrepancy(PROJECT, "nope", review("confirm", None)),
        Err(ServiceError::UnknownRecord(_))
    ));
    assert!(matches!(
        ws.review_discrepancy(PROJECT, &pending[3].id, review("discard", None)),
        Err(ServiceError::Invalid(_))
    ));
    assert_eq!(ws.discrepancies(PROJECT, Some("pending")).unwrap().len(), total - 3);

    // Review changes only the export stage.
    let st = statuses(&ws);
    assert_eq!(st.last().unwrap(), &(Stage::Export, StageStatus::Pending));
    assert!(st[..st.len() - 1].iter().all(|(_, s)| *s == StageStatus::Done));

    let parse = |s: String| -> Vec<ExportRecord> { s.lines().map(|l| serde_json::from_str(l).unwrap()).collect() };
    let default = parse(ws.export(PROJECT, false).unwrap());
    let all = parse(ws.export(PROJECT, true).unwrap());
    assert_eq!(all.len(), total);
    assert_eq!(default.len(), total - 1);
    assert!(default.iter().all(|r| &r.id != c));
    assert_eq!(all.iter().find(|r| &r.id == c).unwrap().review_state, "rejected");
    assert_eq!(
        all.iter().find(|r| &r.id == a).unwrap().reviewer_note.as_deref(),
        Some("confirm by test")
    );

    ws.run_stage(PROJECT, "export", false).unwrap();
    let staged = fs::read_to_string(dir.path().join(PROJECT).join("artifacts/export/results.jsonl")).unwrap();
    assert_eq!(staged, ws.export(PROJECT, false).unwrap());

    let log = fs::read_to_string(dir.path().join(PROJECT).join("reviews.jsonl")).unwrap();
    assert_eq!(log.lines().count(), 3);
}

#[test]
fn export_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let wa = synthetic_workspace(a.path());
    let wb = synthetic_workspace(b.path());
    wa.run_all(PROJECT, false).unwrap();
    wb.run_all(PROJECT, false).unwrap();
    let ea = wa.export(PROJECT, false).unwrap();
    assert!(!ea.is_empty());
    assert_eq!(ea, wb.export(PROJECT, false).unwrap());
}

#[test]
fn failed_stage_leaves_no_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let ws = synthetic_workspace(dir.path());
    ws.run_all(PROJECT, false).unwrap();
    // Alignment to documents that do not exist.
    ws.set_alignment(
        PROJECT,
        mind_service::ops::SetAlignment {
            pairs: Some(vec![("missing-a".into(), "missing-b".into())]),
            glossary: None,
        },
    )
    .unwrap();
    let err = ws.run_stage(PROJECT, "ingest", false).unwrap_err();
    assert!(
        matches!(
            err,
            ServiceError::StageFailure {
                stage: Stage::Ingest,
                ..
            }
        ),
        "{err:?}"
    );
    let status = ws.status(PROJECT).unwrap();
    assert_eq!(status.stages[0].status, StageStatus::Failed);
    let artifacts = dir.path().join(PROJECT).join("artifacts");
    let leftovers: Vec<_> = fs::read_dir(&artifacts)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.starts_with(".staging"))
        .collect();
    assert!(leftovers.is_empty(), "{leftovers:?}");
    assert!(matches!(
        ws.run_stage(PROJECT, "preprocess", false),
        Err(ServiceError::PredecessorIncomplete {
            missing: Stage::Ingest,
            ..
        })
    ));
}

#[test]
fn interrupted_stage_is_marked_failed_on_open() {
    let dir = tempfile::tempdir().unwrap();
    let ws = synthetic_workspace(dir.path());
    ws.run_stage(PROJECT, "ingest", false).unwrap();
    let pdir = dir.path().join(PROJECT);
    // Simulate a process that died mid-stage.
    let mut state: ProjectState = read_json(&pdir.join("state.json")).unwrap();
    let mut rec = state.record(Stage::Preprocess);
    rec.status = StageStatus::Running;
    state.stages.insert(Stage::Preprocess, rec);
    write_json(&pdir.join("state.json"), &state).unwrap();
    let staging = pdir.join("artifacts/.staging-preprocess");
    fs::create_dir_all(&staging).unwrap();
    fs::write(staging.join("passages.jsonl"), "{\"partial\":").unwrap();

    let status = ws.status(PROJECT).unwrap();
    let pre = &status.stages[1];
    assert_eq!(pre.status, StageStatus::Failed);
    assert_eq!(pre.message.as_deref(), Some("interrupted"));
    assert!(!staging.exists());
    assert!(!pdir.join("artifacts/preprocess").exists());
    ws.run_stage(PROJECT, "preprocess", false).unwrap();
}

#[test]
fn single_writer_per_project() {
    let dir = tempfile::tempdir().unwrap();
    let ws = synthetic_workspace(dir.path());
    let lock = ProjectLock::acquire(&dir.path().join(PROJECT)).unwrap();
    assert!(matches!(
        ws.run_stage(PROJECT, "ingest", false),
        Err(ServiceError::Locked { .. })
    ));
    // Readers are not blocked.
    ws.status(PROJECT).unwrap();
    drop(lock);
    ws.run_stage(PROJECT, "ingest", false).unwrap();
}

#[test]
fn unknown_project() {
    let dir = tempfile::tempdir().unwrap();
    let ws = mind_service::ops::Workspace::new(dir.path());
    assert!(matches!(ws.status("ghost"), Err(ServiceError::UnknownProject(_))));
    assert!(matches!(ws.status("../etc"), Err(ServiceError::Invalid(_))));
}
