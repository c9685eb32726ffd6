//! Append-only review log. Topic and discrepancy states are a fold over the events.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write;
use std::path::Path;

use mind_core::llm::{DiscrepancyLabel, ReviewState};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::store::{corrupt, read_jsonl};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "id")]
pub enum ReviewTarget {
    Topic(usize),
    Discrepancy(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "action", content = "label")]
pub enum ReviewAction {
    Discard,
    Restore,
    Confirm,
    Relabel(DiscrepancyLabel),
    Reject,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewEvent {
    pub actor: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub target: ReviewTarget,
    #[serde(flatten)]
    pub action: ReviewAction,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl ReviewEvent {
    pub fn now(actor: &str, target: ReviewTarget, action: ReviewAction, note: Option<String>) -> Self {
        let timestamp = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Self {
            actor: actor.to_string(),
            timestamp,
            target,
            action,
            note,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReviewStates {
    pub discarded_topics: BTreeSet<usize>,
    /// Record id -> (state, note).
    pub discrepancies: BTreeMap<String, (ReviewState, Option<String>)>,
}

impl ReviewStates {
    pub fn apply(&mut self, e: &ReviewEvent) {
        match (&e.target, e.action) {
            (ReviewTarget::Topic(k), ReviewAction::Discard) => {
                self.discarded_topics.insert(*k);
            }
            (ReviewTarget::Topic(k), ReviewAction::Restore) => {
                self.discarded_topics.remove(k);
            }
            (ReviewTarget::Discrepancy(id), action) => {
                let state = match action {
                    ReviewAction::Confirm => ReviewState::Confirmed,
                    ReviewAction::Relabel(l) => ReviewState::Relabeled(l),
                    ReviewAction::Reject => ReviewState::Rejected,
                    // restoring a record reopens it
                    ReviewAction::Restore | ReviewAction::Discard => ReviewState::Pending,
                };
                self.discrepancies.insert(id.clone(), (state, e.note.clone()));
            }
            _ => {}
        }
    }

    pub fn replay<'a>(events: impl IntoIterator<Item = &'a ReviewEvent>) -> Self {
        let mut s = Self::default();
        for e in events {
            s.apply(e);
        }
        s
    }

    pub fn discrepancy(&self, id: &str) -> (ReviewState, Option<String>) {
        self.discrepancies
            .get(id)
            .cloned()
            .unwrap_or((ReviewState::Pending, None))
    }
}

pub fn read_events(path: &Path) -> Result<Vec<ReviewEvent>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    read_jsonl(path)
}

pub fn append_event(path: &Path, event: &ReviewEvent) -> Result<()> {
    let mut line = serde_json::to_vec(event).expect("event serializes");
    line.push(b'\n');
    let mut f = fs::OpenOptions::new().create(true).append(true).open(path)?;
    f.write_all(&line)?;
    f.sync_all().map_err(|e| corrupt(path, e))?;
    Ok(())
}
