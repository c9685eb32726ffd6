use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::ServiceError;

/// Pipeline stages in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Ingest,
    Preprocess,
    Train,
    Label,
    Index,
    Questions,
    Queries,
    Retrieve,
    Answer,
    Detect,
    Export,
}

impl Stage {
    pub const ALL: [Stage; 11] = [
        Stage::Ingest,
        Stage::Preprocess,
        Stage::Train,
        Stage::Label,
        Stage::Index,
        Stage::Questions,
        Stage::Queries,
        Stage::Retrieve,
        Stage::Answer,
        Stage::Detect,
        Stage::Export,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Preprocess => "preprocess",
            Stage::Train => "train",
            Stage::Label => "label",
            Stage::Index => "index",
            Stage::Questions => "questions",
            Stage::Queries => "queries",
            Stage::Retrieve => "retrieve",
            Stage::Answer => "answer",
            Stage::Detect => "detect",
            Stage::Export => "export",
        }
    }

    /// Every stage that must be done before this one, nearest first.
    pub fn predecessors(self) -> Vec<Stage> {
        Stage::ALL.iter().copied().filter(|s| *s < self).rev().collect()
    }

    pub fn downstream(self) -> Vec<Stage> {
        Stage::ALL.iter().copied().filter(|s| *s > self).collect()
    }

    pub fn previous(self) -> Option<Stage> {
        self.predecessors().first().copied()
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = ServiceError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| ServiceError::UnknownStage(s.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_and_names_round_trip() {
        for (i, s) in Stage::ALL.iter().enumerate() {
            assert_eq!(s.name().parse::<Stage>().unwrap(), *s);
            assert_eq!(s.predecessors().len(), i);
            assert_eq!(s.downstream().len(), Stage::ALL.len() - 1 - i);
        }
        assert_eq!(Stage::Questions.previous(), Some(Stage::Index));
        assert!("nope".parse::<Stage>().is_err());
    }
}
