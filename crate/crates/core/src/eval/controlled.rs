use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::llm::{ChatProvider, ChatRequest, DiscrepancyLabel, LlmError, Template};

/// Code description marking a D-PLACE value as unavailable.
pub const MISSING_DATA: &str = "Missing data";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum FeverLabel {
    Supports,
    Refutes,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeverClaim {
    pub id: String,
    pub claim: String,
    pub label: FeverLabel,
    pub evidence: String,
}

/// A D-PLACE variable definition with the descriptions of two contrasting codes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DplaceDefinition {
    pub id: String,
    pub definition: String,
    pub example1: String,
    pub example2: String,
}

impl DplaceDefinition {
    pub fn has_missing_code(&self) -> bool {
        [&self.example1, &self.example2]
            .iter()
            .any(|e| e.trim().eq_ignore_ascii_case(MISSING_DATA))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlledSource {
    FeverSupports,
    FeverRefutes,
    Dplace,
    DplaceMissing,
}

impl ControlledSource {
    pub fn gold_label(self) -> DiscrepancyLabel {
        match self {
            ControlledSource::FeverSupports => DiscrepancyLabel::NoDiscrepancy,
            ControlledSource::FeverRefutes => DiscrepancyLabel::Contradiction,
            ControlledSource::Dplace => DiscrepancyLabel::CulturalDiscrepancy,
            ControlledSource::DplaceMissing => DiscrepancyLabel::NotEnoughInfo,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ControlledItem {
    pub id: String,
    pub source: ControlledSource,
    pub question: String,
    pub answer1: String,
    pub answer2: String,
    pub gold_label: DiscrepancyLabel,
}

/// Maximum number of items per source; `None` keeps everything.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Composition {
    pub fever_supports: Option<usize>,
    pub fever_refutes: Option<usize>,
    pub dplace: Option<usize>,
    pub dplace_missing: Option<usize>,
}

impl Default for Composition {
    /// 50 / 50 / 50 / 35.
    fn default() -> Self {
        Self {
            fever_supports: Some(50),
            fever_refutes: Some(50),
            dplace: Some(50),
            dplace_missing: Some(35),
        }
    }
}

impl Composition {
    pub fn unlimited() -> Self {
        Self {
            fever_supports: None,
            fever_refutes: None,
            dplace: None,
            dplace_missing: None,
        }
    }

    fn quota(&self, s: ControlledSource) -> Option<usize> {
        match s {
            ControlledSource::FeverSupports => self.fever_supports,
            ControlledSource::FeverRefutes => self.fever_refutes,
            ControlledSource::Dplace => self.dplace,
            ControlledSource::DplaceMissing => self.dplace_missing,
        }
    }
}

/// Reads `QUESTION:`, `ANSWER1:` and `ANSWER2:` lines.
pub fn parse_triplet(output: &str) -> Result<(String, String, String), LlmError> {
    let mut q = None;
    let mut a1 = None;
    let mut a2 = None;
    for line in output.lines() {
        let line = line.trim();
        let Some((key, value)) = line.split_once(':') else {
            continue;
        };
        let value = value.trim().to_string();
        match key.trim().to_ascii_uppercase().replace(['_', ' '], "").as_str() {
            "QUESTION" => q = Some(value),
            "ANSWER1" => a1 = Some(value),
            "ANSWER2" => a2 = Some(value),
            _ => {}
        }
    }
    match (q, a1, a2) {
        (Some(q), Some(a1), Some(a2)) if !q.is_empty() && !a1.is_empty() && !a2.is_empty() => Ok((q, a1, a2)),
        _ => Err(LlmError::Parse {
            task: "controlled_conversion",
            output: output.to_string(),
        }),
    }
}

fn convert(chat: &dyn ChatProvider, prompt: String) -> Result<(String, String, String), LlmError> {
    crate::llm::with_parse_retry(|attempt| {
        let out = chat.complete(&ChatRequest::new(prompt.clone()).with_attempt(attempt))?;
        parse_triplet(&out)
    })
}

/// Converts FEVER claims and D-PLACE definitions into question/answer triplets whose
/// gold label follows from the source. Inputs are taken in order until each source's
/// quota is filled.
pub fn build_controlled_dataset(
    fever: &[FeverClaim],
    dplace: &[DplaceDefinition],
    chat: &dyn ChatProvider,
    composition: &Composition,
) -> Result<Vec<ControlledItem>, EvalError> {
    let mut items = Vec::new();
    let mut counts = [0usize; 4];
    let mut admit = |source: ControlledSource| {
        let i = source.gold_label().index();
        let open = composition.quota(source).is_none_or(|q| counts[i] < q);
        if open {
            counts[i] += 1;
        }
        open
    };
    for claim in fever {
        let source = match claim.label {
            FeverLabel::Supports => ControlledSource::FeverSupports,
            FeverLabel::Refutes => ControlledSource::FeverRefutes,
        };
        if !admit(source) {
            continue;
        }
        let label = match claim.label {
            FeverLabel::Supports => "SUPPORTS",
            FeverLabel::Refutes => "REFUTES",
        };
        let prompt = Template::FeverConversion.render(&[
            ("claim", &claim.claim),
            ("label", label),
            ("evidence", &claim.evidence),
        ])?;
        let (question, answer1, answer2) = convert(chat, prompt)?;
        items.push(ControlledItem {
            id: claim.id.clone(),
            source,
            question,
            answer1,
            answer2,
            gold_label: source.gold_label(),
        });
    }
    for def in dplace {
        let source = if def.has_missing_code() {
            ControlledSource::DplaceMissing
        } else {
            ControlledSource::Dplace
        };
        if !admit(source) {
            continue;
        }
        let prompt = Template::DplaceConversion.render(&[
            ("definition", &def.definition),
            ("example1", &def.example1),
            ("example2", &def.example2),
        ])?;
        let (question, answer1, answer2) = convert(chat, prompt)?;
        items.push(ControlledItem {
            id: def.id.clone(),
            source,
            question,
            answer1,
            answer2,
            gold_label: source.gold_label(),
        });
    }
    Ok(items)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::ScriptedChat;

    fn blair() -> FeverClaim {
        FeverClaim {
            id: "f1".into(),
            claim: "Tony Blair is not a leader of a UK political party.".into(),
            label: FeverLabel::Refutes,
            evidence: "Tony Blair was elected Labour Party leader in July 1994, following the sudden death of his predecessor, John Smith.".into(),
        }
    }

    #[test]
    fn blair_triplet() {
        let chat = ScriptedChat::always(
            "QUESTION: Is Tony Blair not a leader of a UK political party?  \nANSWER1: Yes, Tony Blair is not a leader of a UK political party.  \nANSWER2: No, Tony Blair was elected Labour Party leader in July 1994.",
        );
        let items = build_controlled_dataset(&[blair()], &[], &chat, &Composition::default()).unwrap();
        assert_eq!(items[0].question, "Is Tony Blair not a leader of a UK political party?");
        assert_eq!(items[0].gold_label, DiscrepancyLabel::Contradiction);
        assert!(chat.prompts()[0].contains("LABEL: REFUTES"));
    }

    #[test]
    fn missing_code_is_nei_and_quotas_apply() {
        let def = |id: &str, e2: &str| DplaceDefinition {
            id: id.into(),
            definition: "Floor level of the prevailing type of dwelling.".into(),
            example1: "Subterranean or semi-subterranean, ignoring cellars beneath the living quarters".into(),
            example2: e2.into(),
        };
        let chat = ScriptedChat::always("QUESTION: Q?\nANSWER1: No.\nANSWER2: Yes.");
        let defs = [
            def("d1", "Floor formed by or level with the ground itself."),
            def("d2", "Missing data"),
            def("d3", "Raised"),
        ];
        let comp = Composition {
            dplace: Some(1),
            ..Composition::default()
        };
        let items = build_controlled_dataset(&[], &defs, &chat, &comp).unwrap();
        let labels: Vec<_> = items.iter().map(|i| (i.id.as_str(), i.gold_label)).collect();
        assert_eq!(
            labels,
            [
                ("d1", DiscrepancyLabel::CulturalDiscrepancy),
                ("d2", DiscrepancyLabel::NotEnoughInfo)
            ]
        );
    }

    #[test]
    fn empty_inputs_and_parse_failure() {
        let chat = ScriptedChat::always("nonsense");
        assert!(build_controlled_dataset(&[], &[], &chat, &Composition::default())
            .unwrap()
            .is_empty());
        assert!(build_controlled_dataset(&[blair()], &[], &chat, &Composition::default()).is_err());
        assert_eq!(chat.calls(), 2);
    }

    #[test]
    fn item_serialization() {
        let item = ControlledItem {
            id: "x".into(),
            source: ControlledSource::DplaceMissing,
            question: "q".into(),
            answer1: "a".into(),
            answer2: "b".into(),
            gold_label: DiscrepancyLabel::NotEnoughInfo,
        };
        let json = serde_json::to_string(&item).unwrap();
        assert!(json.contains("\"source\":\"dplace_missing\""));
        assert!(json.contains("\"gold_label\":\"NOT_ENOUGH_INFO\""));
    }
}
