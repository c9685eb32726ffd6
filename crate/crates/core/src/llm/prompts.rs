//! Prompt templates with named `{placeholder}` slots.

use std::collections::{BTreeSet, HashMap};

use super::LlmError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Template {
    TopicLabeling,
    QuestionGeneration,
    QueryGeneration,
    RelevanceJudgment,
    AnswerGeneration,
    DiscrepancyDetection,
    FeverConversion,
    DplaceConversion,
    Nli,
    Translation,
}

impl Template {
    pub const ALL: [Template; 10] = [
        Template::TopicLabeling,
        Template::QuestionGeneration,
        Template::QueryGeneration,
        Template::RelevanceJudgment,
        Template::AnswerGeneration,
        Template::DiscrepancyDetection,
        Template::FeverConversion,
        Template::DplaceConversion,
        Template::Nli,
        Template::Translation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Template::TopicLabeling => "topic_labeling",
            Template::QuestionGeneration => "question_generation",
            Template::QueryGeneration => "query_generation",
            Template::RelevanceJudgment => "relevance_judgment",
            Template::AnswerGeneration => "answer_generation",
            Template::DiscrepancyDetection => "discrepancy_detection",
            Template::FeverConversion => "fever_conversion",
            Template::DplaceConversion => "dplace_conversion",
            Template::Nli => "nli",
            Template::Translation => "translation",
        }
    }

    pub fn text(self) -> &'static str {
        match self {
            Template::TopicLabeling => include_str!("../../prompts/topic_labeling.txt"),
            Template::QuestionGeneration => include_str!("../../prompts/question_generation.txt"),
            Template::QueryGeneration => include_str!("../../prompts/query_generation.txt"),
            Template::RelevanceJudgment => include_str!("../../prompts/relevance_judgment.txt"),
            Template::AnswerGeneration => include_str!("../../prompts/answer_generation.txt"),
            Template::DiscrepancyDetection => {
                include_str!("../../prompts/discrepancy_detection.txt")
            }
            Template::FeverConversion => include_str!("../../prompts/fever_conversion.txt"),
            Template::DplaceConversion => include_str!("../../prompts/dplace_conversion.txt"),
            Template::Nli => include_str!("../../prompts/nli.txt"),
            Template::Translation => include_str!("../../prompts/translation.txt"),
        }
    }

    /// Placeholder names in order of first appearance, deduplicated.
    pub fn placeholders(self) -> Vec<&'static str> {
        let mut seen = BTreeSet::new();
        scan(self.text())
            .filter_map(|piece| match piece {
                Piece::Slot(name) if seen.insert(name) => Some(name),
                _ => None,
            })
            .collect()
    }

    /// Fills every placeholder in one pass; values are inserted literally, so braces in
    /// values are never re-expanded. Missing or unknown names are errors.
    pub fn render(self, values: &[(&str, &str)]) -> Result<String, LlmError> {
        let map: HashMap<&str, &str> = values.iter().copied().collect();
        let expected = self.placeholders();
        if let Some((unknown, _)) = values.iter().find(|(k, _)| !expected.contains(k)) {
            return Err(LlmError::Template(format!(
                "{}: unknown placeholder {unknown:?}",
                self.name()
            )));
        }
        let mut out = String::with_capacity(self.text().len() + 256);
        for piece in scan(self.text()) {
            match piece {
                Piece::Text(t) => out.push_str(t),
                Piece::Slot(name) => match map.get(name) {
                    Some(v) => out.push_str(v),
                    None => {
                        return Err(LlmError::Template(format!(
                            "{}: missing value for {{{name}}}",
                            self.name()
                        )))
                    }
                },
            }
        }
        Ok(out)
    }
}

enum Piece<'a> {
    Text(&'a str),
    Slot(&'a str),
}

fn scan(text: &str) -> impl Iterator<Item = Piece<'_>> {
    let mut rest = text;
    std::iter::from_fn(move || {
        if rest.is_empty() {
            return None;
        }
        if let Some(open) = rest.find('{') {
            if open > 0 {
                let (t, r) = rest.split_at(open);
                rest = r;
                return Some(Piece::Text(t));
            }
            if let Some(close) = rest.find('}') {
                let name = &rest[1..close];
                if !name.is_empty() && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                    rest = &rest[close + 1..];
                    return Some(Piece::Slot(name));
                }
            }
            let (t, r) = rest.split_at(1);
            rest = r;
            return Some(Piece::Text(t));
        }
        let t = rest;
        rest = "";
        Some(Piece::Text(t))
    })
}
