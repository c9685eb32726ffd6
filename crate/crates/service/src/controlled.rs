//! Builds the controlled discrepancy dataset and optionally scores the classifier on it.

use mind_core::eval::{
    build_controlled_dataset, score_classifier, ClassifierReport, Composition, ControlledItem, DplaceDefinition,
    FeverClaim,
};
use mind_core::llm::{
    classify_discrepancy, Answer, AnswerSide, ChatProvider, DiscrepancyLabel, Question, QuestionStatus,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ServiceError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlledOutcome {
    pub items: Vec<ControlledItem>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub predictions: Option<Vec<DiscrepancyLabel>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<ClassifierReport>,
}

fn invalid(e: impl std::fmt::Display) -> ServiceError {
    ServiceError::Invalid(e.to_string())
}

/// Runs the discrepancy classifier on one question/answer triplet.
pub fn classify_item(item: &ControlledItem, chat: &dyn ChatProvider) -> Result<DiscrepancyLabel> {
    let q = Question {
        id: item.id.clone(),
        passage_id: format!("{}/anchor", item.id),
        text: item.question.clone(),
        status: QuestionStatus::Active,
    };
    let answer = |side: AnswerSide, text: &str, suffix: &str| Answer {
        id: format!("{}/{suffix}", item.id),
        question_id: item.id.clone(),
        passage_id: format!("{}/{suffix}", item.id),
        side,
        text: text.to_string(),
        abstained: false,
    };
    let a1 = answer(AnswerSide::Anchor, &item.answer1, "a1");
    let a2 = answer(AnswerSide::Comparison, &item.answer2, "a2");
    Ok(classify_discrepancy(&q, &a1, &a2, chat).map_err(invalid)?.label)
}

pub fn build_controlled(
    fever: &[FeverClaim],
    dplace: &[DplaceDefinition],
    chat: &dyn ChatProvider,
    composition: &Composition,
    classify: bool,
) -> Result<ControlledOutcome> {
    let items = build_controlled_dataset(fever, dplace, chat, composition).map_err(invalid)?;
    if !classify {
        return Ok(ControlledOutcome {
            items,
            predictions: None,
            report: None,
        });
    }
    let predictions: Vec<DiscrepancyLabel> = items
        .par_iter()
        .map(|it| classify_item(it, chat))
        .collect::<Result<_>>()?;
    let gold: Vec<DiscrepancyLabel> = items.iter().map(|i| i.gold_label).collect();
    let report = score_classifier(&predictions, &gold).map_err(invalid)?;
    Ok(ControlledOutcome {
        items,
        predictions: Some(predictions),
        report: Some(report),
    })
}
