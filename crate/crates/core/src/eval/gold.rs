use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::llm::{ChatProvider, ChatRequest, LlmError, Template};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Yes,
    No,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldJudgment {
    pub question_id: String,
    pub passage_id: String,
    /// Keyed by `provider_id/model`.
    pub verdicts: BTreeMap<String, Verdict>,
    pub is_gold: bool,
}

/// Accepts exactly "Yes" or "No" in any case, optionally after `RELEVANT:`.
pub fn parse_relevance(output: &str) -> Result<Verdict, LlmError> {
    let t = output.trim();
    let t = match t.get(..9) {
        Some(p) if p.eq_ignore_ascii_case("RELEVANT:") => t[9..].trim(),
        _ => t,
    };
    let t = t.trim_end_matches('.');
    match t.to_ascii_uppercase().as_str() {
        "YES" => Ok(Verdict::Yes),
        "NO" => Ok(Verdict::No),
        _ => Err(LlmError::Parse {
            task: "relevance_judgment",
            output: output.to_string(),
        }),
    }
}

fn judge_one(judge: &dyn ChatProvider, prompt: &str) -> Result<Verdict, LlmError> {
    match judge
        .complete(&ChatRequest::new(prompt))
        .and_then(|o| parse_relevance(&o))
    {
        Err(LlmError::Parse { .. }) => {
            let out = judge.complete(&ChatRequest::new(prompt).with_attempt(1))?;
            parse_relevance(&out)
        }
        other => other,
    }
}

/// A candidate is gold only when every judge answers Yes. Candidates are judged in
/// parallel; results keep the candidate order.
pub fn judge_gold(
    question_id: &str,
    question: &str,
    candidates: &[(String, String)],
    judges: &[&dyn ChatProvider],
) -> Result<Vec<GoldJudgment>, EvalError> {
    if judges.is_empty() {
        return Err(EvalError::NoJudges);
    }
    candidates
        .par_iter()
        .map(|(passage_id, text)| {
            let prompt = Template::RelevanceJudgment.render(&[("passage", text), ("question", question)])?;
            let mut verdicts = BTreeMap::new();
            for judge in judges {
                let key = format!("{}/{}", judge.provider_id(), judge.model_name());
                verdicts.insert(key, judge_one(*judge, &prompt)?);
            }
            let is_gold = verdicts.values().all(|v| *v == Verdict::Yes);
            Ok(GoldJudgment {
                question_id: question_id.to_string(),
                passage_id: passage_id.clone(),
                verdicts,
                is_gold,
            })
        })
        .collect()
}
