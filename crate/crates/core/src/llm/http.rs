use std::time::Duration;

use serde::Deserialize;
use serde_json::json;

use super::prompts::Template;
use super::provider::{ChatProvider, ChatRequest, NliLabel, NliProvider};
use super::{with_parse_retry, LlmError};

/// Chat-completions client for OpenAI-compatible servers (hosted or local).
pub struct HttpChatProvider {
    base_url: String,
    model: String,
    api_key: Option<String>,
    provider_id: String,
    client: reqwest::blocking::Client,
}

#[derive(Deserialize)]
struct CompletionResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: Message,
}

#[derive(Deserialize)]
struct Message {
    content: String,
}

impl HttpChatProvider {
    pub fn new(base_url: impl Into<String>, model: impl Into<String>, api_key: Option<String>) -> Self {
        let base_url = base_url.into().trim_end_matches('/').to_string();
        let model = model.into();
        Self {
            provider_id: format!("http:{base_url}"),
            base_url,
            model,
            api_key,
            client: reqwest::blocking::Client::builder()
                .timeout(Duration::from_secs(600))
                .build()
                .expect("http client builds"),
        }
    }

    pub fn request_body(&self, request: &ChatRequest) -> serde_json::Value {
        let mut messages = Vec::new();
        if let Some(system) = &request.system {
            messages.push(json!({"role": "system", "content": system}));
        }
        messages.push(json!({"role": "user", "content": request.prompt}));
        json!({
            "model": self.model,
            "messages": messages,
            "temperature": request.decoding.temperature,
            "top_p": request.decoding.top_p,
            "frequency_penalty": request.decoding.frequency_penalty,
            "seed": request.decoding.seed,
        })
    }
}

impl ChatProvider for HttpChatProvider {
    fn provider_id(&self) -> &str {
        &self.provider_id
    }

    fn model_name(&self) -> &str {
        &self.model
    }

    fn complete(&self, request: &ChatRequest) -> Result<String, LlmError> {
        let url = format!("{}/chat/completions", self.base_url);
        let mut req = self
            .client
            .post(&url)
            .header(
                "Idempotency-Key",
                request.idempotency_key(&self.provider_id, &self.model),
            )
            .json(&self.request_body(request));
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| LlmError::Provider(format!("{url}: {e}")))?;
        let status = resp.status();
        if !status.is_success() {
            let body = resp.text().unwrap_or_default();
            return Err(LlmError::Provider(format!("{url}: HTTP {status}: {body}")));
        }
        let parsed: CompletionResponse = resp
            .json()
            .map_err(|e| LlmError::Provider(format!("{url}: malformed response: {e}")))?;
        parsed
            .choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .ok_or_else(|| LlmError::Provider(format!("{url}: no choices in response")))
    }
}

/// NLI classification through a chat model.
pub struct ChatNli<P> {
    chat: P,
}

impl<P: ChatProvider> ChatNli<P> {
    pub fn new(chat: P) -> Self {
        Self { chat }
    }
}

pub(crate) fn parse_nli(output: &str) -> Result<NliLabel, LlmError> {
    let word = output
        .trim()
        .trim_start_matches("LABEL:")
        .trim()
        .trim_matches(|c: char| !c.is_ascii_alphabetic())
        .to_ascii_uppercase();
    match word.as_str() {
        "ENTAILMENT" | "ENTAIL" | "ENTAILED" => Ok(NliLabel::Entail),
        "NEUTRAL" => Ok(NliLabel::Neutral),
        "CONTRADICTION" | "CONTRADICT" | "CONTRADICTORY" => Ok(NliLabel::Contradict),
        _ => Err(LlmError::Parse {
            task: "nli",
            output: output.to_string(),
        }),
    }
}

impl<P: ChatProvider> NliProvider for ChatNli<P> {
    fn classify(&self, premise: &str, hypothesis: &str) -> Result<NliLabel, LlmError> {
        let prompt = Template::Nli.render(&[("premise", premise), ("hypothesis", hypothesis)])?;
        with_parse_retry(|attempt| {
            let out = self
                .chat
                .complete(&ChatRequest::new(prompt.clone()).with_attempt(attempt))?;
            parse_nli(&out)
        })
    }
}
