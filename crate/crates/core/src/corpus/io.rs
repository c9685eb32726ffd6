use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CorpusError, Document};

/// One line of a corpus JSON Lines file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentRecord {
    pub id: String,
    pub language: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_uri: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub translation_of: Option<String>,
}

impl From<DocumentRecord> for Document {
    fn from(r: DocumentRecord) -> Self {
        Document {
            id: r.id,
            language: r.language,
            source_uri: r.source_uri,
            raw_text: r.text,
            translation_of: r.translation_of,
        }
    }
}

impl From<&Document> for DocumentRecord {
    fn from(d: &Document) -> Self {
        DocumentRecord {
            id: d.id.clone(),
            language: d.language.clone(),
            text: d.raw_text.clone(),
            source_uri: d.source_uri.clone(),
            translation_of: d.translation_of.clone(),
        }
    }
}

pub fn read_documents_jsonl(path: &Path) -> Result<Vec<Document>, CorpusError> {
    let reader = BufReader::new(fs::File::open(path)?);
    let mut docs = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: DocumentRecord = serde_json::from_str(&line).map_err(|e| CorpusError::Format {
            line: i + 1,
            message: e.to_string(),
        })?;
        docs.push(rec.into());
    }
    Ok(docs)
}

pub fn write_documents_jsonl(path: &Path, docs: &[Document]) -> Result<(), CorpusError> {
    let mut f = fs::File::create(path)?;
    for d in docs {
        let line = serde_json::to_string(&DocumentRecord::from(d)).expect("record serializes");
        writeln!(f, "{line}")?;
    }
    Ok(())
}

/// Reads a JSON list of `[anchor_id, comparison_id]` pairs.
pub fn read_alignment(path: &Path) -> Result<Vec<(String, String)>, CorpusError> {
    let raw = fs::read_to_string(path)?;
    serde_json::from_str(&raw).map_err(|e| CorpusError::Format {
        line: e.line(),
        message: e.to_string(),
    })
}
