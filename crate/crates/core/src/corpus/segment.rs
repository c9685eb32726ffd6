use serde::{Deserialize, Serialize};

use super::{Document, Passage};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode", content = "sentences")]
pub enum SegmentMode {
    /// One passage per line of raw text.
    #[default]
    Newline,
    /// Consecutive groups of `n` sentences, for text without paragraph breaks.
    FixedWindow(usize),
}

fn is_ill_encoded(c: char) -> bool {
    c == '\u{FFFD}' || (c.is_control() && !c.is_whitespace())
}

fn clean(segment: &str) -> Option<String> {
    let cleaned: String = segment.chars().filter(|&c| !is_ill_encoded(c)).collect();
    let trimmed = cleaned.trim();
    (!trimmed.is_empty()).then(|| trimmed.to_string())
}

/// Splits text after sentence-final punctuation followed by whitespace, and at newlines.
fn sentences(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut chars = text.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        let boundary = match c {
            '\n' => Some(i + 1),
            '.' | '!' | '?' => match chars.peek() {
                Some(&(j, n)) if n.is_whitespace() => Some(j),
                None => Some(i + c.len_utf8()),
                _ => None,
            },
            _ => None,
        };
        if let Some(end) = boundary {
            out.push(&text[start..end]);
            start = end;
        }
    }
    if start < text.len() {
        out.push(&text[start..]);
    }
    out
}

pub fn segment_document(doc: &Document, mode: SegmentMode) -> Vec<Passage> {
    let texts: Vec<String> = match mode {
        SegmentMode::Newline => doc.raw_text.split('\n').filter_map(clean).collect(),
        SegmentMode::FixedWindow(n) => {
            let n = n.max(1);
            let sents: Vec<String> = sentences(&doc.raw_text).into_iter().filter_map(clean).collect();
            sents.chunks(n).map(|c| c.join(" ")).collect()
        }
    };
    texts
        .into_iter()
        .enumerate()
        .map(|(i, text)| Passage {
            id: Passage::make_id(&doc.id, i),
            document_id: doc.id.clone(),
            language: doc.language.clone(),
            text,
            tokens: Vec::new(),
            index_in_document: i,
        })
        .collect()
}
