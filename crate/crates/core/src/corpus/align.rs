use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::{Corpus, CorpusError, Document, Tuple, TupleMember};

/// How anchor and comparison documents are paired into training tuples.
#[derive(Debug, Clone)]
pub enum Alignment {
    /// (anchor document id, comparison document id) pairs from a comparable corpus.
    Explicit(Vec<(String, String)>),
    /// Every document is paired with its machine translation into the other language.
    /// Translation documents carry `translation_of`.
    ViaTranslation {
        anchor_translations: Corpus,
        comparison_translations: Corpus,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TupleSet {
    pub tuples: Vec<Tuple>,
    /// (corpus id, document id) of documents that ended up in no tuple.
    pub unaligned: Vec<(String, String)>,
}

fn member(corpus: &Corpus, doc: &Document, synthetic: bool) -> TupleMember {
    TupleMember {
        corpus_id: corpus.id.clone(),
        document_id: doc.id.clone(),
        language: doc.language.clone(),
        synthetic,
    }
}

fn translations_by_source<'a>(
    translations: &'a Corpus,
    originals: &Corpus,
) -> Result<HashMap<&'a str, &'a Document>, CorpusError> {
    let mut out = HashMap::new();
    for t in &translations.documents {
        let Some(src) = t.translation_of.as_deref() else {
            return Err(CorpusError::DanglingAlignment(format!(
                "{} (translation without a source id)",
                t.id
            )));
        };
        if originals.document(src).is_none() {
            return Err(CorpusError::DanglingAlignment(src.to_string()));
        }
        out.entry(src).or_insert(t);
    }
    Ok(out)
}

pub fn form_tuples(anchor: &Corpus, comparison: &Corpus, alignment: &Alignment) -> Result<TupleSet, CorpusError> {
    let mut tuples = Vec::new();
    let mut used: HashSet<(&str, &str)> = HashSet::new();
    match alignment {
        Alignment::Explicit(pairs) => {
            for (a, c) in pairs {
                let ad = anchor
                    .document(a)
                    .ok_or_else(|| CorpusError::DanglingAlignment(a.clone()))?;
                let cd = comparison
                    .document(c)
                    .ok_or_else(|| CorpusError::DanglingAlignment(c.clone()))?;
                used.insert((anchor.id.as_str(), ad.id.as_str()));
                used.insert((comparison.id.as_str(), cd.id.as_str()));
                tuples.push(Tuple {
                    members: vec![member(anchor, ad, false), member(comparison, cd, false)],
                });
            }
        }
        Alignment::ViaTranslation {
            anchor_translations,
            comparison_translations,
        } => {
            let a_tr = translations_by_source(anchor_translations, anchor)?;
            let c_tr = translations_by_source(comparison_translations, comparison)?;
            for d in &anchor.documents {
                if let Some(t) = a_tr.get(d.id.as_str()) {
                    used.insert((anchor.id.as_str(), d.id.as_str()));
                    tuples.push(Tuple {
                        members: vec![member(anchor, d, false), member(anchor_translations, t, true)],
                    });
                }
            }
            for d in &comparison.documents {
                if let Some(t) = c_tr.get(d.id.as_str()) {
                    used.insert((comparison.id.as_str(), d.id.as_str()));
                    tuples.push(Tuple {
                        members: vec![member(comparison_translations, t, true), member(comparison, d, false)],
                    });
                }
            }
        }
    }
    let unaligned = [anchor, comparison]
        .iter()
        .flat_map(|c| {
            c.documents
                .iter()
                .filter(|d| !used.contains(&(c.id.as_str(), d.id.as_str())))
                .map(|d| (c.id.clone(), d.id.clone()))
                .collect::<Vec<_>>()
        })
        .collect();
    Ok(TupleSet { tuples, unaligned })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::CorpusRole;

    fn corpus(id: &str, lang: &str, role: CorpusRole, ids: &[&str]) -> Corpus {
        let docs = ids
            .iter()
            .map(|d| Document::new(*d, lang, format!("text of {d}")))
            .collect();
        Corpus::new(id, lang, role, docs).unwrap()
    }

    #[test]
    fn explicit_pairs() {
        let a = corpus("en", "en", CorpusRole::Anchor, &["a1", "a2", "a3"]);
        let c = corpus("es", "es", CorpusRole::Comparison, &["c1", "c2"]);
        let pairs = vec![("a1".into(), "c1".into()), ("a2".into(), "c2".into())];
        let set = form_tuples(&a, &c, &Alignment::Explicit(pairs)).unwrap();
        assert_eq!(set.tuples.len(), 2);
        assert!(set.tuples.iter().all(|t| t.members.len() == 2));
        assert_eq!(set.unaligned, vec![("en".to_string(), "a3".to_string())]);
    }

    #[test]
    fn dangling_pair() {
        let a = corpus("en", "en", CorpusRole::Anchor, &["a1"]);
        let c = corpus("es", "es", CorpusRole::Comparison, &["c1"]);
        let pairs = vec![("a1".into(), "nope".into())];
        assert!(matches!(
            form_tuples(&a, &c, &Alignment::Explicit(pairs)),
            Err(CorpusError::DanglingAlignment(id)) if id == "nope"
        ));
    }

    #[test]
    fn via_translation_marks_synthetic_members() {
        let a = corpus("en", "en", CorpusRole::Anchor, &["a1"]);
        let c = corpus("es", "es", CorpusRole::Comparison, &["c1", "c2"]);
        let mut at = corpus("en2es", "es", CorpusRole::Translation, &["t-a1"]);
        at.documents[0].translation_of = Some("a1".into());
        let mut ct = corpus("es2en", "en", CorpusRole::Translation, &["t-c1"]);
        ct.documents[0].translation_of = Some("c1".into());
        let set = form_tuples(
            &a,
            &c,
            &Alignment::ViaTranslation {
                anchor_translations: at,
                comparison_translations: ct,
            },
        )
        .unwrap();
        assert_eq!(set.tuples.len(), 2);
        let first = &set.tuples[0].members;
        assert_eq!((first[0].document_id.as_str(), first[0].synthetic), ("a1", false));
        assert_eq!((first[1].document_id.as_str(), first[1].synthetic), ("t-a1", true));
        assert_eq!(set.unaligned, vec![("es".to_string(), "c2".to_string())]);
    }
}
